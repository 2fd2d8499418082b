"""qcadot: switching dynamics of a bistable two-dot molecular QCA cell.

A mobile electron tunnels between two charge centers under an applied
bias while the surrounding ligands relax around the occupied site
(Marcus reorganization energy). The package computes self-consistent
thermal steady states, time-dependent polarization under bias sweeps
(hysteresis, single-molecule memory), and the full energy budget of a
switching event for cells coupled to a thermal bath.
"""

from .model import (
    BlochState,
    HamiltonianParts,
    InvalidStateError,
    ModelParams,
    bloch_to_density,
    build_hamiltonian,
    density_to_bloch,
    expected_energy,
    onsite_energies,
)
from .steady import (
    SolutionSet,
    SteadySolution,
    enumerate_steady_states,
    gibbs_state,
    solve_self_consistent,
    steady_polarization_curve,
)
from .waveforms import (
    BiasWaveform,
    Segment,
    hysteresis_protocol,
    memory_protocol,
)
from .dynamics import (
    IntegratorConfig,
    StiffnessError,
    Trajectory,
    bloch_derivative,
    dissipator,
    integrate,
    lindblad_ops,
    relax_to_equilibrium,
)
from .energetics import (
    DissipationReport,
    PowerChannels,
    adiabaticity_beta,
    dissipation_report,
    excess_energy_isolated,
    excess_energy_open,
    power_channels,
)

__version__ = "0.1.0"
