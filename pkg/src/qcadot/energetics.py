"""Power flow and the energy budget of switching events.

The total power into the cell splits into the work done by the driving
electrodes, P_work = Tr(rho dH_E/dt), and the exchange with the bath,
-P_switch = Tr(D H). The two ligand channels Tr(rho dH_EL/dt) and
Tr(rho dH_L/dt) are equal and opposite (energy sloshing between electron
and vibration), so they cancel in the total but are reported for
bookkeeping. A switching event then dissipates

    E_diss = E_switch + E_excess

with E_switch the bath integral over the sweep and E_excess the residual
energy above the self-consistent equilibrium at the final bias, which
relaxes away after the drive stops.

Units: energies in gamma, times in T_gamma, powers in gamma/T_gamma.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, dissipator
from .model import (
    BlochState,
    HamiltonianParts,
    ModelParams,
    build_hamiltonian,
    expected_energy,
)
from .steady import SteadySolution, enumerate_steady_states

__all__ = [
    "PowerChannels",
    "DissipationReport",
    "power_channels",
    "adiabaticity_beta",
    "excess_energy_isolated",
    "excess_energy_open",
    "nearest_steady_solution",
    "dissipation_report",
]


@dataclass(frozen=True)
class PowerChannels:
    """Instantaneous power decomposition; p3 + p4 = 0 identically."""

    p_total: float
    p_work: float
    p_switch: float
    p3: float
    p4: float


@dataclass(frozen=True)
class DissipationReport:
    """Energy ledger of one switching event: e_diss = e_switch + e_excess."""

    e_switch: float
    e_excess: float
    e_diss: float
    beta: float


def power_channels(
    s: BlochState,
    ds_dt: np.ndarray,
    h: HamiltonianParts,
    d_delta_dt: float,
    p: ModelParams,
) -> PowerChannels:
    """Power channels at one instant from a consistent (state, ds/dt, H).

    p_switch is the power flowing from the cell into the environment,
    -Tr(D H), evaluated by direct matrix arithmetic on the Lindblad
    dissipator. ds_dt (per T_gamma) supplies d<sz>/dt for the ligand
    channels.
    """
    d = dissipator(s, h, p.t_d, p.k_t)
    p_switch = -float(np.real(np.trace(d @ h.h_total)))
    p_work = 0.5 * d_delta_dt * (1.0 + s.z)
    q = 0.5 * p.lam * s.z * float(ds_dt[2])
    return PowerChannels(
        p_total=p_work - p_switch,
        p_work=p_work,
        p_switch=p_switch,
        p3=-q,
        p4=q,
    )


def adiabaticity_beta(
    p: ModelParams, t_s: float, delta_i: float, delta_f: float
) -> float:
    """Dimensionless adiabaticity 2*pi*gamma^2*T_s / (hbar |delta_f - delta_i|).

    t_s is in T_gamma (= pi*hbar/gamma internally). Large beta means slow
    sweeps; the isolated excess energy falls off as exp(-beta).
    """
    if not t_s > 0:
        raise ValueError(f"t_s must be > 0, got {t_s}")
    if delta_f == delta_i:
        raise ValueError("sweep range is zero; beta is undefined")
    t_internal = t_s * math.pi / p.gamma  # hbar = 1
    return 2.0 * math.pi * p.gamma**2 * t_internal / abs(delta_f - delta_i)


def nearest_steady_solution(
    state: BlochState,
    p: ModelParams,
    delta: float,
    n_starts: int = 64,
    seed: int = 0,
) -> SteadySolution:
    """Steady-state branch closest to ``state`` in Bloch distance."""
    sols = enumerate_steady_states(p, delta, n_starts=n_starts, seed=seed)
    return min(sols.solutions, key=lambda sol: sol.state.distance(state))


def excess_energy_isolated(
    traj: Trajectory,
    p: ModelParams | None = None,
    self_consistent: bool = False,
) -> float:
    """Residual energy <E>(T_s) - E_1(T_s) of an isolated switching run.

    By default E_1 is the ground energy of the final nonlinear
    Hamiltonian evaluated at the realized final <sigma_z> (the only H
    defined at that instant). With self_consistent=True, E_1 is instead
    taken from the zero-temperature self-consistent solution nearest the
    final state, which requires ``p``.
    """
    if not self_consistent:
        return float(traj.e_expected[-1] - traj.e1[-1])
    if p is None:
        raise ValueError("the self-consistent variant needs model parameters")
    delta_f = float(traj.delta[-1])
    cold = dataclasses.replace(p, k_t=0.0)
    sol = nearest_steady_solution(traj.final_state, cold, delta_f)
    h_ss = build_hamiltonian(cold, delta_f, sol.state.z)
    return float(traj.e_expected[-1]) - h_ss.eigvals[0]


def excess_energy_open(
    final_state: BlochState,
    p: ModelParams,
    delta_final: float,
    n_starts: int = 64,
    seed: int = 0,
) -> float:
    """<E> of the final state minus <E_ss> of the equilibrium it relaxes to.

    When several self-consistent branches coexist at delta_final, the one
    nearest the final state in Bloch distance is the one the cell will
    actually settle into.
    """
    sol = nearest_steady_solution(final_state, p, delta_final, n_starts, seed)
    h = build_hamiltonian(p, delta_final, final_state.z)
    return expected_energy(final_state, h) - sol.energy


def dissipation_report(
    traj: Trajectory, p: ModelParams, delta_final: float
) -> DissipationReport:
    """Energy budget of a single-sweep trajectory covering [0, T_s].

    E_switch integrates the switching power over the integrator's
    accepted steps (trapezoid); E_excess compares the final state against
    the nearest self-consistent equilibrium at the final bias.
    """
    e_switch = traj.e_switch_total
    e_excess = excess_energy_open(traj.final_state, p, delta_final)
    t_s = float(traj.t[-1] - traj.t[0])
    beta = adiabaticity_beta(p, t_s, float(traj.delta[0]), float(traj.delta[-1]))
    return DissipationReport(
        e_switch=e_switch,
        e_excess=e_excess,
        e_diss=e_switch + e_excess,
        beta=beta,
    )
