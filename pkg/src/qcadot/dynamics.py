"""Time evolution of the cell: nonlinear Lindblad equation on the Bloch vector.

The density matrix is carried as the real Bloch 3-vector, which keeps
the state Hermitian and trace-one by construction. The Hamiltonian is
rebuilt at every integrator stage because it depends on both the bias
delta(t) and the instantaneous <sigma_z>; the thermal Lindblad channels
live on the instantaneous eigenbasis, so decay always runs from the
current excited state to the current ground state with the detailed
balance factor exp(-gap/kT) for the reverse channel. An isolated cell
(t_d = inf) evolves unitarily.

Times are in units of T_gamma, powers in gamma/T_gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .model import (
    INTERNAL_TIME_PER_TGAMMA,
    BlochState,
    HamiltonianParts,
    InvalidStateError,
    ModelParams,
    bloch_to_density,
)
from .waveforms import BiasWaveform, Segment

__all__ = [
    "StiffnessError",
    "IntegratorConfig",
    "Trajectory",
    "RelaxResult",
    "lindblad_ops",
    "dissipator",
    "bloch_derivative",
    "integrate",
    "relax_to_equilibrium",
]

_PI = INTERNAL_TIME_PER_TGAMMA
H_FLOOR_TGAMMA = 1e-12


class StiffnessError(RuntimeError):
    """Step size underflow; the requested tolerances cannot be met."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control for the adaptive RK45 integrator.

    dt_max is in T_gamma; None picks min(T_gamma/20, t_d/20,
    duration/1000) per segment, which resolves Rabi precession, bath
    relaxation and the bias sweep simultaneously. record_stride thins the
    stored samples; the energy accumulators always use every accepted
    step.
    """

    dt_max: Optional[float] = None
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    record_stride: int = 1

    def __post_init__(self):
        if self.dt_max is not None and not self.dt_max > 0:
            raise ValueError("dt_max must be > 0")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass
class Trajectory:
    """Recorded time series of one integration.

    Columns are aligned arrays; `s` is (n, 3) with the Bloch components.
    e1/e2 are the instantaneous eigenenergies of the (state-dependent)
    Hamiltonian along the trajectory. e_switch_total and
    p_total_integral are trapezoid integrals of p_switch and
    (p_work - p_switch) over every accepted step, independent of the
    recording stride.
    """

    t: np.ndarray
    delta: np.ndarray
    s: np.ndarray
    e_expected: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    p_work: np.ndarray
    p_switch: np.ndarray
    p3: np.ndarray
    p4: np.ndarray
    n_accepted: int
    n_rejected: int
    n_clipped: int
    e_switch_total: float
    p_total_integral: float

    @property
    def final_state(self) -> BlochState:
        return BlochState.from_array(self.s[-1])

    @property
    def polarization(self) -> np.ndarray:
        return self.s[:, 2]

    def state(self, i: int) -> BlochState:
        return BlochState.from_array(self.s[i])

    def __len__(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class RelaxResult:
    state: BlochState
    elapsed: float
    converged: bool


def lindblad_ops(
    h: HamiltonianParts, t_d: float, k_t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Thermal jump operators (decay L1, excitation L2) for a frozen H.

    L1 = sqrt(1/t_d) |u1><u2| empties the excited state; L2 carries the
    Boltzmann amplitude exp(-gap/(2 kT)) on the reverse transition so the
    two rates obey detailed balance. Both vanish for an isolated cell,
    and L2 alone vanishes at kT = 0. Rates are per T_gamma.
    """
    if math.isinf(t_d):
        return np.zeros((2, 2)), np.zeros((2, 2))
    if not t_d > 0:
        raise ValueError(f"t_d must be > 0 or inf, got {t_d}")
    if k_t < 0:
        raise ValueError(f"k_t must be >= 0, got {k_t}")
    u1 = h.eigvecs[:, 0]
    u2 = h.eigvecs[:, 1]
    amp = math.sqrt(1.0 / t_d)
    l1 = amp * np.outer(u1, u2)
    if k_t == 0.0:
        l2 = np.zeros((2, 2))
    else:
        l2 = amp * math.exp(-h.gap / (2.0 * k_t)) * np.outer(u2, u1)
    return l1, l2


def dissipator(
    s: BlochState, h: HamiltonianParts, t_d: float, k_t: float
) -> np.ndarray:
    """Lindblad dissipator sum_k (L rho L+ - {L+L, rho}/2), per T_gamma.

    Hermitian and traceless; zero at the Gibbs state of ``h`` and for an
    isolated cell.
    """
    rho = bloch_to_density(s)
    out = np.zeros((2, 2), dtype=complex)
    for op in lindblad_ops(h, t_d, k_t):
        ld = op.conj().T
        out += op @ rho @ ld - 0.5 * (ld @ op @ rho + rho @ ld @ op)
    return out


def bloch_derivative(
    s: BlochState, t: float, w: BiasWaveform, p: ModelParams
) -> np.ndarray:
    """ds/dt (per T_gamma) of the full nonlinear Lindblad flow at time t.

    The Hamiltonian is built from the bias at t and the state's own
    <sigma_z>, which is the mean-field nonlinearity.
    """
    delta, _ = w.eval(t)
    inv_td = 0.0 if math.isinf(p.t_d) else 1.0 / (p.t_d * _PI)
    f = K.bloch_rhs(delta, s.x, s.y, s.z, p.gamma, p.lam, inv_td, p.k_t)
    return _PI * np.array(f)


def _segment_arrays(w: BiasWaveform, p: ModelParams, cfg: IntegratorConfig):
    bounds = w.boundaries() * _PI
    t0 = bounds[:-1]
    t1 = bounds[1:]
    d0 = np.array([seg.delta_start for seg in w.segments])
    slope = np.array([seg.slope / _PI for seg in w.segments])
    if cfg.dt_max is not None:
        dtmax = np.full(len(w.segments), cfg.dt_max * _PI)
    else:
        cap = 1.0 / 20.0
        if not math.isinf(p.t_d):
            cap = min(cap, p.t_d / 20.0)
        dtmax = np.array(
            [min(cap, seg.duration / 1000.0) * _PI for seg in w.segments]
        )
    return t0, t1, d0, slope, dtmax


def _run_kernel(s0, w, p, cfg, quiet_tol):
    t0, t1, d0, slope, dtmax = _segment_arrays(w, p, cfg)
    inv_td = 0.0 if math.isinf(p.t_d) else 1.0 / (p.t_d * _PI)
    return K._integrate(
        s0.as_array(),
        t0,
        t1,
        d0,
        slope,
        dtmax,
        p.gamma,
        p.lam,
        inv_td,
        p.k_t,
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.record_stride,
        quiet_tol / _PI if quiet_tol > 0 else 0.0,
        H_FLOOR_TGAMMA * _PI,
    )


def _trajectory_from(rec, n_acc, n_rej, n_clip, esw, ptot) -> Trajectory:
    return Trajectory(
        t=rec[:, K.COL_T] / _PI,
        delta=rec[:, K.COL_DELTA].copy(),
        s=rec[:, K.COL_X : K.COL_Z + 1].copy(),
        e_expected=rec[:, K.COL_E].copy(),
        e1=rec[:, K.COL_E1].copy(),
        e2=rec[:, K.COL_E2].copy(),
        p_work=rec[:, K.COL_PWORK] * _PI,
        p_switch=rec[:, K.COL_PSWITCH] * _PI,
        p3=rec[:, K.COL_P3] * _PI,
        p4=rec[:, K.COL_P4] * _PI,
        n_accepted=int(n_acc),
        n_rejected=int(n_rej),
        n_clipped=int(n_clip),
        e_switch_total=float(esw),
        p_total_integral=float(ptot),
    )


def integrate(
    s0: BlochState,
    w: BiasWaveform,
    p: ModelParams,
    cfg: Optional[IntegratorConfig] = None,
) -> Trajectory:
    """Integrate the cell over a bias waveform from state s0 at t = 0.

    Raises StiffnessError if the step size underflows (1e-12 T_gamma);
    the problem is non-stiff in the intended parameter ranges, so the
    tripwire firing indicates pathological inputs.
    """
    cfg = cfg or IntegratorConfig()
    if s0.norm > 1.0 + 1e-9:
        raise InvalidStateError(f"initial Bloch norm {s0.norm} exceeds 1")
    rec, status, t, x, y, z, n_acc, n_rej, n_clip, esw, ptot = _run_kernel(
        s0, w, p, cfg, quiet_tol=0.0
    )
    if status == K.STATUS_STIFF:
        raise StiffnessError(
            f"step size underflow at t={t / _PI:.6g} T_gamma "
            f"(accepted {n_acc}, rejected {n_rej} steps; "
            f"rel_tol={cfg.rel_tol}, abs_tol={cfg.abs_tol})"
        )
    return _trajectory_from(rec, n_acc, n_rej, n_clip, esw, ptot)


def relax_to_equilibrium(
    s0: BlochState,
    delta: float,
    p: ModelParams,
    cfg: Optional[IntegratorConfig] = None,
    t_max: float = 1000.0,
    rate_tol: float = 1e-10,
) -> RelaxResult:
    """Hold the bias constant until the flow stalls (|ds/dt| < rate_tol).

    Requires a finite dissipation time; returns the final state, the
    elapsed time and whether the stall criterion was met before t_max.
    """
    if math.isinf(p.t_d):
        raise ValueError("relaxation needs a finite t_d")
    cfg = cfg or IntegratorConfig()
    if s0.norm > 1.0 + 1e-9:
        raise InvalidStateError(f"initial Bloch norm {s0.norm} exceeds 1")
    # samples are not the point here; record boundaries only
    cfg = IntegratorConfig(
        dt_max=cfg.dt_max,
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        record_stride=2**30,
    )
    w = BiasWaveform((Segment(t_max, delta, delta),))
    rec, status, t, x, y, z, *_ = _run_kernel(s0, w, p, cfg, quiet_tol=rate_tol)
    if status == K.STATUS_STIFF:
        raise StiffnessError(f"step size underflow during relaxation at delta={delta}")
    return RelaxResult(
        BlochState(float(x), float(y), float(z)),
        float(t / _PI),
        status == K.STATUS_QUIET,
    )
