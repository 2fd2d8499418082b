"""Self-consistent thermal steady states of the nonlinear cell.

In equilibrium the cell satisfies rho_ss = exp(-H(rho_ss)/kT) / Z, a
fixed-point problem because H depends on <sigma_z>. This module provides
the Gibbs map for a frozen Hamiltonian, plain fixed-point iteration of
the self-consistency condition, and a multistart enumeration of all
coexisting solutions (the model supports up to three at small bias: two
self-trapped branches and one symmetric solution between them).

<sigma_y> is fixed to zero here; H is real, so the Gibbs map preserves
y = 0 and nothing is lost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import (
    BlochState,
    HamiltonianParts,
    InvalidStateError,
    ModelParams,
    build_hamiltonian,
    expected_energy,
)

__all__ = [
    "SteadySolution",
    "SolutionSet",
    "gibbs_state",
    "solve_self_consistent",
    "enumerate_steady_states",
    "steady_polarization_curve",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
DEDUP_RADIUS = 0.02
MAX_SOLUTIONS = 8  # defensive cap; this model is observed to have <= 3


@dataclass(frozen=True)
class SteadySolution:
    """One converged self-consistent solution.

    ``stable`` classifies the fixed point under the Gibbs iteration map:
    |d GibbsZ / dz| < 1 at the root. Unstable roots are genuine solutions
    of the self-consistency condition but are not visited dynamically.
    """

    state: BlochState
    energy: float
    iterations: int
    converged: bool
    stable: bool


@dataclass
class SolutionSet:
    """Deduplicated steady solutions at one bias value, sorted by z desc."""

    solutions: list[SteadySolution]
    bias: float
    n_starts: int
    n_unconverged: int = 0

    def polarizations(self) -> np.ndarray:
        return np.array([s.state.z for s in self.solutions])


def gibbs_state(h: HamiltonianParts, k_t: float) -> BlochState:
    """Thermal state exp(-H/kT)/Z of a frozen Hamiltonian as a Bloch vector.

    Populations are Boltzmann factors on the eigenvectors of ``h``; at
    k_t = 0 this is the ground-state projector.
    """
    if k_t < 0:
        raise ValueError(f"k_t must be >= 0, got {k_t}")
    r = h.half_gap
    f = 1.0 if k_t == 0.0 else math.tanh(r / k_t)
    return BlochState(-f * h.bx / r, 0.0, -f * h.bz / r)


def _gibbs_xz(p: ModelParams, delta: float, z: float) -> tuple[float, float]:
    # Scalar fast path of gibbs_state(build_hamiltonian(...)) for the solver.
    bx = -p.gamma
    bz = 0.5 * (delta - p.lam * z)
    r = math.hypot(bx, bz)
    f = 1.0 if p.k_t == 0.0 else math.tanh(r / p.k_t)
    return -f * bx / r, -f * bz / r


def _gibbs_z_slope(p: ModelParams, delta: float, z: float, h: float = 1e-6) -> float:
    zp = min(z + h, 1.0)
    zm = max(z - h, -1.0)
    return (_gibbs_xz(p, delta, zp)[1] - _gibbs_xz(p, delta, zm)[1]) / (zp - zm)


def _make_solution(
    p: ModelParams, delta: float, x: float, z: float, iterations: int, converged: bool
) -> SteadySolution:
    state = BlochState(x, 0.0, z)
    energy = expected_energy(state, build_hamiltonian(p, delta, z))
    stable = abs(_gibbs_z_slope(p, delta, z)) < 1.0
    return SteadySolution(state, energy, iterations, converged, stable)


def solve_self_consistent(
    p: ModelParams,
    delta: float,
    guess: BlochState,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    mixing: float = 1.0,
) -> SteadySolution:
    """Fixed-point iteration s -> Gibbs(H(s.z)) from an initial guess.

    Plain iteration (mixing = 1) reproduces the textbook procedure; a
    mixing factor in (0, 1) damps oscillation near the fold points where
    branches merge. The y component of the guess is ignored.

    Returns the last iterate with a convergence flag; hitting max_iter is
    reported, not raised.
    """
    if not 0.0 < mixing <= 1.0:
        raise ValueError(f"mixing must be in (0, 1], got {mixing}")
    x, z = guess.x, guess.z
    if math.hypot(x, z) > 1.0 + 1e-9:
        raise InvalidStateError(f"guess ({x}, {z}) lies outside the unit disk")
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        xn, zn = _gibbs_xz(p, delta, z)
        if mixing < 1.0:
            xn = mixing * xn + (1.0 - mixing) * x
            zn = mixing * zn + (1.0 - mixing) * z
        if max(abs(xn - x), abs(zn - z)) < tol:
            x, z = xn, zn
            converged = True
            break
        x, z = xn, zn
    return _make_solution(p, delta, x, z, it, converged)


def _fill_between_roots(
    p: ModelParams,
    delta: float,
    found: list[SteadySolution],
    dedup_radius: float,
    scan_points: int = 101,
) -> list[SteadySolution]:
    """Add fixed points the iteration cannot reach.

    Repelling roots of g(z) = z - GibbsZ(z) (|map slope| > 1, e.g. the
    symmetric solution at zero bias) repel every iterate, yet they are
    bona fide solutions of the self-consistency condition. Between each
    pair of adjacent converged roots, scan g for sign changes and polish
    them with a bracketed root finder.
    """

    def g(z: float) -> float:
        return z - _gibbs_xz(p, delta, z)[1]

    zs = sorted(s.state.z for s in found)
    extra = []
    for z_lo, z_hi in zip(zs[:-1], zs[1:]):
        lo = z_lo + 0.5 * dedup_radius
        hi = z_hi - 0.5 * dedup_radius
        if hi <= lo:
            continue
        grid = np.linspace(lo, hi, scan_points)
        vals = np.array([g(z) for z in grid])
        for i in range(scan_points - 1):
            if vals[i] == 0.0:
                root = grid[i]
            elif vals[i] * vals[i + 1] < 0.0:
                root = brentq(g, grid[i], grid[i + 1], xtol=1e-14)
            else:
                continue
            x_root, z_root = _gibbs_xz(p, delta, root)
            extra.append(_make_solution(p, delta, x_root, z_root, 0, True))
    return found + extra


def _dedup(solutions: list[SteadySolution], radius: float) -> list[SteadySolution]:
    kept: list[SteadySolution] = []
    for s in solutions:
        if all(s.state.distance(k.state) > radius for k in kept):
            kept.append(s)
    return kept


def enumerate_steady_states(
    p: ModelParams,
    delta: float,
    n_starts: int = 100,
    seed: int = 0,
    dedup_radius: float = DEDUP_RADIUS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> SolutionSet:
    """Find all coexisting steady states at one bias by multistart.

    ``n_starts`` initial guesses are drawn uniformly on the (x, z) unit
    disk from a seeded generator, iterated to convergence, deduplicated
    within ``dedup_radius`` in Bloch space, and completed with any
    repelling roots lying between the attractors found. Unconverged
    starts are dropped and counted. Solutions are sorted by z descending.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    rng = np.random.default_rng(seed)
    radius = np.sqrt(rng.uniform(0.0, 1.0, n_starts))
    angle = rng.uniform(0.0, 2.0 * np.pi, n_starts)
    converged: list[SteadySolution] = []
    n_unconv = 0
    for rr, th in zip(radius, angle):
        guess = BlochState(rr * math.cos(th), 0.0, rr * math.sin(th))
        sol = solve_self_consistent(p, delta, guess, max_iter=max_iter, tol=tol)
        if sol.converged:
            converged.append(sol)
        else:
            n_unconv += 1
    solutions = _dedup(converged, dedup_radius)
    solutions = _fill_between_roots(p, delta, solutions, dedup_radius)
    solutions = _dedup(solutions, dedup_radius)
    solutions.sort(key=lambda s: s.state.z, reverse=True)
    if len(solutions) > MAX_SOLUTIONS:
        raise RuntimeError(
            f"{len(solutions)} steady solutions at delta={delta}; "
            "expected at most 3 for this model"
        )
    return SolutionSet(solutions, delta, n_starts, n_unconv)


def steady_polarization_curve(
    p: ModelParams,
    deltas,
    n_starts: int = 100,
    seed: int = 0,
) -> list[SolutionSet]:
    """Enumerate steady states on a bias grid (the S-shaped P(delta) map).

    Multistability sets in when |delta| is comparable to lam + k_t.
    """
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    if deltas.size == 0:
        raise ValueError("deltas must be non-empty")
    child_seeds = np.random.SeedSequence(seed).generate_state(deltas.size)
    return [
        enumerate_steady_states(p, float(d), n_starts=n_starts, seed=int(s))
        for d, s in zip(deltas, child_seeds)
    ]
