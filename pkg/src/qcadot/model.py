"""Two-state cell model: parameters, Bloch state, Hamiltonian assembly.

The cell is a molecular double dot holding one mobile electron. Basis
states are |L> = (1, 0) and |R> = (0, 1); the polarization P = <sigma_z>
is +1 for charge fully on the left dot (binary 0) and -1 for the right
dot (binary 1).

Natural units are used throughout the public API: energies in units of
the inter-dot tunneling energy gamma, times in units of the tunneling
period T_gamma = pi*hbar/gamma. With hbar = gamma = 1 internally, one
bare Rabi oscillation of the cell takes exactly t = 1.0 in these units.

The total Hamiltonian is

    H = -gamma*sx + (delta/2)*(sz + I) - (lam/2)*<sz>*sz + (lam/4)*<sz>^2*I

where delta is the applied bias on the left dot and lam is the
reorganization energy of the surrounding ligands. H depends on the
electron state through <sigma_z>, which is what makes the model
nonlinear: charge occupation relaxes the ligands, which deepens the
occupied well (self-trapping).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "INTERNAL_TIME_PER_TGAMMA",
    "SX",
    "SY",
    "SZ",
    "ID2",
    "InvalidStateError",
    "ModelParams",
    "BlochState",
    "HamiltonianParts",
    "bloch_to_density",
    "density_to_bloch",
    "build_hamiltonian",
    "onsite_energies",
    "expected_energy",
]

# One T_gamma expressed in internal (hbar = gamma = 1) time units.
INTERNAL_TIME_PER_TGAMMA = math.pi

BLOCH_NORM_TOL = 1e-9

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
ID2 = np.eye(2)


class InvalidStateError(ValueError):
    """A density matrix / Bloch vector violates its physical constraints."""


@dataclass(frozen=True)
class ModelParams:
    """Static physical parameters of the cell and its environment.

    Attributes:
        gamma: inter-dot tunneling energy (the energy unit; leave at 1).
        lam: Marcus reorganization energy, units of gamma.
        t_d: dissipation time coupling the cell to the thermal bath,
            units of T_gamma. ``math.inf`` means an isolated cell.
        k_t: bath thermal energy k_B*T, units of gamma.
    """

    gamma: float = 1.0
    lam: float = 0.0
    t_d: float = math.inf
    k_t: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not self.t_d > 0:
            raise ValueError(f"t_d must be > 0 or inf, got {self.t_d}")
        if self.k_t < 0:
            raise ValueError(f"k_t must be >= 0, got {self.k_t}")

    @property
    def is_isolated(self) -> bool:
        return math.isinf(self.t_d)


@dataclass(frozen=True)
class BlochState:
    """Expectation values (<sx>, <sy>, <sz>); the full state of the cell.

    The z component is the polarization P.
    """

    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    @property
    def polarization(self) -> float:
        return self.z

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, s) -> "BlochState":
        return cls(float(s[0]), float(s[1]), float(s[2]))

    def distance(self, other: "BlochState") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2
            + (self.y - other.y) ** 2
            + (self.z - other.z) ** 2
        )


@dataclass(frozen=True)
class HamiltonianParts:
    """The three Hermitian pieces of H and their eigen-decomposition.

    All matrices are real symmetric 2x2 arrays in the |L>, |R> basis.
    ``a`` and (``bx``, ``bz``) are the identity and Pauli coefficients of
    h_total = a*I + bx*sx + bz*sz; the sy coefficient is always zero for
    this model. ``eigvecs`` holds the orthonormal eigenvectors as columns
    (ground state first), with the sign convention that the first
    component of each eigenvector is positive.
    """

    h_e: np.ndarray
    h_el: np.ndarray
    h_l: np.ndarray
    h_total: np.ndarray
    eigvals: tuple[float, float]
    eigvecs: np.ndarray
    a: float
    bx: float
    bz: float

    @property
    def gap(self) -> float:
        return self.eigvals[1] - self.eigvals[0]

    @property
    def half_gap(self) -> float:
        return 0.5 * (self.eigvals[1] - self.eigvals[0])


def bloch_to_density(s: BlochState) -> np.ndarray:
    """Density matrix rho = (I + x*sx + y*sy + z*sz)/2 of a Bloch vector."""
    if s.norm > 1.0 + BLOCH_NORM_TOL:
        raise InvalidStateError(f"Bloch norm {s.norm} exceeds 1 (not a state)")
    return 0.5 * (ID2 + s.x * SX + s.y * SY + s.z * SZ)


def density_to_bloch(rho: np.ndarray) -> BlochState:
    """Bloch vector <sigma_i> = Tr(rho sigma_i) of a density matrix."""
    rho = np.asarray(rho)
    if abs(np.trace(rho) - 1.0) > BLOCH_NORM_TOL:
        raise InvalidStateError(f"trace {np.trace(rho)} != 1")
    if np.max(np.abs(rho - rho.conj().T)) > BLOCH_NORM_TOL:
        raise InvalidStateError("density matrix is not Hermitian")
    return BlochState(
        float(np.real(np.trace(rho @ SX))),
        float(np.real(np.trace(rho @ SY))),
        float(np.real(np.trace(rho @ SZ))),
    )


def build_hamiltonian(p: ModelParams, delta: float, z: float) -> HamiltonianParts:
    """Assemble H(delta, <sz>=z) and diagonalize it in closed form.

    Args:
        p: model parameters.
        delta: applied bias on the left dot, units of gamma.
        z: current polarization <sigma_z> entering the nonlinear terms.
    """
    if abs(z) > 1.0 + BLOCH_NORM_TOL:
        raise InvalidStateError(f"|<sz>| = {abs(z)} exceeds 1")
    g, lam = p.gamma, p.lam
    h_e = np.array([[delta, -g], [-g, 0.0]])
    h_el = np.array([[-0.5 * lam * z, 0.0], [0.0, 0.5 * lam * z]])
    h_l = 0.25 * lam * z * z * ID2
    h_total = h_e + h_el + h_l

    a = 0.5 * delta + 0.25 * lam * z * z
    bx = -g
    bz = 0.5 * (delta - lam * z)
    r = math.hypot(bx, bz)
    nx = bx / r
    # 1 + nz without cancellation when bz is large and negative; the gap
    # never closes because |bx| = gamma > 0.
    if bz <= 0.0:
        one_plus_nz = bx * bx / (r * (r - bz))
    else:
        one_plus_nz = (r + bz) / r
    den = math.sqrt(2.0 * one_plus_nz)
    u1 = np.array([-nx, one_plus_nz]) / den  # ground state, first comp > 0
    u2 = np.array([one_plus_nz, nx]) / den
    return HamiltonianParts(
        h_e=h_e,
        h_el=h_el,
        h_l=h_l,
        h_total=h_total,
        eigvals=(a - r, a + r),
        eigvecs=np.column_stack([u1, u2]),
        a=a,
        bx=bx,
        bz=bz,
    )


def onsite_energies(h: HamiltonianParts) -> tuple[float, float]:
    """Onsite dot energies (E_L, E_R) = (<L|H|L>, <R|H|R>).

    For this model E_L - E_R = delta - lam*z identically.
    """
    return float(h.h_total[0, 0]), float(h.h_total[1, 1])


def expected_energy(s: BlochState, h: HamiltonianParts) -> float:
    """<E> = Tr(rho H) evaluated from Bloch components.

    Equal to Tr(H)/2 + (x*Tr(H sx) + y*Tr(H sy) + z*Tr(H sz))/2; the sy
    trace vanishes for this model.
    """
    return h.a + h.bx * s.x + h.bz * s.z
