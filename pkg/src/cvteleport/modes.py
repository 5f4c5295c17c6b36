"""
Linear mode algebra over a registry of independent vacuum (or coherent) inputs.

Every field operator in a feed-forward optical circuit is an affine combination
of the input annihilation and creation operators,

    a = sum_k (alpha_k v_k + beta_k v_k^dagger) + displacement,

so an element acting on modes is just arithmetic on the coefficient vectors.
Quadrature moments follow directly because every input is a vacuum (the signal
input is a displaced vacuum, i.e. a coherent state).

Conventions: X+ = a + a^dagger, X- = i(a - a^dagger), vacuum variance 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

__all__ = [
    "ModeKind",
    "VacuumBasis",
    "BogoliubovMode",
    "QuadratureStats",
    "JointStats",
    "BasisMismatchError",
    "new_basis",
    "basis_modes",
    "beamsplitter",
    "ideal_linear_amplifier",
    "degenerate_pa",
    "nondegenerate_pa",
    "eo_classical_channel",
    "displace_reconstruct",
    "quadrature_stats",
    "joint_stats",
    "commutator",
    "SEPARABLE_LIMIT",
]

# Var(X1+ - X2+) for two independent vacua in these units.
SEPARABLE_LIMIT = 2.0


class BasisMismatchError(ValueError):
    """Raised when two modes are expanded over incompatible bases."""


class ModeKind(str, Enum):
    SIGNAL = "signal"
    VACUUM = "vacuum"


@dataclass(frozen=True)
class VacuumBasis:
    """Ordered registry of independent input modes.

    The basis is append-only: :meth:`extend` returns a new basis whose labels
    start with the old ones, so indices never move.
    """

    labels: tuple[str, ...] = ()
    kinds: tuple[ModeKind, ...] = ()

    def __post_init__(self):
        if len(self.labels) != len(self.kinds):
            raise ValueError("labels and kinds must have the same length")
        seen = set()
        for label in self.labels:
            if label in seen:
                raise ValueError(f"duplicate mode label {label!r}")
            seen.add(label)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown basis label {label!r}") from None

    def extend(self, label: str, kind: ModeKind = ModeKind.VACUUM) -> "VacuumBasis":
        return VacuumBasis(self.labels + (label,), self.kinds + (ModeKind(kind),))

    def is_prefix_of(self, other: "VacuumBasis") -> bool:
        n = len(self.labels)
        return other.labels[:n] == self.labels and other.kinds[:n] == self.kinds

    @property
    def signal_indices(self) -> list[int]:
        return [i for i, k in enumerate(self.kinds) if k is ModeKind.SIGNAL]


def new_basis(signal_label: str, vacuum_labels: Iterable[str] = ()) -> VacuumBasis:
    """Basis with the signal input at index 0 followed by the vacuum inputs."""
    labels = (signal_label, *vacuum_labels)
    seen = set()
    for label in labels:
        if label in seen:
            raise ValueError(f"duplicate mode label {label!r}")
        seen.add(label)
    kinds = (ModeKind.SIGNAL,) + (ModeKind.VACUUM,) * (len(labels) - 1)
    return VacuumBasis(labels, kinds)


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class BogoliubovMode:
    """One field operator ``sum_k (alpha_k v_k + beta_k v_k^dagger) + displacement``.

    ``alpha`` and ``beta`` may be shorter than the basis; missing entries are zero.
    """

    basis: VacuumBasis
    alpha: np.ndarray
    beta: np.ndarray
    displacement: complex = 0j

    def __post_init__(self):
        alpha = _frozen(self.alpha)
        beta = _frozen(self.beta)
        if alpha.ndim != 1 or alpha.shape != beta.shape:
            raise ValueError("alpha and beta must be 1-D arrays of equal length")
        if len(alpha) > len(self.basis):
            raise ValueError("more coefficients than basis modes")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "displacement", complex(self.displacement))

    @classmethod
    def input(cls, basis: VacuumBasis, label: str, displacement: complex = 0j) -> "BogoliubovMode":
        """The bare input operator for ``label`` (unit alpha on its own index)."""
        k = basis.index(label)
        alpha = np.zeros(len(basis), dtype=complex)
        alpha[k] = 1.0
        return cls(basis, alpha, np.zeros(len(basis), dtype=complex), displacement)

    def padded(self, basis: VacuumBasis) -> "BogoliubovMode":
        """Re-express over a basis that extends this mode's basis."""
        if not self.basis.is_prefix_of(basis):
            raise BasisMismatchError("target basis does not extend the mode's basis")
        n = len(basis)
        alpha = np.zeros(n, dtype=complex)
        beta = np.zeros(n, dtype=complex)
        alpha[: len(self.alpha)] = self.alpha
        beta[: len(self.beta)] = self.beta
        return BogoliubovMode(basis, alpha, beta, self.displacement)

    def conj(self) -> "BogoliubovMode":
        """Hermitian conjugate: alpha <-> beta*, displacement -> displacement*."""
        return BogoliubovMode(
            self.basis, self.beta.conj(), self.alpha.conj(), self.displacement.conjugate()
        )

    def __mul__(self, s) -> "BogoliubovMode":
        s = complex(s)
        return BogoliubovMode(self.basis, s * self.alpha, s * self.beta, s * self.displacement)

    __rmul__ = __mul__

    def __neg__(self) -> "BogoliubovMode":
        return self * -1.0

    def __add__(self, other: "BogoliubovMode") -> "BogoliubovMode":
        a, b = _align(self, other)
        return BogoliubovMode(a.basis, a.alpha + b.alpha, a.beta + b.beta,
                              a.displacement + b.displacement)

    def __sub__(self, other: "BogoliubovMode") -> "BogoliubovMode":
        return self + (-other)

    def coefficient(self, label: str) -> tuple[complex, complex]:
        """(alpha, beta) multiplying ``label`` and its adjoint."""
        k = self.basis.index(label)
        if k >= len(self.alpha):
            return 0j, 0j
        return complex(self.alpha[k]), complex(self.beta[k])

    def coefficients(self) -> dict[str, tuple[complex, complex]]:
        return {lab: self.coefficient(lab) for lab in self.basis.labels}

    @property
    def commutator_norm(self) -> float:
        """[a, a^dagger] = sum |alpha|^2 - |beta|^2; 1 for a physical mode."""
        return float(np.sum(np.abs(self.alpha) ** 2 - np.abs(self.beta) ** 2))

    def allclose(self, other: "BogoliubovMode", atol: float = 1e-12) -> bool:
        a, b = _align(self, other)
        return (
            np.allclose(a.alpha, b.alpha, rtol=0, atol=atol)
            and np.allclose(a.beta, b.beta, rtol=0, atol=atol)
            and abs(a.displacement - b.displacement) <= atol
        )

    def __repr__(self) -> str:
        terms = []
        for lab, (al, be) in self.coefficients().items():
            if al != 0:
                terms.append(f"({al:.6g}){lab}")
            if be != 0:
                terms.append(f"({be:.6g}){lab}^dag")
        if self.displacement != 0:
            terms.append(f"{self.displacement:.6g}")
        return "BogoliubovMode(" + (" + ".join(terms) or "0") + ")"


def _align(m1: BogoliubovMode, m2: BogoliubovMode) -> tuple[BogoliubovMode, BogoliubovMode]:
    if m1.basis == m2.basis:
        n = len(m1.basis)
        if len(m1.alpha) == len(m2.alpha) == n:
            return m1, m2
        return m1.padded(m1.basis), m2.padded(m1.basis)
    if m1.basis.is_prefix_of(m2.basis):
        return m1.padded(m2.basis), m2.padded(m2.basis)
    if m2.basis.is_prefix_of(m1.basis):
        return m1.padded(m1.basis), m2.padded(m1.basis)
    raise BasisMismatchError(
        f"modes live on different bases {m1.basis.labels} and {m2.basis.labels}"
    )


def basis_modes(basis: VacuumBasis, displacements: dict[str, complex] | None = None
                ) -> dict[str, BogoliubovMode]:
    """Input operators for every basis label, keyed by label."""
    displacements = displacements or {}
    for label, kind in zip(basis.labels, basis.kinds):
        if kind is ModeKind.VACUUM and displacements.get(label, 0):
            raise ValueError(f"vacuum mode {label!r} cannot carry a displacement")
    return {lab: BogoliubovMode.input(basis, lab, displacements.get(lab, 0j))
            for lab in basis.labels}


def _check_transmission(eps: float) -> float:
    eps = float(eps)
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"beamsplitter transmission must lie in (0, 1], got {eps!r}")
    return eps


def _check_gain(g: float, name: str = "G") -> float:
    g = float(g)
    if not g >= 1.0:
        raise ValueError(f"gain {name} must be >= 1, got {g!r}")
    return g


def beamsplitter(in1: BogoliubovMode, in2: BogoliubovMode, eps: float
                 ) -> tuple[BogoliubovMode, BogoliubovMode]:
    """Lossless beamsplitter with intensity transmission ``eps``.

    out1 = sqrt(eps) in1 - sqrt(1-eps) in2
    out2 = sqrt(1-eps) in1 + sqrt(eps) in2
    """
    eps = _check_transmission(eps)
    a, b = _align(in1, in2)
    t, r = np.sqrt(eps), np.sqrt(1.0 - eps)
    return t * a - r * b, r * a + t * b


def ideal_linear_amplifier(signal: BogoliubovMode, internal: BogoliubovMode, G: float
                           ) -> tuple[BogoliubovMode, BogoliubovMode]:
    """Phase-insensitive amplifier; returns (amplified, idler).

    amplified = sqrt(G) signal + sqrt(G-1) internal^dagger
    idler     = sqrt(G) internal + sqrt(G-1) signal^dagger
    """
    G = _check_gain(G)
    s, v = _align(signal, internal)
    g, h = np.sqrt(G), np.sqrt(G - 1.0)
    return g * s + h * v.conj(), g * v + h * s.conj()


def degenerate_pa(mode: BogoliubovMode, G: float, theta: float = 0.0) -> BogoliubovMode:
    """Single-mode squeezer: sqrt(G) a + exp(i theta) sqrt(G-1) a^dagger."""
    G = _check_gain(G)
    phase = np.exp(1j * theta)
    if theta == np.pi:
        phase = -1.0
    elif theta == 0.0:
        phase = 1.0
    return np.sqrt(G) * mode + (phase * np.sqrt(G - 1.0)) * mode.conj()


def nondegenerate_pa(in1: BogoliubovMode, in2: BogoliubovMode, H: float
                     ) -> tuple[BogoliubovMode, BogoliubovMode]:
    """Two-mode squeezer producing an EPR pair from two inputs."""
    H = _check_gain(H, "H")
    a, b = _align(in1, in2)
    g, h = np.sqrt(H), np.sqrt(H - 1.0)
    return g * a + h * b.conj(), g * b + h * a.conj()


def eo_classical_channel(signal: BogoliubovMode, v1: BogoliubovMode, K: float) -> BogoliubovMode:
    """Dual-homodyne photocurrent A_c = K (signal + v1^dagger).

    The result has zero commutator norm: it is a classical signal, not a mode.
    """
    if not K > 0:
        raise ValueError(f"K must be positive, got {K!r}")
    s, v = _align(signal, v1)
    return float(K) * (s + v.conj())


def displace_reconstruct(channel: BogoliubovMode, v2: BogoliubovMode, lam: float) -> BogoliubovMode:
    """Receiver modulation of vacuum ``v2`` by the channel: lam * channel - v2."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    c, v = _align(channel, v2)
    return float(lam) * c - v


def commutator(m1: BogoliubovMode, m2: BogoliubovMode) -> complex:
    """[m1, m2^dagger]; 0 for distinct canonically commuting modes."""
    a, b = _align(m1, m2)
    return complex(np.sum(a.alpha * b.alpha.conj() - a.beta.conj() * b.beta))


def _quad_vectors(m: BogoliubovMode) -> tuple[np.ndarray, np.ndarray]:
    # X+ = sum c_k v_k + h.c. with c = alpha + beta*; X- likewise with c = i(alpha - beta*)
    bc = m.beta.conj()
    return m.alpha + bc, 1j * (m.alpha - bc)


@dataclass(frozen=True)
class QuadratureStats:
    mean_plus: float
    mean_minus: float
    var_plus: float
    var_minus: float
    cov_pm: float = 0.0
    mean_photons: float = field(default=float("nan"))

    def is_classical(self, threshold: float = 100.0) -> bool:
        return self.var_plus >= threshold and self.var_minus >= threshold

    @property
    def uncertainty_product(self) -> float:
        return self.var_plus * self.var_minus

    def as_dict(self) -> dict:
        return {
            "mean_plus": self.mean_plus,
            "mean_minus": self.mean_minus,
            "var_plus": self.var_plus,
            "var_minus": self.var_minus,
            "cov_pm": self.cov_pm,
            "mean_photons": self.mean_photons,
        }


def quadrature_stats(mode: BogoliubovMode) -> QuadratureStats:
    """Means and variances of X+ and X- with every input in (displaced) vacuum."""
    cp, cm = _quad_vectors(mode)
    d = mode.displacement
    # <a^dagger a> = sum |beta|^2 + |d|^2 for vacuum inputs
    n = float(np.sum(np.abs(mode.beta) ** 2)) + abs(d) ** 2
    return QuadratureStats(
        mean_plus=2.0 * d.real,
        mean_minus=-2.0 * d.imag,
        var_plus=float(np.sum(np.abs(cp) ** 2)),
        var_minus=float(np.sum(np.abs(cm) ** 2)),
        cov_pm=float(np.real(np.sum(cp * cm.conj()))),
        mean_photons=n,
    )


@dataclass(frozen=True)
class JointStats:
    """Second moments of two modes' quadratures (symmetrised covariances)."""

    var1_plus: float
    var1_minus: float
    var2_plus: float
    var2_minus: float
    cov_plus: float
    cov_minus: float

    @property
    def diff_var_plus(self) -> float:
        """Var(X1+ - X2+)."""
        return self.var1_plus + self.var2_plus - 2.0 * self.cov_plus

    @property
    def sum_var_plus(self) -> float:
        return self.var1_plus + self.var2_plus + 2.0 * self.cov_plus

    @property
    def diff_var_minus(self) -> float:
        return self.var1_minus + self.var2_minus - 2.0 * self.cov_minus

    @property
    def sum_var_minus(self) -> float:
        """Var(X1- + X2-)."""
        return self.var1_minus + self.var2_minus + 2.0 * self.cov_minus

    @property
    def epr_ratio_plus(self) -> float:
        """Var(X1+ - X2+) relative to the separable level of two vacua."""
        return self.diff_var_plus / SEPARABLE_LIMIT

    @property
    def epr_ratio_minus(self) -> float:
        return self.sum_var_minus / SEPARABLE_LIMIT


def joint_stats(m1: BogoliubovMode, m2: BogoliubovMode) -> JointStats:
    a, b = _align(m1, m2)
    p1, q1 = _quad_vectors(a)
    p2, q2 = _quad_vectors(b)
    return JointStats(
        var1_plus=float(np.sum(np.abs(p1) ** 2)),
        var1_minus=float(np.sum(np.abs(q1) ** 2)),
        var2_plus=float(np.sum(np.abs(p2) ** 2)),
        var2_minus=float(np.sum(np.abs(q2) ** 2)),
        cov_plus=float(np.real(np.sum(p1 * p2.conj()))),
        cov_minus=float(np.real(np.sum(q1 * q2.conj()))),
    )
