"""
Truncated number-basis state-vector simulation of the same circuits.

This is an independent check on the coefficient algebra in :mod:`cvteleport.modes`:
elements are applied as unitaries ``exp(generator)`` built from ladder
operators in a truncated Fock space, and moments are read back from the
state vector. Only small gains are practical (the state grows with the
photon number), so the oracle refuses gains above :data:`MAX_GAIN`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.csgraph

from .circuits import Circuit, Step
from .modes import QuadratureStats, VacuumBasis

__all__ = [
    "FockState",
    "FockMeasurement",
    "TailMassError",
    "UntrustedStateError",
    "prepare",
    "apply_element",
    "measure",
    "joint_quadratures",
    "overlap",
    "simulate",
    "coherent_amplitudes",
    "DEFAULT_TAIL",
    "MAX_GAIN",
    "MAX_ALPHA",
]

DEFAULT_TAIL = 1e-8
# extra levels used when exponentiating generators
PAD = 20
MAX_GAIN = 2.0
MAX_ALPHA = 1.0


class TailMassError(ValueError):
    """The truncated basis cannot hold the requested state."""


class UntrustedStateError(RuntimeError):
    """A quantity was requested from a state flagged as truncation-corrupted."""


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Number-basis amplitudes of |alpha> for n < cutoff (not renormalised)."""
    c = np.empty(cutoff, dtype=complex)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, cutoff):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c


def _lowering(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1)


@dataclass(frozen=True, eq=False)
class FockState:
    cutoff: int
    amplitudes: np.ndarray
    labels: tuple[str, ...]
    tail_threshold: float = DEFAULT_TAIL
    trusted: bool = True
    log: tuple[str, ...] = field(default=())

    @property
    def n_modes(self) -> int:
        return self.amplitudes.ndim

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def populations(self, slot: int) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        axes = tuple(i for i in range(self.n_modes) if i != slot)
        return p.sum(axis=axes)

    def tail_mass(self) -> float:
        """Largest population held in the top two levels of any mode."""
        return max(float(self.populations(k)[-2:].sum()) for k in range(self.n_modes))

    def slot(self, label: str) -> int:
        return self.labels.index(label)


def prepare(basis: VacuumBasis, displacement: complex = 0j, cutoff: int = 40,
            tail_threshold: float = DEFAULT_TAIL) -> FockState:
    """Coherent state on the signal input, vacuum on every other basis mode."""
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    sig = basis.signal_indices
    vac = np.zeros(cutoff, dtype=complex)
    vac[0] = 1.0
    coh = coherent_amplitudes(complex(displacement), cutoff)
    tail = float(np.sum(np.abs(coh[-2:]) ** 2))
    if tail > tail_threshold:
        raise TailMassError(
            f"coherent amplitude {displacement} needs a larger cutoff than {cutoff} "
            f"(tail mass {tail:.3g} > {tail_threshold:.3g})"
        )
    coh /= np.linalg.norm(coh)
    psi = np.ones((), dtype=complex)
    for k in range(len(basis)):
        psi = np.multiply.outer(psi, coh if k in sig else vac)
    return FockState(cutoff, psi, tuple(basis.labels), tail_threshold)


def _block_expm(gen) -> scipy.sparse.csr_matrix:
    """expm of a sparse generator that splits into small invariant blocks."""
    gen = scipy.sparse.csr_matrix(gen)
    mask = (abs(gen) + abs(gen.T)) > 0
    n_blocks, labels = scipy.sparse.csgraph.connected_components(mask, directed=False)
    rows, cols, vals = [], [], []
    for b in range(n_blocks):
        idx = np.flatnonzero(labels == b)
        blk = scipy.linalg.expm(gen[idx][:, idx].toarray())
        r, c = np.meshgrid(idx, idx, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(blk.ravel())
    n = gen.shape[0]
    return scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


@lru_cache(maxsize=64)
def _unitary(kind: str, param: float, phase: float, cutoff: int, pad: int = PAD
             ) -> scipy.sparse.csr_matrix:
    """Element unitary exponentiated at ``cutoff + pad`` levels, projected to ``cutoff``.

    The projection is not exactly unitary; its norm loss measures real leakage
    out of the truncated space rather than artefacts of a clipped generator.
    """
    n = cutoff + pad
    a = scipy.sparse.csr_matrix(_lowering(n))
    ad = a.T
    if kind == "squeeze":
        r = np.arccosh(np.sqrt(param))
        e = np.exp(1j * phase)
        gen = 0.5 * r * (e * ad @ ad - np.conj(e) * a @ a)
        keep = np.arange(cutoff)
    else:
        eye = scipy.sparse.identity(n, format="csr")
        a1, a2 = scipy.sparse.kron(a, eye, "csr"), scipy.sparse.kron(eye, a, "csr")
        if kind == "bs":
            theta = np.arccos(np.sqrt(param))
            gen = theta * (a1 @ a2.T - a1.T @ a2)
        elif kind == "tms":
            r = np.arccosh(np.sqrt(param))
            gen = r * (a1.T @ a2.T - a1 @ a2)
        else:
            raise ValueError(f"unknown unitary {kind!r}")
        i, j = np.meshgrid(np.arange(cutoff), np.arange(cutoff), indexing="ij")
        keep = (i * n + j).ravel()
    u = _block_expm(gen.astype(complex))
    return u[keep][:, keep].tocsr()


def _apply_unitary(state: FockState, u, slots: tuple[int, ...], note: str) -> FockState:
    n, c = state.n_modes, state.cutoff
    if len(set(slots)) != len(slots) or any(not 0 <= s < n for s in slots):
        raise IndexError(f"invalid mode indices {slots} for a {n}-mode state")
    psi = np.moveaxis(state.amplitudes, slots, tuple(range(len(slots))))
    shape = psi.shape
    psi = (u @ psi.reshape(c ** len(slots), -1)).reshape(shape)
    psi = np.moveaxis(psi, tuple(range(len(slots))), slots)
    new = replace(state, amplitudes=psi, log=state.log + (note,))
    tail = new.tail_mass()
    norm_drop = abs(1.0 - new.norm)
    if tail > state.tail_threshold or norm_drop > state.tail_threshold:
        new = replace(new, trusted=False,
                      log=new.log + (f"untrusted after {note}: tail {tail:.3g}, norm drop {norm_drop:.3g}",))
    return new


def apply_element(state: FockState, kind: str, param: float, modes: tuple[int, ...],
                  phase: float = 0.0) -> FockState:
    """Apply one element to the given slots.

    kind is ``"bs"`` (transmission), ``"tms"`` (two-mode squeezer / ideal amplifier
    with power gain), or ``"squeeze"`` (degenerate PA with power gain and pump phase).
    Heisenberg action on the first slot matches the coefficient algebra:
    bs gives sqrt(eps) a1 - sqrt(1-eps) a2, tms gives sqrt(G) a1 + sqrt(G-1) a2^dagger.
    """
    modes = tuple(int(m) for m in modes)
    want = 1 if kind == "squeeze" else 2
    if len(modes) != want:
        raise IndexError(f"{kind} acts on {want} mode(s), got {modes}")
    u = _unitary(kind, float(param), float(phase), state.cutoff)
    return _apply_unitary(state, u, modes, f"{kind}({param:g}) on {modes}")


def _reduced(state: FockState, slot: int) -> np.ndarray:
    psi = np.moveaxis(state.amplitudes, slot, 0).reshape(state.cutoff, -1)
    return psi @ psi.conj().T


@dataclass(frozen=True)
class FockMeasurement:
    stats: QuadratureStats
    trusted: bool


def measure(state: FockState, mode: int) -> FockMeasurement:
    """Quadrature moments and mean photon number of one slot."""
    rho = _reduced(state, mode)
    a = _lowering(state.cutoff)
    ea = np.trace(rho @ a)
    ea2 = np.trace(rho @ a @ a)
    n = float(np.real(np.trace(rho @ a.T @ a)))
    mp = 2.0 * ea.real
    mm = -2.0 * ea.imag
    stats = QuadratureStats(
        mean_plus=float(mp),
        mean_minus=float(mm),
        var_plus=float(2.0 * ea2.real + 2.0 * n + 1.0 - mp * mp),
        var_minus=float(-2.0 * ea2.real + 2.0 * n + 1.0 - mm * mm),
        cov_pm=float(-2.0 * ea2.imag - mp * mm),
        mean_photons=n,
    )
    return FockMeasurement(stats, state.trusted)


def _lower(psi: np.ndarray, axis: int) -> np.ndarray:
    c = psi.shape[axis]
    out = np.zeros_like(psi)
    src = [slice(None)] * psi.ndim
    dst = [slice(None)] * psi.ndim
    src[axis], dst[axis] = slice(1, None), slice(0, c - 1)
    shape = [1] * psi.ndim
    shape[axis] = c - 1
    out[tuple(dst)] = psi[tuple(src)] * np.sqrt(np.arange(1, c)).reshape(shape)
    return out


def joint_quadratures(state: FockState, m1: int, m2: int) -> tuple[float, float]:
    """(Cov(X1+, X2+), Cov(X1-, X2-)) between two distinct slots."""
    psi = state.amplitudes
    l1, l2 = _lower(psi, m1), _lower(psi, m2)
    e_a1a2 = np.vdot(psi, _lower(l2, m1))
    e_a1d_a2 = np.vdot(l1, l2)
    e1, e2 = np.vdot(psi, l1), np.vdot(psi, l2)
    xp = 2.0 * e_a1a2.real + 2.0 * e_a1d_a2.real
    xm = -2.0 * e_a1a2.real + 2.0 * e_a1d_a2.real
    cov_p = xp - (2.0 * e1.real) * (2.0 * e2.real)
    cov_m = xm - (2.0 * e1.imag) * (2.0 * e2.imag)
    return float(cov_p), float(cov_m)


def overlap(state: FockState, alpha: complex, mode: int, require_trusted: bool = True) -> float:
    """<alpha| rho |alpha> for the reduced state of ``mode``."""
    if require_trusted and not state.trusted:
        raise UntrustedStateError("state was flagged untrusted: " + "; ".join(state.log[-1:]))
    c = coherent_amplitudes(complex(alpha), state.cutoff)
    if float(np.sum(np.abs(c[-2:]) ** 2)) > state.tail_threshold:
        raise TailMassError(f"reference amplitude {alpha} does not fit in cutoff {state.cutoff}")
    return float(np.real(np.vdot(c, _reduced(state, mode) @ c)))


@dataclass(frozen=True, eq=False)
class FockRun:
    state: FockState
    slots: dict[str, int]

    def measure(self, name: str) -> FockMeasurement:
        return measure(self.state, self.slots[name])

    def overlap(self, name: str, alpha: complex) -> float:
        return overlap(self.state, alpha, self.slots[name])

    def joint(self, n1: str, n2: str) -> tuple[float, float]:
        return joint_quadratures(self.state, self.slots[n1], self.slots[n2])


def _step_gains(step: Step, channels: dict) -> list[float]:
    if step.kind in ("amp", "dpa", "nopa"):
        return [step.params[0]]
    if step.kind == "displace":
        g = step.params[0] * channels[step.inputs[0]][2]
        return [g * g + 1.0]
    return []


def check_boundary(circuit: Circuit, displacement: complex | None = None,
                   max_gain: float = MAX_GAIN, max_alpha: float = MAX_ALPHA) -> None:
    """Raise ValueError if the circuit is outside the oracle's small-gain regime."""
    disp = circuit.displacement if displacement is None else complex(displacement)
    if abs(disp) > max_alpha + 1e-12:
        raise ValueError(f"|alpha| = {abs(disp):g} exceeds the oracle limit {max_alpha:g}")
    channels = {}
    for step in circuit.steps:
        if step.kind == "eochan":
            channels[step.outputs[0]] = (None, None, step.params[0])
        for g in _step_gains(step, channels):
            if g > max_gain + 1e-12:
                raise ValueError(
                    f"{step.kind} gain {g:g} exceeds the oracle limit {max_gain:g}"
                )


def simulate(circuit: Circuit, cutoff: int = 40, displacement: complex | None = None,
             tail_threshold: float = DEFAULT_TAIL) -> FockRun:
    """Run a circuit in the truncated number basis.

    Each named mode lives in a slot; two-port elements write their outputs back
    into their input slots. The electro-optic pair ``eochan`` + ``displace`` is
    replaced by a unitary dilation with the same output operator
    g a + g v1^dagger - v2 (g = lambda K): a beamsplitter of transmission
    g^2/(g^2+1) with v2, followed by an amplifier of gain g^2+1 idled by v1.
    """
    circuit.validate()
    disp = circuit.displacement if displacement is None else complex(displacement)
    state = prepare(circuit.basis, disp, cutoff, tail_threshold)
    slots = {lab: i for i, lab in enumerate(circuit.basis.labels)}
    channels: dict[str, tuple[int, int, float]] = {}
    for step in circuit.steps:
        ins = step.inputs
        if step.kind == "bs":
            state = apply_element(state, "bs", step.params[0], (slots[ins[0]], slots[ins[1]]))
        elif step.kind in ("amp", "nopa"):
            state = apply_element(state, "tms", step.params[0], (slots[ins[0]], slots[ins[1]]))
        elif step.kind == "dpa":
            phase = 0.0 if step.params[1] > 0 else np.pi
            state = apply_element(state, "squeeze", step.params[0], (slots[ins[0]],), phase)
        elif step.kind == "eochan":
            channels[step.outputs[0]] = (slots[ins[0]], slots[ins[1]], step.params[0])
            continue
        elif step.kind == "displace":
            s, v1, K = channels[ins[0]]
            g = step.params[0] * K
            state = apply_element(state, "bs", g * g / (g * g + 1.0), (s, slots[ins[1]]))
            state = apply_element(state, "tms", g * g + 1.0, (s, v1))
            slots[step.outputs[0]] = s
            continue
        else:
            raise ValueError(f"oracle cannot simulate {step.kind!r}")
        for name, inp in zip(step.outputs, ins):
            slots[name] = slots[inp]
    return FockRun(state, slots)
