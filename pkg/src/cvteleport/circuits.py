"""
Feed-forward optical circuits over named modes, and the teleportation presets.

A :class:`Circuit` is an immutable record: the input basis, an ordered list of
:class:`Step` element applications, and the roles of the surviving modes
(one output, any number of discarded beams, optionally the classical channel).
Each named mode is produced once and consumed at most once, as a physical
beam would be.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .modes import (
    BogoliubovMode,
    ModeKind,
    VacuumBasis,
    basis_modes,
    beamsplitter,
    degenerate_pa,
    displace_reconstruct,
    eo_classical_channel,
    ideal_linear_amplifier,
    new_basis,
    nondegenerate_pa,
)

__all__ = [
    "Step",
    "Circuit",
    "CircuitError",
    "RunResult",
    "ELEMENTS",
    "run",
    "composite_amplifier",
    "build_eo_classical",
    "build_ao_classical",
    "build_ao_quantum",
    "build_fig3_amplifier",
    "build_preset",
    "PRESETS",
]


class CircuitError(ValueError):
    """Semantic problem with a circuit; ``step`` is the offending step index."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class ElementSpec:
    n_params: int
    n_in: int
    n_out: int
    # which inputs must be classical channel objects (True) vs physical modes
    classical_inputs: tuple[bool, ...]
    classical_outputs: tuple[bool, ...]


ELEMENTS: dict[str, ElementSpec] = {
    "bs": ElementSpec(1, 2, 2, (False, False), (False, False)),
    "amp": ElementSpec(1, 2, 2, (False, False), (False, False)),
    "dpa": ElementSpec(2, 1, 1, (False,), (False,)),
    "nopa": ElementSpec(1, 2, 2, (False, False), (False, False)),
    "eochan": ElementSpec(1, 2, 1, (False, False), (True,)),
    "displace": ElementSpec(1, 2, 1, (True, False), (False,)),
}


@dataclass(frozen=True)
class Step:
    """One element application.

    ``params`` per kind: bs (eps,), amp (G,), dpa (G, pump_sign), nopa (H,),
    eochan (K,), displace (lambda,). ``pump_sign`` is +1 (phase 0) or -1 (phase pi).
    """

    kind: str
    params: tuple[float, ...]
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))

    def check_params(self) -> None:
        spec = ELEMENTS.get(self.kind)
        if spec is None:
            raise ValueError(f"unknown element kind {self.kind!r}")
        if len(self.params) != spec.n_params:
            raise ValueError(f"{self.kind} takes {spec.n_params} parameter(s)")
        if len(self.inputs) != spec.n_in or len(self.outputs) != spec.n_out:
            raise ValueError(f"{self.kind} takes {spec.n_in} input(s) and {spec.n_out} output(s)")
        p = self.params[0]
        if not np.isfinite(p):
            raise ValueError(f"{self.kind} parameter must be finite, got {p!r}")
        if self.kind == "bs" and not 0.0 < p <= 1.0:
            raise ValueError(f"beamsplitter transmission must lie in (0, 1], got {p!r}")
        if self.kind in ("amp", "dpa") and p < 1.0:
            raise ValueError(f"gain G must be >= 1, got {p!r}")
        if self.kind == "nopa" and p < 1.0:
            raise ValueError(f"parametric gain H must be >= 1, got {p!r}")
        if self.kind in ("eochan", "displace") and p <= 0.0:
            raise ValueError(f"{self.kind} constant must be positive, got {p!r}")
        if self.kind == "dpa" and self.params[1] not in (1.0, -1.0):
            raise ValueError("dpa pump sign must be +1 or -1")


def _apply(step: Step, operands: Sequence[BogoliubovMode]) -> tuple[BogoliubovMode, ...]:
    p = step.params
    if step.kind == "bs":
        return beamsplitter(operands[0], operands[1], p[0])
    if step.kind == "amp":
        return ideal_linear_amplifier(operands[0], operands[1], p[0])
    if step.kind == "dpa":
        return (degenerate_pa(operands[0], p[0], 0.0 if p[1] > 0 else np.pi),)
    if step.kind == "nopa":
        return nondegenerate_pa(operands[0], operands[1], p[0])
    if step.kind == "eochan":
        return (eo_classical_channel(operands[0], operands[1], p[0]),)
    if step.kind == "displace":
        return (displace_reconstruct(operands[0], operands[1], p[0]),)
    raise ValueError(f"unknown element kind {step.kind!r}")


@dataclass(frozen=True)
class Circuit:
    basis: VacuumBasis
    steps: tuple[Step, ...] = ()
    output: str | None = None
    discarded: tuple[str, ...] = ()
    channel: str | None = None
    displacement: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "discarded", tuple(self.discarded))
        object.__setattr__(self, "displacement", complex(self.displacement))

    @property
    def signal(self) -> str:
        idx = self.basis.signal_indices
        if len(idx) != 1:
            raise CircuitError(f"circuit needs exactly one signal input, found {len(idx)}")
        return self.basis.labels[idx[0]]

    def with_input(self, displacement: complex) -> "Circuit":
        return replace(self, displacement=complex(displacement))

    def validate(self) -> dict[str, bool]:
        """Check well-formedness; returns {name: is_classical} for every mode."""
        _ = self.signal
        classical = {lab: False for lab in self.basis.labels}
        consumed: dict[str, int] = {}
        for i, step in enumerate(self.steps):
            try:
                step.check_params()
            except ValueError as exc:
                raise CircuitError(str(exc), i) from None
            spec = ELEMENTS[step.kind]
            if len(set(step.inputs)) != len(step.inputs):
                raise CircuitError(f"{step.kind} uses the same mode twice", i)
            for name, want in zip(step.inputs, spec.classical_inputs):
                if name not in classical:
                    raise CircuitError(f"undefined mode {name!r}", i)
                if name in consumed:
                    raise CircuitError(
                        f"mode {name!r} was already consumed by step {consumed[name]}", i
                    )
                if classical[name] != want:
                    what = "a classical channel" if want else "a physical mode"
                    raise CircuitError(f"{step.kind} expects {name!r} to be {what}", i)
                consumed[name] = i
            if len(set(step.outputs)) != len(step.outputs):
                raise CircuitError("duplicate output names", i)
            for name, cl in zip(step.outputs, spec.classical_outputs):
                if name in classical:
                    raise CircuitError(f"mode {name!r} is already defined", i)
                classical[name] = cl
        if self.output is None:
            raise CircuitError("circuit has no output")
        for role, names in (("output", [self.output]), ("discard", self.discarded)):
            for name in names:
                if name not in classical:
                    raise CircuitError(f"{role} refers to undefined mode {name!r}")
                if name in consumed:
                    raise CircuitError(f"{role} refers to consumed mode {name!r}")
        if classical[self.output]:
            raise CircuitError(f"output {self.output!r} is a classical channel, not a mode")
        if self.output in self.discarded:
            raise CircuitError(f"mode {self.output!r} is both output and discarded")
        if len(set(self.discarded)) != len(self.discarded):
            raise CircuitError("a mode is discarded twice")
        if self.channel is not None and self.channel not in classical:
            raise CircuitError(f"channel refers to undefined mode {self.channel!r}")
        return classical

    def unconsumed(self) -> list[str]:
        """Names that no step consumes, in definition order."""
        used = {n for s in self.steps for n in s.inputs}
        names = list(self.basis.labels) + [n for s in self.steps for n in s.outputs]
        return [n for n in names if n not in used]


@dataclass(frozen=True)
class RunResult:
    circuit: Circuit
    modes: Mapping[str, BogoliubovMode]
    classical: Mapping[str, bool]

    @property
    def input(self) -> BogoliubovMode:
        return self.modes[self.circuit.signal]

    @property
    def output(self) -> BogoliubovMode:
        return self.modes[self.circuit.output]

    @property
    def discarded(self) -> dict[str, BogoliubovMode]:
        return {n: self.modes[n] for n in self.circuit.discarded}

    @property
    def channel(self) -> BogoliubovMode | None:
        c = self.circuit.channel
        return None if c is None else self.modes[c]

    def __getitem__(self, role: str):
        if role in ("input", "output", "discarded", "channel"):
            return getattr(self, role)
        return self.modes[role]


def run(circuit: Circuit, displacement: complex | None = None) -> RunResult:
    """Evaluate every step in order over the circuit's basis."""
    classical = circuit.validate()
    disp = circuit.displacement if displacement is None else complex(displacement)
    modes: dict[str, BogoliubovMode] = dict(basis_modes(circuit.basis, {circuit.signal: disp}))
    for step in circuit.steps:
        results = _apply(step, [modes[n] for n in step.inputs])
        modes.update(zip(step.outputs, results))
    return RunResult(circuit, modes, classical)


def composite_amplifier(signal: BogoliubovMode, internal: BogoliubovMode, G: float
                        ) -> tuple[BogoliubovMode, BogoliubovMode]:
    """Linear amplifier built from two degenerate PAs pumped in antiphase.

    Returns (amplified, e): amplified = sqrt(G) signal + sqrt(G-1) internal^dagger,
    e = sqrt(G) internal + sqrt(G-1) signal^dagger is the discarded port.
    """
    d, c = beamsplitter(signal, internal, 0.5)
    cp = degenerate_pa(c, G, 0.0)
    dp = degenerate_pa(d, G, np.pi)
    e, out = beamsplitter(cp, dp, 0.5)
    return out, e


def _composite_steps(G: float, signal: str, internal: str, out: str, dump: str,
                prefix: str = "") -> list[Step]:
    c, d, cp, dp = (prefix + s for s in ("c", "d", "c'", "d'"))
    return [
        Step("bs", (0.5,), (signal, internal), (d, c)),
        Step("dpa", (G, 1.0), (c,), (cp,)),
        Step("dpa", (G, -1.0), (d,), (dp,)),
        Step("bs", (0.5,), (cp, dp), (dump, out)),
    ]


def build_fig3_amplifier(G: float, internal: str = "b1") -> Circuit:
    """Composite amplifier on its own: inputs a_in and a vacuum ``internal`` port."""
    G = float(G)
    if not G >= 1.0:
        raise ValueError(f"gain G must be >= 1, got {G!r}")
    return Circuit(
        basis=new_basis("a_in", [internal]),
        steps=tuple(_composite_steps(G, "a_in", internal, "a_c", "e")),
        output="a_c",
        discarded=("e",),
        channel="a_c",
    )


def build_eo_classical(K: float = 1.0, lam: float = 1.0) -> Circuit:
    """Electro-optic classical teleporter: dual homodyne, then modulate vacuum v2."""
    if not (K > 0 and lam > 0):
        raise ValueError("K and lambda must be positive")
    return Circuit(
        basis=new_basis("a_in", ["v1", "v2"]),
        steps=(
            Step("eochan", (K,), ("a_in", "v1"), ("A_c",)),
            Step("displace", (lam,), ("A_c", "v2"), ("a_out",)),
        ),
        output="a_out",
        channel="A_c",
    )


def _check_sender_gain(G: float) -> float:
    G = float(G)
    if not G > 1.0:
        raise ValueError(f"sender gain G must exceed 1, got {G!r}")
    return G


def build_ao_classical(G: float) -> Circuit:
    """All-optical classical teleporter: amplify by G, attenuate by 1/G."""
    G = _check_sender_gain(G)
    return Circuit(
        basis=new_basis("a_in", ["v1", "v2"]),
        steps=(
            Step("amp", (G,), ("a_in", "v1"), ("a_c", "idler")),
            Step("bs", (1.0 / G,), ("a_c", "v2"), ("a_out", "f")),
        ),
        output="a_out",
        discarded=("idler", "f"),
        channel="a_c",
    )


def build_ao_quantum(G: float, H: float, composite: bool = False) -> Circuit:
    """All-optical quantum teleporter with EPR beams b1 (sender) and b2 (receiver)."""
    G = _check_sender_gain(G)
    H = float(H)
    if not H >= 1.0:
        raise ValueError(f"parametric gain H must be >= 1, got {H!r}")
    steps = [Step("nopa", (H,), ("v1", "v2"), ("b1", "b2"))]
    if composite:
        steps += _composite_steps(G, "a_in", "b1", "a_c", "e")
        dump = "e"
    else:
        steps.append(Step("amp", (G,), ("a_in", "b1"), ("a_c", "idler")))
        dump = "idler"
    steps.append(Step("bs", (1.0 / G,), ("a_c", "b2"), ("a_out", "f")))
    return Circuit(
        basis=new_basis("a_in", ["v1", "v2"]),
        steps=tuple(steps),
        output="a_out",
        discarded=(dump, "f"),
        channel="a_c",
    )


PRESETS = ("eo-classical", "ao-classical", "ao-quantum")


def build_preset(name: str, G: float = 100.0, H: float = 1.0, K: float = 1.0,
                 lam: float = 1.0, composite: bool = False) -> Circuit:
    if name == "eo-classical":
        return build_eo_classical(K, lam)
    if name == "ao-classical":
        return build_ao_classical(G)
    if name == "ao-quantum":
        return build_ao_quantum(G, H, composite)
    raise ValueError(f"unknown scheme {name!r}; choose from {', '.join(PRESETS)}")
