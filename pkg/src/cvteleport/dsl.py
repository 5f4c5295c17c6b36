"""
Reader and writer for ``.qot`` optical-circuit files.

One statement per line, ``#`` starts a comment::

    input a_in coherent 0.5 0          # signal, real and imaginary displacement
    vacuum v1 v2
    amp 100 a_in v1 -> a_c idler        # G, signal internal -> amplified idler
    bs matched:100 a_c v2 -> a_out f    # transmission 1/G
    channel a_c
    discard idler f
    output a_out

Element statements: ``bs EPS a b -> c d``, ``amp G s v -> out idler``,
``dpa G +|- a -> b``, ``nopa H a b -> c d``, ``eochan K s v -> chan``,
``displace LAMBDA chan v -> out``. ``channel`` is optional and marks the
classical channel for reporting. Formatting is canonical and drops comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .circuits import ELEMENTS, Circuit, CircuitError, Step
from .modes import ModeKind, VacuumBasis

__all__ = ["ParseError", "SemanticError", "parse", "parse_file", "format_circuit", "format_number"]

_TOKEN = re.compile(r"->|(?:(?!->)\S)+")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")
_FLOAT = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\Z")


class ParseError(ValueError):
    """Syntax error at ``line``:``column`` (both 1-based)."""

    def __init__(self, line: int, column: int, expected: str, found: str):
        self.line, self.column, self.expected, self.found = line, column, expected, found
        super().__init__(f"line {line}, column {column}: expected {expected}, found {found!r}")


class SemanticError(ParseError):
    """Well-formed statement that makes an invalid circuit."""

    def __init__(self, line: int, column: int, message: str, found: str = ""):
        self.line, self.column, self.expected, self.found = line, column, message, found
        ValueError.__init__(self, f"line {line}, column {column}: {message}")


@dataclass
class _Tok:
    text: str
    line: int
    col: int


class _Cursor:
    def __init__(self, toks: list[_Tok], line: int, line_len: int):
        self.toks, self.i, self.line, self.end_col = toks, 0, line, line_len + 1

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def _fail(self, expected: str):
        tok = self.peek()
        if tok is None:
            raise ParseError(self.line, self.end_col, expected, "end of line")
        raise ParseError(tok.line, tok.col, expected, tok.text)

    def take(self) -> _Tok:
        tok = self.peek()
        self.i += 1
        return tok

    def name(self) -> _Tok:
        tok = self.peek()
        if tok is None or not _NAME.match(tok.text):
            self._fail("mode name")
        return self.take()

    def number(self) -> tuple[float, _Tok]:
        tok = self.peek()
        if tok is None or not _FLOAT.match(tok.text):
            self._fail("number")
        return float(self.take().text), tok

    def arrow(self) -> None:
        tok = self.peek()
        if tok is None or tok.text != "->":
            self._fail("'->'")
        self.take()

    def done(self) -> None:
        if self.peek() is not None:
            self._fail("end of line")


class _Builder:
    def __init__(self):
        self.labels: list[str] = []
        self.kinds: list[ModeKind] = []
        self.displacement = 0j
        self.steps: list[Step] = []
        self.defined: dict[str, bool] = {}  # name -> is classical channel
        self.consumed: set[str] = set()
        self.output: tuple[str, _Tok] | None = None
        self.discarded: list[str] = []
        self.channel: str | None = None
        self.input_tok: _Tok | None = None

    def define(self, tok: _Tok, classical: bool = False) -> None:
        if tok.text in self.defined:
            raise SemanticError(tok.line, tok.col, f"mode {tok.text!r} is already defined", tok.text)
        self.defined[tok.text] = classical

    def use(self, tok: _Tok, classical: bool = False, consume: bool = True) -> None:
        name = tok.text
        if name not in self.defined:
            raise SemanticError(tok.line, tok.col, f"undefined mode {name!r}", name)
        if name in self.consumed:
            raise SemanticError(tok.line, tok.col, f"mode {name!r} was already used", name)
        if self.defined[name] != classical:
            what = "a classical channel" if classical else "a physical mode"
            raise SemanticError(tok.line, tok.col, f"{name!r} is not {what}", name)
        if consume:
            self.consumed.add(name)


def _check_range(kind: str, value: float, tok: _Tok) -> None:
    try:
        Step(kind, (value, 1.0) if kind == "dpa" else (value,),
             ("_",) * ELEMENTS[kind].n_in, ("_",) * ELEMENTS[kind].n_out).check_params()
    except ValueError as exc:
        raise SemanticError(tok.line, tok.col, str(exc), tok.text) from None


def _statement(cur: _Cursor, b: _Builder) -> None:
    head = cur.take()
    kw = head.text
    if kw == "input":
        tok = cur.name()
        if b.input_tok is not None:
            raise SemanticError(head.line, head.col, "only one input statement is allowed", kw)
        disp = 0j
        nxt = cur.peek()
        if nxt is not None:
            if nxt.text != "coherent":
                cur._fail("'coherent' or end of line")
            cur.take()
            re_, _ = cur.number()
            im_, _ = cur.number()
            disp = complex(re_, im_)
        cur.done()
        b.define(tok)
        b.input_tok = head
        b.labels.append(tok.text)
        b.kinds.append(ModeKind.SIGNAL)
        b.displacement = disp
    elif kw == "vacuum":
        toks = [cur.name()]
        while cur.peek() is not None:
            toks.append(cur.name())
        for tok in toks:
            b.define(tok)
            b.labels.append(tok.text)
            b.kinds.append(ModeKind.VACUUM)
    elif kw in ELEMENTS:
        spec = ELEMENTS[kw]
        if kw == "bs" and cur.peek() is not None and cur.peek().text.startswith("matched:"):
            tok = cur.take()
            g_text = tok.text[len("matched:"):]
            if not _FLOAT.match(g_text):
                raise ParseError(tok.line, tok.col + len("matched:"), "number", g_text)
            G = float(g_text)
            if not G >= 1.0:
                raise SemanticError(tok.line, tok.col, f"matched gain must be >= 1, got {G!r}", tok.text)
            value = 1.0 / G
        else:
            value, tok = cur.number()
        _check_range(kw, value, tok)
        params: tuple[float, ...] = (value,)
        if kw == "dpa":
            sign = cur.peek()
            if sign is None or sign.text not in ("+", "-"):
                cur._fail("pump sign '+' or '-'")
            cur.take()
            params = (value, 1.0 if sign.text == "+" else -1.0)
        ins = [cur.name() for _ in range(spec.n_in)]
        cur.arrow()
        outs = [cur.name() for _ in range(spec.n_out)]
        cur.done()
        seen = set()
        for tok_in, cl in zip(ins, spec.classical_inputs):
            if tok_in.text in seen:
                raise SemanticError(tok_in.line, tok_in.col, f"mode {tok_in.text!r} used twice", tok_in.text)
            seen.add(tok_in.text)
            b.use(tok_in, cl)
        for tok_out, cl in zip(outs, spec.classical_outputs):
            b.define(tok_out, cl)
        b.steps.append(Step(kw, params, tuple(t.text for t in ins), tuple(t.text for t in outs)))
    elif kw == "output":
        tok = cur.name()
        cur.done()
        if b.output is not None:
            raise SemanticError(head.line, head.col, "more than one output statement", kw)
        b.use(tok, consume=False)
        b.output = (tok.text, tok)
    elif kw == "discard":
        toks = [cur.name()]
        while cur.peek() is not None:
            toks.append(cur.name())
        for tok in toks:
            b.use(tok, consume=False)
            if tok.text in b.discarded:
                raise SemanticError(tok.line, tok.col, f"mode {tok.text!r} discarded twice", tok.text)
            b.discarded.append(tok.text)
    elif kw == "channel":
        tok = cur.name()
        cur.done()
        if tok.text not in b.defined:
            raise SemanticError(tok.line, tok.col, f"undefined mode {tok.text!r}", tok.text)
        if b.channel is not None:
            raise SemanticError(head.line, head.col, "more than one channel statement", kw)
        b.channel = tok.text
    else:
        raise ParseError(head.line, head.col, "statement keyword", kw)


def parse(src: str) -> Circuit:
    """Parse ``.qot`` source text into a validated :class:`Circuit`."""
    if src.startswith("\ufeff"):
        src = src[1:]
    lines = src.splitlines()
    b = _Builder()
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0]
        toks = [_Tok(m.group(), lineno, m.start() + 1) for m in _TOKEN.finditer(text)]
        if not toks:
            continue
        _statement(_Cursor(toks, lineno, len(text.rstrip())), b)

    last = max(len(lines), 1)
    last_col = len(lines[-1]) + 1 if lines else 1
    if b.input_tok is None:
        raise SemanticError(last, last_col, "no input statement")
    if b.output is None:
        raise SemanticError(last, last_col, "no output statement")
    name, tok = b.output
    if name in b.consumed:
        raise SemanticError(tok.line, tok.col, f"output {name!r} is consumed by a later element", name)
    if b.defined[name]:
        raise SemanticError(tok.line, tok.col, f"output {name!r} is a classical channel", name)
    for d in b.discarded:
        if d in b.consumed or d == name:
            raise SemanticError(last, last_col, f"discarded mode {d!r} is used elsewhere", d)
    circuit = Circuit(
        basis=VacuumBasis(tuple(b.labels), tuple(b.kinds)),
        steps=tuple(b.steps),
        output=name,
        discarded=tuple(b.discarded),
        channel=b.channel,
        displacement=b.displacement,
    )
    try:
        circuit.validate()
    except CircuitError as exc:  # pragma: no cover - parser checks should catch everything
        raise SemanticError(last, last_col, str(exc)) from None
    return circuit


def parse_file(path: str | Path) -> Circuit:
    return parse(Path(path).read_bytes().decode("utf-8"))


def format_number(x: float) -> str:
    """17 significant digits; reparses to the identical float."""
    return format(float(x), ".17g")


def format_circuit(circuit: Circuit) -> str:
    """Canonical source text. ``parse(format_circuit(c))`` reproduces ``c``."""
    circuit.validate()
    out: list[str] = []
    vac_run: list[str] = []
    for label, kind in zip(circuit.basis.labels, circuit.basis.kinds):
        if kind is ModeKind.VACUUM:
            vac_run.append(label)
            continue
        if vac_run:
            out.append("vacuum " + " ".join(vac_run))
            vac_run = []
        line = f"input {label}"
        d = circuit.displacement
        if d != 0:
            line += f" coherent {format_number(d.real)} {format_number(d.imag)}"
        out.append(line)
    if vac_run:
        out.append("vacuum " + " ".join(vac_run))
    for step in circuit.steps:
        head = f"{step.kind} {format_number(step.params[0])}"
        if step.kind == "dpa":
            head += " +" if step.params[1] > 0 else " -"
        out.append(f"{head} {' '.join(step.inputs)} -> {' '.join(step.outputs)}")
    if circuit.channel is not None:
        out.append(f"channel {circuit.channel}")
    if circuit.discarded:
        out.append("discard " + " ".join(circuit.discarded))
    out.append(f"output {circuit.output}")
    return "\n".join(out) + "\n"
