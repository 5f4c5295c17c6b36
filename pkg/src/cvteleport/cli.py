"""Command-line interface: ``cvteleport {run,sweep,verify,fmt}``."""

from __future__ import annotations

import argparse
import itertools
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from . import fock
from .circuits import PRESETS, Circuit, CircuitError, Step, build_preset, run
from .dsl import ParseError, format_circuit, format_number, parse_file
from .metrics import report
from .modes import joint_stats, new_basis, quadrature_stats

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2
VERIFY_TOL = 1e-6

SCHEME_PARAMS = {
    "eo-classical": ("K", "lambda"),
    "ao-classical": ("G",),
    "ao-quantum": ("G", "H"),
}
DEFAULTS = {"G": 100.0, "H": 1.0, "K": 1.0, "lambda": 1.0, "alpha": 0.0, "alpha_im": 0.0}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Range:
    start: float
    stop: float
    count: int = 1
    log: bool = False

    def __post_init__(self):
        if self.count < 1:
            raise UsageError("range count must be >= 1")
        if self.start > self.stop:
            raise UsageError(f"range start {self.start:g} exceeds stop {self.stop:g}")
        if self.log and not (self.start > 0 and self.stop > 0):
            raise UsageError("log spacing needs positive endpoints")

    def values(self) -> list[float]:
        if self.count == 1:
            return [self.start]
        if self.log:
            vals = np.geomspace(self.start, self.stop, self.count)
        else:
            vals = np.linspace(self.start, self.stop, self.count)
        vals[0], vals[-1] = self.start, self.stop
        return [float(v) for v in vals]


def parse_range(text: str) -> Range:
    """``VALUE`` or ``START:STOP:COUNT[:log|:lin]``."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return Range(v, v)
        if len(parts) in (3, 4):
            log = False
            if len(parts) == 4:
                if parts[3] not in ("log", "lin"):
                    raise UsageError(f"unknown spacing {parts[3]!r}")
                log = parts[3] == "log"
            return Range(float(parts[0]), float(parts[1]), int(parts[2]), log)
    except ValueError:
        pass
    raise UsageError(f"bad range {text!r}; use VALUE or START:STOP:COUNT[:log]")


@dataclass(frozen=True)
class SweepSpec:
    target: str
    ranges: dict
    out: str = "csv"
    composite: bool = False
    oracle: bool = False
    cutoff: int = 40
    threshold: float = 100.0

    @property
    def is_file(self) -> bool:
        return self.target not in PRESETS

    def param_names(self) -> tuple[str, ...]:
        base = () if self.is_file else SCHEME_PARAMS[self.target]
        return base + ("alpha", "alpha_im")

    def grid(self) -> Iterable[dict]:
        names = self.param_names()
        axes = [self.ranges.get(n, Range(DEFAULTS[n], DEFAULTS[n])).values() for n in names]
        for combo in itertools.product(*axes):
            yield dict(zip(names, combo))


def _load(spec: SweepSpec) -> Circuit | None:
    if not spec.is_file:
        return None
    path = Path(spec.target)
    if not path.exists():
        raise FileNotFoundError(f"{spec.target}: file not found")
    return parse_file(path)


def _circuit_for(spec: SweepSpec, base: Circuit | None, p: dict) -> Circuit:
    disp = complex(p["alpha"], p["alpha_im"])
    if base is not None:
        return base.with_input(disp)
    return build_preset(
        spec.target, G=p.get("G", DEFAULTS["G"]), H=p.get("H", DEFAULTS["H"]),
        K=p.get("K", DEFAULTS["K"]), lam=p.get("lambda", DEFAULTS["lambda"]),
        composite=spec.composite,
    ).with_input(disp)


def _asymptotic_noise(target: str, p: dict) -> float | None:
    if target in ("eo-classical", "ao-classical"):
        return 2.0
    if target == "ao-quantum":
        H = p["H"]
        return 2.0 * (math.sqrt(H) - math.sqrt(H - 1.0)) ** 2
    return None


def evaluate_point(spec: SweepSpec, base: Circuit | None, p: dict) -> dict:
    circuit = _circuit_for(spec, base, p)
    result = run(circuit)
    rep = report(result, spec.threshold)
    row = dict(p)
    row.update(
        signal_gain=rep.signal_gain,
        added_noise_plus=rep.added_noise_plus,
        added_noise_minus=rep.added_noise_minus,
        added_noise_asymptotic=_asymptotic_noise(spec.target, p),
        fidelity=rep.fidelity,
        transfer_plus=rep.transfer_plus,
        transfer_minus=rep.transfer_minus,
        transfer_sum=rep.transfer_sum,
        conditional_variance_plus=rep.conditional_variance_plus,
        conditional_variance_minus=rep.conditional_variance_minus,
        classical_channel=rep.classical_channel_flag,
        beats_classical_fidelity=rep.beats_classical_fidelity,
        beats_classical_transfer=rep.beats_classical_transfer,
    )
    if spec.oracle:
        row.update(_oracle_columns(circuit, result, rep.fidelity, spec.cutoff))
    return row


def _oracle_columns(circuit: Circuit, result, fidelity: float, cutoff: int) -> dict:
    fr = fock.simulate(circuit, cutoff)
    m = fr.measure(circuit.output)
    s = quadrature_stats(result.output)
    ofid = fock.overlap(fr.state, circuit.displacement, fr.slots[circuit.output],
                        require_trusted=False)
    err = max(abs(m.stats.var_plus - s.var_plus), abs(m.stats.var_minus - s.var_minus),
              abs(m.stats.mean_plus - s.mean_plus), abs(m.stats.mean_minus - s.mean_minus),
              abs(ofid - fidelity))
    return {
        "oracle_var_plus": m.stats.var_plus,
        "oracle_var_minus": m.stats.var_minus,
        "oracle_fidelity": ofid,
        "oracle_max_abs_error": err,
        "oracle_trusted": fr.state.trusted,
    }


def sweep_rows(spec: SweepSpec) -> list[dict]:
    base = _load(spec)
    if spec.oracle:
        for p in spec.grid():
            try:
                fock.check_boundary(_circuit_for(spec, base, p))
            except ValueError as exc:
                raise UsageError(f"--oracle refused: {exc}") from None
    return [evaluate_point(spec, base, p) for p in spec.grid()]


# ---------------------------------------------------------------- output

def _scalar(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_number(float(v) + 0.0)  # no "-0" in reports
    return str(v)


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    lines = [",".join(cols)]
    lines += [",".join(_scalar(r.get(c)) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + to_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            return "null"
        return format_number(float(obj) + 0.0)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    s = str(obj).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


# ---------------------------------------------------------------- verify

def _element_circuit(kind: str, value: float, sign: float = 1.0) -> tuple[str, Circuit]:
    if kind == "amp":
        return f"amp G={value:g}", Circuit(
            new_basis("a_in", ["v"]), (Step("amp", (value,), ("a_in", "v"), ("out", "idler")),),
            output="out", discarded=("idler",))
    if kind == "dpa":
        tag = "+" if sign > 0 else "-"
        return f"dpa{tag} G={value:g}", Circuit(
            new_basis("a_in"), (Step("dpa", (value, sign), ("a_in",), ("out",)),), output="out")
    if kind == "nopa":
        return f"nopa H={value:g}", Circuit(
            new_basis("a_in", ["v1", "v2"]),
            (Step("nopa", (value,), ("v1", "v2"), ("b1", "b2")),),
            output="b1", discarded=("b2",))
    raise ValueError(kind)


def verify_grid(Gs, Hs, alphas) -> list[tuple[str, Circuit, complex]]:
    """Circuits checked by ``verify`` in a fixed order, without duplicates."""
    items: list[tuple[str, Circuit]] = [("eo-classical", build_preset("eo-classical"))]
    for G in Gs:
        items.append(_element_circuit("amp", G))
        items.append(_element_circuit("dpa", G, 1.0))
        items.append(_element_circuit("dpa", G, -1.0))
    for H in Hs:
        items.append(_element_circuit("nopa", H))
    for G in Gs:
        if G <= 1.0:
            continue
        items.append((f"ao-classical G={G:g}", build_preset("ao-classical", G=G)))
        for H in Hs:
            items.append((f"ao-quantum G={G:g} H={H:g}", build_preset("ao-quantum", G=G, H=H)))
            items.append((f"ao-quantum-composite G={G:g} H={H:g}",
                          build_preset("ao-quantum", G=G, H=H, composite=True)))
    seen, out = set(), []
    for alpha in alphas:
        for label, c in items:
            if (label, alpha) in seen:
                continue
            seen.add((label, alpha))
            out.append((label, c, complex(alpha)))
    return out


def verify_checks(label: str, circuit: Circuit, alpha: complex, cutoff: int,
                  tol: float = VERIFY_TOL) -> list[dict]:
    """Compare every output moment and the fidelity between algebra and oracle."""
    base = {"circuit": label, "alpha": alpha.real, "cutoff": cutoff}
    try:
        fr = fock.simulate(circuit, cutoff, alpha)
    except fock.TailMassError as exc:
        return [dict(base, quantity="prepare", algebra=None, oracle=None, abs_error=None,
                     status="refused", detail=str(exc))]
    result = run(circuit, alpha)
    s = quadrature_stats(result.output)
    m = fr.measure(circuit.output).stats
    pairs = [
        ("mean_plus", s.mean_plus, m.mean_plus),
        ("mean_minus", s.mean_minus, m.mean_minus),
        ("var_plus", s.var_plus, m.var_plus),
        ("var_minus", s.var_minus, m.var_minus),
    ]
    if "b2" in result.modes and any(st.kind == "nopa" for st in circuit.steps) and circuit.output == "b1":
        j = joint_stats(result.modes["b1"], result.modes["b2"])
        cp, cm = fr.joint("b1", "b2")
        mb2 = fr.measure("b2").stats
        pairs.append(("epr_diff_var_plus", j.diff_var_plus, m.var_plus + mb2.var_plus - 2 * cp))
        pairs.append(("epr_sum_var_minus", j.sum_var_minus, m.var_minus + mb2.var_minus + 2 * cm))
    else:
        fid = report(result).fidelity
        ofid = fock.overlap(fr.state, alpha, fr.slots[circuit.output], require_trusted=False)
        pairs.append(("fidelity", fid, ofid))
    rows = []
    for q, a, o in pairs:
        err = abs(a - o)
        if not fr.state.trusted:
            status = "untrusted"
        else:
            status = "pass" if err <= tol else "fail"
        rows.append(dict(base, quantity=q, algebra=a, oracle=o, abs_error=err, status=status,
                         detail="" if fr.state.trusted else fr.state.log[-1]))
    return rows


def verify(Gs, Hs, alphas, cutoff: int = 40, tol: float = VERIFY_TOL) -> list[dict]:
    for g in list(Gs) + list(Hs):
        if not 1.0 <= g <= fock.MAX_GAIN:
            raise UsageError(
                f"gain {g:g} is outside the oracle's range [1, {fock.MAX_GAIN:g}]: the truncated "
                "number basis cannot hold high-gain states; large-gain limits are checked in "
                "the coefficient algebra only"
            )
    for a in alphas:
        if abs(a) > fock.MAX_ALPHA:
            raise UsageError(f"|alpha| = {abs(a):g} is outside the oracle's range (<= {fock.MAX_ALPHA:g})")
    rows = []
    for label, circuit, alpha in verify_grid(Gs, Hs, alphas):
        rows.extend(verify_checks(label, circuit, alpha, cutoff, tol))
    return rows


# ---------------------------------------------------------------- commands

def _spec_from_args(args) -> SweepSpec:
    ranges = {}
    for name, attr in (("G", "G"), ("H", "H"), ("K", "K"), ("lambda", "lam"),
                       ("alpha", "alpha"), ("alpha_im", "alpha_im")):
        text = getattr(args, attr)
        if text is not None:
            ranges[name] = parse_range(text)
    spec = SweepSpec(args.target, ranges, args.out, args.composite, args.oracle, args.cutoff,
                     args.threshold)
    allowed = set(spec.param_names())
    extra = set(ranges) - allowed
    if extra:
        raise UsageError(f"{args.target} does not take parameter(s): {', '.join(sorted(extra))}")
    return spec


def cmd_run(args) -> int:
    spec = _spec_from_args(args)
    if any(r.count != 1 for r in spec.ranges.values()):
        raise UsageError("run takes single values; use sweep for ranges")
    rows = sweep_rows(spec)
    row = rows[0]
    if args.out == "csv":
        sys.stdout.write(to_csv(rows))
        return EXIT_OK
    base = _load(spec)
    p = next(iter(spec.grid()))
    result = run(_circuit_for(spec, base, p))
    doc = {
        "scheme": spec.target,
        "parameters": p,
        "report": {k: v for k, v in row.items() if k not in p},
        "modes": {name: quadrature_stats(mode).as_dict()
                  for name, mode in result.modes.items() if not result.classical[name]},
    }
    sys.stdout.write(to_json(doc) + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    rows = sweep_rows(_spec_from_args(args))
    sys.stdout.write(to_csv(rows) if args.out == "csv" else to_json(rows) + "\n")
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad number list {text!r}") from None


def cmd_verify(args) -> int:
    rows = verify(_float_list(args.G), _float_list(args.H), _float_list(args.alpha),
                  args.cutoff, args.tol)
    if args.out == "json":
        sys.stdout.write(to_json(rows) + "\n")
    elif args.out == "csv":
        sys.stdout.write(to_csv(rows))
    else:
        for r in rows:
            err = "-" if r["abs_error"] is None else f"{r['abs_error']:.2e}"
            print(f"{r['status'].upper():9s} {r['circuit']:34s} alpha={r['alpha']:<4g} "
                  f"{r['quantity']:18s} err={err} {r['detail']}".rstrip())
    bad = [r for r in rows if r["status"] != "pass"]
    print(f"{len(rows) - len(bad)}/{len(rows)} checks passed at tolerance {args.tol:g}",
          file=sys.stderr)
    return EXIT_CHECK_FAILED if bad else EXIT_OK


def cmd_fmt(args) -> int:
    path = Path(args.file)
    if not path.exists():
        raise FileNotFoundError(f"{args.file}: file not found")
    text = format_circuit(parse_file(path))
    if args.in_place:
        path.write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_scheme_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("target", help=f"preset ({', '.join(PRESETS)}) or path to a .qot file")
    p.add_argument("--G", help="sender amplifier gain")
    p.add_argument("--H", help="EPR parametric gain")
    p.add_argument("--K", help="photocurrent constant")
    p.add_argument("--lambda", dest="lam", help="receiver modulation gain")
    p.add_argument("--alpha", help="real part of the coherent input")
    p.add_argument("--alpha-im", dest="alpha_im", help="imaginary part of the coherent input")
    p.add_argument("--composite", action="store_true",
                   help="ao-quantum: build the sender amplifier from two degenerate PAs")
    p.add_argument("--out", choices=("json", "csv"), default=None)
    p.add_argument("--oracle", action="store_true", help="add Fock-space oracle columns")
    p.add_argument("--cutoff", type=int, default=40)
    p.add_argument("--threshold", type=float, default=100.0,
                   help="quadrature variance above which a field counts as classical")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvteleport",
                                     description="Continuous-variable teleportation circuits")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate one scheme or .qot file")
    _add_scheme_args(p)
    p.set_defaults(func=cmd_run, default_out="json")

    p = sub.add_parser("sweep", help="evaluate a parameter grid")
    _add_scheme_args(p)
    p.set_defaults(func=cmd_sweep, default_out="csv")

    p = sub.add_parser("verify", help="compare coefficient algebra with the Fock oracle")
    p.add_argument("--G", default="1.0,1.2,2.0", help="comma-separated gains")
    p.add_argument("--H", default="1.0,1.2,2.0", help="comma-separated parametric gains")
    p.add_argument("--alpha", default="0,0.3,1.0", help="comma-separated real amplitudes")
    p.add_argument("--cutoff", type=int, default=40)
    p.add_argument("--tol", type=float, default=VERIFY_TOL)
    p.add_argument("--out", choices=("table", "json", "csv"), default="table")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fmt", help="print a .qot file in canonical form")
    p.add_argument("file")
    p.add_argument("-w", "--in-place", action="store_true", help="rewrite the file")
    p.set_defaults(func=cmd_fmt)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out", "x") is None:
        args.out = args.default_out
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
    except ParseError as exc:
        where = getattr(args, "target", None) or getattr(args, "file", "")
        print(f"{where}:{exc.line}:{exc.column}: error: {exc}", file=sys.stderr)
    except (UsageError, CircuitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
