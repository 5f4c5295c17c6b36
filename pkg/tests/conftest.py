import numpy as np
import pytest

from cvteleport.circuits import Circuit, Step
from cvteleport.modes import new_basis


def random_circuit(rng: np.random.Generator, max_steps: int = 20, physical_only: bool = False,
                   max_gain: float = 3.0, coherent: bool = True) -> Circuit:
    """A random well-formed feed-forward circuit with at most ``max_steps`` elements."""
    n_vac = int(rng.integers(0, 5))
    basis = new_basis("a_in", [f"v{i}" for i in range(n_vac)])
    avail = list(basis.labels)
    chans: list[str] = []
    steps = []
    counter = 0

    def fresh():
        nonlocal counter
        counter += 1
        return f"m{counter}"

    def take(k):
        idx = rng.choice(len(avail), size=k, replace=False)
        names = [avail[i] for i in idx]
        for n in names:
            avail.remove(n)
        return names

    def gain():
        return float(1.0 + (max_gain - 1.0) * rng.random())

    for _ in range(int(rng.integers(0, max_steps + 1))):
        options = ["dpa"]
        if len(avail) >= 2:
            options += ["bs", "amp", "nopa"]
        if not physical_only:
            if len(avail) >= 3:
                options.append("eochan")
            if chans:
                options.append("displace")
        kind = options[int(rng.integers(len(options)))]
        if kind == "dpa":
            ins = take(1)
            params = (gain(), float(rng.choice([1.0, -1.0])))
            outs = [fresh()]
        elif kind == "bs":
            ins = take(2)
            params = (float(1.0 - rng.random()),)
            outs = [fresh(), fresh()]
        elif kind in ("amp", "nopa"):
            ins = take(2)
            params = (gain(),)
            outs = [fresh(), fresh()]
        elif kind == "eochan":
            ins = take(2)
            params = (float(0.1 + 2.0 * rng.random()),)
            outs = [fresh()]
            chans.append(outs[0])
        else:
            ch = chans.pop(int(rng.integers(len(chans))))
            ins = [ch] + take(1)
            params = (float(0.1 + 2.0 * rng.random()),)
            outs = [fresh()]
        steps.append(Step(kind, params, tuple(ins), tuple(outs)))
        if kind != "eochan":
            avail.extend(outs)
    output = avail.pop(int(rng.integers(len(avail))))
    discarded = [n for n in avail if rng.random() < 0.5]
    disp = complex(rng.normal(), rng.normal()) if coherent else 0j
    return Circuit(basis, tuple(steps), output, tuple(discarded),
                   channel=None, displacement=disp)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
