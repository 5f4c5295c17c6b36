import math

import numpy as np
import pytest

from cvteleport.circuits import (
    Circuit,
    CircuitError,
    Step,
    build_ao_classical,
    build_ao_quantum,
    build_eo_classical,
    build_fig3_amplifier,
    composite_amplifier,
    run,
)
from cvteleport.metrics import report
from cvteleport.modes import (
    basis_modes,
    commutator,
    eo_classical_channel,
    ideal_linear_amplifier,
    new_basis,
    quadrature_stats,
)

from conftest import random_circuit

EXACT = 1e-12


def assert_coeffs(m, expected, atol=EXACT):
    for label, (a, b) in m.coefficients().items():
        ea, eb = expected.get(label, (0, 0))
        assert abs(a - ea) <= atol and abs(b - eb) <= atol, (label, (a, b), (ea, eb))


def test_eo_classical_unit_product():
    out = run(build_eo_classical(2.0, 0.5)).output
    assert_coeffs(out, {"a_in": (1, 0), "v1": (0, 1), "v2": (-1, 0)})


def test_eo_classical_coherent_input():
    r = run(build_eo_classical(1.0, 1.0), 1.0 + 0j)
    s = quadrature_stats(r.output)
    assert s.mean_plus == pytest.approx(2.0)
    assert (s.var_plus, s.var_minus) == pytest.approx((3.0, 3.0))


def test_eo_classical_non_unity_gain():
    r = run(build_eo_classical(1.0, 2.0))
    rep = report(r)
    assert rep.signal_gain == pytest.approx(2.0)
    assert not rep.unity_gain


@pytest.mark.parametrize("G", [1.5, 2.0, 10.0, 1e4])
def test_ao_classical_output(G):
    out = run(build_ao_classical(G)).output
    k = math.sqrt((G - 1) / G)
    assert_coeffs(out, {"a_in": (1, 0), "v1": (0, k), "v2": (-k, 0)})


def test_ao_classical_noise_g100():
    rep = report(run(build_ao_classical(100.0)))
    assert rep.added_noise_plus == pytest.approx(1.98, abs=EXACT)


@pytest.mark.parametrize("G", [1.0, 0.5])
def test_ao_classical_rejects_degenerate_gain(G):
    with pytest.raises(ValueError):
        build_ao_classical(G)


def test_ao_classical_discards_f_and_idler():
    r = run(build_ao_classical(5.0))
    assert set(r.discarded) == {"idler", "f"}


@pytest.mark.parametrize("composite", [False, True])
@pytest.mark.parametrize("G", [1.5, 2.0, 100.0])
def test_h1_reduces_to_classical(G, composite):
    q = run(build_ao_quantum(G, 1.0, composite)).output
    c = run(build_ao_classical(G)).output
    assert q.allclose(c, EXACT)


@pytest.mark.parametrize("composite", [False, True])
def test_quantum_output_exact_form(composite):
    G, H = 50.0, 9.0
    out = run(build_ao_quantum(G, H, composite)).output
    k = math.sqrt((G - 1) / G) * (math.sqrt(H) - math.sqrt(H - 1))
    assert_coeffs(out, {"a_in": (1, 0), "v1": (0, k), "v2": (-k, 0)}, atol=1e-11)


def test_quantum_added_noise_h25():
    rep = report(run(build_ao_quantum(1e6, 25.0)))
    expected = 2 * (5 - math.sqrt(24)) ** 2 * (1 - 1e-6)
    assert rep.added_noise_plus == pytest.approx(expected, abs=1e-9)
    assert rep.added_noise_plus == pytest.approx(0.0204, abs=1e-4)


def test_quantum_limit_output_approaches_input():
    r = run(build_ao_quantum(1e6, 1e8), 0.7 - 0.2j)
    out = r.output
    assert out.displacement == pytest.approx(0.7 - 0.2j, abs=1e-12)
    assert report(r).added_noise_plus < 1e-8


def test_quantum_rejects_bad_h():
    with pytest.raises(ValueError):
        build_ao_quantum(10.0, 0.5)


def test_discarded_beams_composite():
    r = run(build_ao_quantum(4.0, 2.0, composite=True))
    assert list(r.discarded) == ["e", "f"]
    r = run(build_ao_quantum(4.0, 2.0))
    assert list(r.discarded) == ["idler", "f"]


@pytest.mark.parametrize("G", [1.0, 1.5, 2.0, 10.0])
def test_composite_matches_ideal_amplifier(G):
    r = run(build_fig3_amplifier(G))
    m = r.modes
    ideal, idler = ideal_linear_amplifier(m["a_in"], m["b1"], G)
    assert r.output.allclose(ideal, EXACT)
    assert r.modes["e"].allclose(idler, EXACT)


def test_composite_unit_gain():
    r = run(build_fig3_amplifier(1.0))
    assert r.output.allclose(r.modes["a_in"], EXACT)
    assert r.modes["e"].allclose(r.modes["b1"], EXACT)


def test_composite_discarded_port_g2():
    e = run(build_fig3_amplifier(2.0)).modes["e"]
    assert_coeffs(e, {"b1": (math.sqrt(2), 0), "a_in": (0, 1.0)})


def test_composite_amplifier_on_entangled_internal_mode():
    m = basis_modes(new_basis("a_in", ["v1", "v2"]))
    from cvteleport.modes import nondegenerate_pa

    b1, _ = nondegenerate_pa(m["v1"], m["v2"], 3.0)
    out, e = composite_amplifier(m["a_in"], b1, 6.0)
    ideal, idler = ideal_linear_amplifier(m["a_in"], b1, 6.0)
    assert out.allclose(ideal, EXACT) and e.allclose(idler, 1e-11)


def test_empty_circuit_returns_input():
    c = Circuit(new_basis("a"), (), output="a", displacement=0.3)
    r = run(c)
    assert r.output is r.input
    assert r["output"].displacement == 0.3


def test_dangling_reference_names_step():
    c = Circuit(new_basis("a", ["v"]), (Step("bs", (0.5,), ("a", "ghost"), ("x", "y")),), output="x")
    with pytest.raises(CircuitError, match="step 0.*ghost"):
        run(c)


def test_mode_cannot_be_consumed_twice():
    steps = (Step("dpa", (2.0, 1.0), ("a",), ("x",)), Step("dpa", (2.0, 1.0), ("a",), ("y",)))
    with pytest.raises(CircuitError, match="step 1"):
        run(Circuit(new_basis("a"), steps, output="x"))


def test_channel_must_feed_displace():
    steps = (Step("eochan", (1.0,), ("a", "v"), ("A",)), Step("dpa", (2.0, 1.0), ("A",), ("x",)))
    with pytest.raises(CircuitError):
        run(Circuit(new_basis("a", ["v"]), steps, output="x"))


@pytest.mark.parametrize("G", [1.5, 3.0, 100.0])
def test_unity_signal_gain_on_presets(G):
    for c in (build_eo_classical(1 / G, G), build_ao_classical(G), build_ao_quantum(G, 4.0),
              build_ao_quantum(G, 4.0, True)):
        assert run(c).output.coefficient("a_in") == pytest.approx((1, 0), abs=EXACT)


@pytest.mark.parametrize("builder", [
    lambda: build_ao_classical(7.0),
    lambda: build_ao_quantum(7.0, 3.0),
    lambda: build_ao_quantum(7.0, 3.0, composite=True),
    lambda: build_fig3_amplifier(3.0),
])
def test_information_bookkeeping(builder):
    c = builder()
    r = run(c)
    survivors = [r.modes[n] for n in c.unconsumed()]
    assert sorted(c.unconsumed()) == sorted([c.output, *c.discarded])
    assert sum(m.commutator_norm for m in survivors) == pytest.approx(len(c.basis), abs=1e-10)
    # together the survivors are a canonical set: mutually commuting, unit norm
    for i, m1 in enumerate(survivors):
        for m2 in survivors[i + 1:]:
            assert abs(commutator(m1, m2)) < 1e-10


def test_output_alone_undercounts():
    r = run(build_ao_quantum(7.0, 3.0))
    assert r.output.commutator_norm == pytest.approx(1.0)
    assert r.output.commutator_norm < len(r.circuit.basis)


@pytest.mark.parametrize("G", [4.0, 100.0, 1e4])
def test_k_sqrt_g_correspondence(G):
    m = basis_modes(new_basis("a_in", ["v1"]))
    ac_eo = eo_classical_channel(m["a_in"], m["v1"], math.sqrt(G))
    ac_ao, _ = ideal_linear_amplifier(m["a_in"], m["v1"], G)
    assert ac_eo.coefficient("a_in") == pytest.approx(ac_ao.coefficient("a_in"), abs=EXACT)
    # the v1^dagger coefficients differ only by sqrt(G) - sqrt(G-1) -> 0
    diff = abs(ac_eo.coefficient("v1")[1] - ac_ao.coefficient("v1")[1])
    assert diff == pytest.approx(math.sqrt(G) - math.sqrt(G - 1), abs=EXACT)


def test_classicality_flag_both_channels_at_g100():
    assert report(run(build_ao_classical(100.0))).classical_channel_flag
    assert report(run(build_eo_classical(10.0, 0.1))).classical_channel_flag
    assert not report(run(build_ao_classical(2.0))).classical_channel_flag


def test_random_circuits_physical_modes(rng):
    for _ in range(100):
        c = random_circuit(rng)
        r = run(c)
        for name, mode in r.modes.items():
            # |alpha|^2 - |beta|^2 cancels, so the error scales with the sum
            scale = max(1.0, float(np.sum(np.abs(mode.alpha) ** 2 + np.abs(mode.beta) ** 2)))
            target = 0.0 if r.classical[name] else 1.0
            assert mode.commutator_norm == pytest.approx(target, abs=1e-12 * scale)
