import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvteleport import fock
from cvteleport.circuits import Circuit, build_ao_classical, build_ao_quantum, build_eo_classical, run
from cvteleport.metrics import (
    added_noise,
    coherent_fidelity,
    conditional_variance,
    gaussian_overlap,
    is_classical_channel,
    report,
    transfer_coefficients,
)
from cvteleport.modes import basis_modes, new_basis, quadrature_stats


def epr_excess(H):
    return 2.0 * (math.sqrt(H) - math.sqrt(H - 1.0)) ** 2


def identity_run(alpha=0j):
    return run(Circuit(new_basis("a_in"), (), output="a_in", displacement=alpha))


def test_added_noise_eo_unit_gain():
    r = run(build_eo_classical(1.0, 1.0))
    s_in, s_out = quadrature_stats(r.input), quadrature_stats(r.output)
    assert added_noise(s_out, s_in) == pytest.approx((2.0, 2.0), abs=1e-12)


def test_identity_is_perfect():
    rep = report(identity_run(0.4 + 0.1j))
    assert (rep.added_noise_plus, rep.added_noise_minus) == (0.0, 0.0)
    assert rep.fidelity == pytest.approx(1.0, abs=1e-15)
    assert (rep.transfer_plus, rep.transfer_minus) == (1.0, 1.0)
    assert rep.conditional_variance_plus == pytest.approx(0.0, abs=1e-15)
    assert rep.conditional_variance_minus == pytest.approx(0.0, abs=1e-15)


def test_added_noise_gain_scaling():
    m = basis_modes(new_basis("a"))["a"]
    s = quadrature_stats(m * 2.0)
    assert added_noise(s, quadrature_stats(m), gain=2.0) == (0.0, 0.0)


def test_quantum_noise_h25():
    rep = report(run(build_ao_quantum(1e6, 25.0)))
    assert rep.added_noise_plus == pytest.approx(0.0204, abs=5e-5)
    assert rep.added_noise_minus == pytest.approx(rep.added_noise_plus, abs=1e-15)


@pytest.mark.parametrize("K", [1.0, 0.25, 10.0])
def test_eo_scheme_classical_bound(K):
    rep = report(run(build_eo_classical(K, 1 / K), 0.3 - 0.7j))
    assert rep.fidelity == pytest.approx(0.5, abs=1e-12)
    assert (rep.transfer_plus, rep.transfer_minus) == pytest.approx((1 / 3, 1 / 3), abs=1e-12)
    assert (rep.conditional_variance_plus, rep.conditional_variance_minus) == pytest.approx(
        (2.0, 2.0), abs=1e-12)
    assert not rep.beats_classical_fidelity and not rep.beats_classical_transfer


@pytest.mark.parametrize("G", [1.5, 2.0, 100.0, 1e6])
def test_ao_classical_approaches_bound(G):
    # finite G leaves noise 2(G-1)/G < 2, so the bound is only reached as G grows
    rep = report(run(build_ao_classical(G)))
    assert rep.fidelity == pytest.approx(G / (2 * G - 1), abs=1e-12)
    assert rep.transfer_sum == pytest.approx(2 * G / (3 * G - 2), abs=1e-12)
    assert rep.conditional_variance_plus == pytest.approx(2 * (G - 1) / G, abs=1e-12)


def test_ao_classical_bound_at_huge_gain():
    rep = report(run(build_ao_classical(1e12)))
    assert rep.fidelity == pytest.approx(0.5, abs=1e-9)
    assert rep.transfer_sum == pytest.approx(2 / 3, abs=1e-9)


def test_quantum_transfer_h25():
    rep = report(run(build_ao_quantum(1e6, 25.0)))
    assert rep.transfer_plus == pytest.approx(1 / (1 + epr_excess(25.0)), abs=1e-5)
    assert rep.transfer_plus == pytest.approx(0.980, abs=5e-4)
    assert rep.transfer_sum == pytest.approx(1.96, abs=1e-3)
    assert rep.beats_classical_transfer and rep.beats_classical_fidelity


def test_fidelity_perfect_and_classical_formula():
    assert coherent_fidelity(1.0, 1.0) == 1.0
    assert coherent_fidelity(3.0, 3.0) == 0.5


def test_fidelity_non_unity_gain_formula():
    # gain 2, mean (2, 0): exp(-(1)^2 * 4 / (2 * (1 + V)))
    f = coherent_fidelity(5.0, 5.0, gain=2.0, mean_in=(2.0, 0.0))
    assert f == pytest.approx(2 / 6 * math.exp(-4 / 12), abs=1e-15)


def test_gaussian_overlap_reduces_to_diagonal_formula():
    cov = np.diag([2.0, 4.0])
    assert gaussian_overlap([0.0, 0.0], cov) == pytest.approx(coherent_fidelity(2.0, 4.0), abs=1e-15)


def test_report_fidelity_with_mean_error():
    # eo with lambda K = 2 doubles the mean; the fidelity must drop with |alpha|
    f0 = report(run(build_eo_classical(1.0, 2.0), 0j)).fidelity
    f1 = report(run(build_eo_classical(1.0, 2.0), 1.0)).fidelity
    assert f1 < f0


@pytest.mark.parametrize("H", [1.0, 1.2, 4.0, 25.0, 100.0, 1e4])
def test_quantum_fidelity_closed_form(H):
    rep = report(run(build_ao_quantum(1e6, H)))
    x = (math.sqrt(H) - math.sqrt(H - 1)) ** 2
    assert rep.fidelity == pytest.approx(1 / (1 + x), abs=2e-6)


def test_fidelity_h1_is_half():
    assert report(run(build_ao_quantum(1e6, 1.0))).fidelity == pytest.approx(0.5, abs=1e-6)
    # exact form at finite G: V = 1 + 2 (G-1)/G
    G = 50.0
    v = 1 + 2 * (G - 1) / G
    assert report(run(build_ao_quantum(G, 1.0))).fidelity == pytest.approx(2 / (1 + v), abs=1e-12)


def test_fidelity_monotone_in_h():
    Hs = np.geomspace(1.0, 1e6, 40)
    F = [report(run(build_ao_quantum(1e6, H))).fidelity for H in Hs]
    assert all(b > a for a, b in zip(F, F[1:]))
    assert F[-1] == pytest.approx(1.0, abs=1e-3)


@given(st.floats(1.0, 1e6), st.floats(1.0, 1e6))
@settings(max_examples=60, deadline=None)
def test_fidelity_monotone_property(h1, h2):
    lo, hi = sorted((h1, h2))
    f_lo = report(run(build_ao_quantum(1e6, lo))).fidelity
    f_hi = report(run(build_ao_quantum(1e6, hi))).fidelity
    assert f_hi >= f_lo - 1e-12


@pytest.mark.parametrize("builder", [
    lambda: build_eo_classical(1.0, 1.0),
    lambda: build_eo_classical(3.0, 1 / 3),
    lambda: build_ao_classical(1.5),
    lambda: build_ao_classical(1e4),
    lambda: build_ao_quantum(10.0, 3.0),
    lambda: build_ao_quantum(10.0, 3.0, composite=True),
    lambda: build_ao_quantum(1e6, 100.0),
])
def test_conditional_variance_equals_added_noise(builder):
    rep = report(run(builder(), 0.3 - 0.7j))
    assert rep.unity_gain
    assert rep.conditional_variance_plus == pytest.approx(rep.added_noise_plus, abs=1e-10)
    assert rep.conditional_variance_minus == pytest.approx(rep.added_noise_minus, abs=1e-10)


def test_conditional_variance_vanishes_for_large_h():
    r = run(build_ao_quantum(1e6, 1e8))
    vp, vm = conditional_variance(r.input, r.output)
    assert vp < 1e-7 and vm < 1e-7


@given(st.floats(1.0001, 1e6))
@settings(max_examples=50, deadline=None)
def test_classical_transfer_never_beats_one(G):
    rep = report(run(build_eo_classical(math.sqrt(G), 1 / math.sqrt(G))))
    assert rep.transfer_sum <= 1.0 + 1e-12
    if G >= 2.0:
        assert report(run(build_ao_classical(G))).transfer_sum <= 1.0 + 1e-12


def test_ao_classical_low_gain_exceeds_transfer_bound():
    # below G = 2 the sender amplifier does not make the channel classical
    rep = report(run(build_ao_classical(1.5)))
    assert rep.transfer_sum > 1.0
    assert not rep.classical_channel_flag


def transfer_threshold_h(G):
    """H above which T+ + T- > 1: the added noise 2(G-1)/G (sqrt H - sqrt(H-1))^2 drops below 1."""
    c = math.sqrt(G / (2 * (G - 1)))
    return ((c + 1 / c) / 2) ** 2


@given(st.floats(1.0001, 1e6), st.sampled_from([100.0, 1e4, 1e6]))
@settings(max_examples=80, deadline=None)
def test_quantum_transfer_boundary(H, G):
    rep = report(run(build_ao_quantum(G, H)))
    h_star = transfer_threshold_h(G)
    if H > h_star * (1 + 1e-9):
        assert rep.transfer_sum > 1.0
    elif H < h_star * (1 - 1e-9):
        assert rep.transfer_sum < 1.0


def test_transfer_threshold_value():
    assert transfer_threshold_h(1e12) == pytest.approx(9 / 8, abs=1e-9)
    rep = report(run(build_ao_quantum(1e6, 1.2)))
    assert rep.beats_classical_transfer
    assert not report(run(build_ao_quantum(1e6, 1.1))).beats_classical_transfer


@given(st.floats(1.0001, 1e6))
@settings(max_examples=50, deadline=None)
def test_quantum_fidelity_beats_half(H):
    assert report(run(build_ao_quantum(1e6, H))).beats_classical_fidelity


def test_transfer_definition():
    m = basis_modes(new_basis("a"))["a"]
    s = quadrature_stats(m)
    noisy = quadrature_stats(m.padded(new_basis("a", ["v"])) + basis_modes(new_basis("a", ["v"]))["v"])
    assert transfer_coefficients(s, noisy) == pytest.approx((0.5, 0.5))


def test_report_invariants_hold():
    for c in (build_eo_classical(2.0, 0.5), build_ao_classical(3.0), build_ao_quantum(3.0, 2.0)):
        rep = report(run(c, 0.2 + 0.2j))
        assert 0.0 <= rep.fidelity <= 1.0
        assert rep.added_noise_plus >= 0 and rep.added_noise_minus >= 0
        assert 0.0 <= rep.transfer_plus <= 1.0 and 0.0 <= rep.transfer_minus <= 1.0


def test_classical_channel_detection():
    r = run(build_eo_classical(1.0, 1.0))
    assert is_classical_channel(r.modes["A_c"])
    m = basis_modes(new_basis("a"))["a"]
    assert not is_classical_channel(m)


def test_as_dict_is_flat_and_named():
    d = report(run(build_ao_classical(100.0))).as_dict()
    for key in ("signal_gain", "added_noise_plus", "fidelity", "transfer_plus",
                "conditional_variance_minus", "classical_channel_flag", "transfer_sum"):
        assert key in d


# ---- cross-check against the number-basis oracle

def _oracle_fidelity(circuit, alpha, cutoff):
    fr = fock.simulate(circuit, cutoff=cutoff, displacement=alpha)
    assert fr.state.trusted, fr.state.log[-1:]
    return fr.overlap(circuit.output, alpha)


@pytest.mark.parametrize("circuit, alpha, cutoff", [
    (build_ao_classical(2.0), 0.3, 40),
    (build_ao_classical(1.2), 1.0, 40),
    (build_eo_classical(1.0, 1.0), 0.3 - 0.2j, 40),
    (build_ao_quantum(1.2, 1.2), 0.3, 40),
    (build_ao_quantum(1.2, 2.0), 1.0, 40),
    (build_ao_quantum(2.0, 2.0), 0.3, 100),
])
def test_fidelity_matches_oracle_overlap(circuit, alpha, cutoff):
    expected = report(run(circuit, alpha)).fidelity
    assert _oracle_fidelity(circuit, alpha, cutoff) == pytest.approx(expected, abs=1e-6)


def test_classical_g2_oracle_matches_exact_formula():
    G = 2.0
    v = 1 + 2 * (G - 1) / G
    got = _oracle_fidelity(build_ao_classical(G), 0.3, 40)
    assert got == pytest.approx(coherent_fidelity(v, v), abs=1e-6)
