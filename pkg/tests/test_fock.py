import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homdepol.fock import (
    INPUT_MODES,
    OUTPUT_MODES,
    DetectorParams,
    FockSuperposition,
    Spatial,
    beamsplitter_transform,
    click_outcome_probabilities,
    coincidence_with_losses,
    hom_coincidence_probability,
    pair_outcome_probabilities,
    simulate_fock_experiment,
    single_photon,
    two_photon_input,
)
from homdepol.polarization import (
    IdealDepolarizing,
    Pairing,
    PolarizationState,
    RandomRotation,
    TemporalProfile,
    TimeEntanglement,
)
from homdepol.rng import RandomStreams

from oracles import symbolic_coincidence_probability, symbolic_output_amplitudes

H = PolarizationState(1, 0)
V = PolarizationState(0, 1)


def rotated_pair(alpha0):
    r = 1 / math.sqrt(2)
    return PolarizationState(r, r * cmath.exp(1j * alpha0)), PolarizationState(r, r * cmath.exp(-1j * alpha0))


def random_state(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return PolarizationState.from_vector(v, normalize=True)


def test_bunching_of_identical_photons():
    out = beamsplitter_transform(two_photon_input(H, H))
    r = 1 / math.sqrt(2)
    assert set(out.terms) == {(2, 0, 0, 0), (0, 0, 2, 0)}
    assert abs(out.amplitude(c_H=2)) == pytest.approx(r, abs=1e-15)
    assert abs(out.amplitude(d_H=2)) == pytest.approx(r, abs=1e-15)
    # a common phase: the two amplitudes are equal, as for (c^2 + d^2)/sqrt2
    assert out.amplitude(c_H=2) == pytest.approx(out.amplitude(d_H=2), abs=1e-15)


def test_single_photon_splits_evenly():
    out = beamsplitter_transform(single_photon(Spatial.A, H))
    r = 1 / math.sqrt(2)
    assert out.amplitude(d_H=1) == pytest.approx(r)
    assert out.amplitude(c_H=1) == pytest.approx(-1j * r)


@pytest.mark.parametrize("alpha0", [0.0, 0.3, math.pi / 4, 1.2, math.pi / 2])
def test_rotated_pair_output_amplitudes(alpha0):
    # normalized expansion; the coincidence coefficients are -sin(alpha0)/2 on c_H d_V and +sin/2 on c_V d_H
    # up to the global phase -i.  The bunched terms carry 1/4 (creation form) and +cos/2.
    out = beamsplitter_transform(two_photon_input(*rotated_pair(alpha0)))
    s, c = math.sin(alpha0), math.cos(alpha0)
    sq = math.sqrt(2) / 4  # (1/4) c^dag^2 |0> = (sqrt2/4)|2>
    expected = {
        (2, 0, 0, 0): sq, (0, 2, 0, 0): sq, (0, 0, 2, 0): sq, (0, 0, 0, 2): sq,
        (1, 0, 0, 1): -s / 2, (0, 1, 1, 0): s / 2,
        (1, 1, 0, 0): c / 2, (0, 0, 1, 1): c / 2,
    }
    expected = {k: -1j * v for k, v in expected.items() if abs(v) > 1e-15}
    got = {k: v for k, v in out.terms.items() if abs(v) > 1e-15}
    assert set(got) == set(expected)
    for k, v in expected.items():
        assert got[k] == pytest.approx(v, abs=1e-12)
    assert out.norm == pytest.approx(1.0, abs=1e-12)


def test_engine_matches_symbolic_expansion():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = random_state(rng), random_state(rng)
        ours = beamsplitter_transform(two_photon_input(a, b)).terms
        sym = symbolic_output_amplitudes(a.lab_vector(), b.lab_vector())
        for k in set(ours) | set(sym):
            assert ours.get(k, 0) == pytest.approx(sym.get(k, 0), abs=1e-12)


def test_coincidence_examples():
    assert hom_coincidence_probability(H, H) == 0.0
    assert hom_coincidence_probability(H, V) == pytest.approx(0.5, abs=1e-12)
    assert hom_coincidence_probability(*rotated_pair(math.pi / 4)) == pytest.approx(0.25, abs=1e-12)
    # frozen from the symbolic oracle
    a, b = rotated_pair(math.pi / 4)
    assert symbolic_coincidence_probability(a.lab_vector(), b.lab_vector()) == pytest.approx(0.25, abs=1e-12)


def test_rejects_output_modes_and_photon_cap():
    out = beamsplitter_transform(two_photon_input(H, V))
    with pytest.raises(ValueError):
        beamsplitter_transform(out)
    with pytest.raises(ValueError):
        FockSuperposition(INPUT_MODES, {(3, 0, 0, 0): 1.0})
    with pytest.raises(ValueError):
        FockSuperposition(INPUT_MODES, {(1, 0, 0, 0): 0.6, (1, 1, 0, 0): 0.8})


@st.composite
def states(draw):
    t = draw(st.floats(0, math.pi))
    p = draw(st.floats(0, 2 * math.pi))
    return PolarizationState(complex(math.cos(t / 2)), math.sin(t / 2) * cmath.exp(1j * p))


@given(states(), states())
@settings(max_examples=100, deadline=None)
def test_beamsplitter_is_unitary(a, b):
    state = two_photon_input(a, b)
    out = beamsplitter_transform(state)
    assert out.norm == pytest.approx(1.0, abs=1e-12)
    assert out.photon_number == 2
    assert out.modes == OUTPUT_MODES


@given(states(), states())
@settings(max_examples=100, deadline=None)
def test_coincidence_law_and_symmetry(a, b):
    p = hom_coincidence_probability(a, b)
    assert p == pytest.approx(0.5 * (1 - a.fidelity(b)), abs=1e-12)
    assert p == pytest.approx(hom_coincidence_probability(b, a), abs=1e-12)


@given(states(), states(), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
@settings(max_examples=100, deadline=None)
def test_coincidence_invariant_under_common_unitary(a, b, theta, phi):
    # re-expressing both states in another basis and swapping the role of basis vectors is a common unitary
    ua = PolarizationState(a.amp_par, a.amp_perp, theta, phi)
    ub = PolarizationState(b.amp_par, b.amp_perp, theta, phi)
    assert hom_coincidence_probability(ua, ub) == pytest.approx(hom_coincidence_probability(a, b), abs=1e-12)


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorParams(eta_os=1.2)
    with pytest.raises(ValueError):
        DetectorParams(dark_prob=1.0)


def test_coincidence_with_losses_examples():
    a, b = rotated_pair(math.pi / 2)
    assert coincidence_with_losses(a, b, DetectorParams(), 0.5) == pytest.approx(0.25, abs=1e-12)
    assert coincidence_with_losses(a, b, DetectorParams(eta_os=0.0), 0.5) == 0.0
    det = DetectorParams(eta_os=1.0, eta1=0.5, eta2=0.5)
    assert coincidence_with_losses(a, b, det, 0.5) == pytest.approx(0.0625, abs=1e-12)
    with pytest.raises(ValueError):
        coincidence_with_losses(a, b, det, 1.5)


@pytest.mark.parametrize("alpha0", [0.2, 0.9, math.pi / 2])
@pytest.mark.parametrize("eta", [(0.7, 0.4, 0.9), (1.0, 1.0, 1.0), (0.3, 0.8, 0.6)])
def test_lossy_coincidence_formula(alpha0, eta):
    det = DetectorParams(*eta)
    eta_os, e1, e2 = eta
    got = coincidence_with_losses(*rotated_pair(alpha0), det, 0.5)
    assert got == pytest.approx(0.25 * eta_os**2 * e1 * e2 * math.sin(alpha0) ** 2, abs=1e-12)


def test_dark_counts_in_click_model():
    det = DetectorParams(dark_prob=0.01)
    probs = pair_outcome_probabilities(H, H, det)
    assert probs.sum() == pytest.approx(1.0)
    # identical photons bunch: a coincidence needs a dark click on the empty side
    assert probs[3] == pytest.approx(0.01, abs=1e-12)
    out = beamsplitter_transform(two_photon_input(H, V))
    assert click_outcome_probabilities(out, DetectorParams())[3] == pytest.approx(0.5)


def test_simulated_time_entanglement_never_coincides():
    ch = TimeEntanglement(TemporalProfile(tau_c=1e-12, tau=5e-12))
    counts = simulate_fock_experiment(ch, 200_000, DetectorParams(), RandomStreams(1))
    assert counts.coincidences == 0
    assert counts.singles[0] + counts.singles[1] == 200_000


def test_simulated_rotation_rate():
    ch = RandomRotation(math.pi / 2, pairing=Pairing.INDEPENDENT_FAIR)
    n = 10**6
    counts = simulate_fock_experiment(ch, n, DetectorParams(), RandomStreams(2))
    assert abs(counts.rate - 0.25) < 0.0013


def test_simulate_zero_pairs():
    counts = simulate_fock_experiment(RandomRotation(1.0), 0, DetectorParams(), 3)
    assert counts.coincidences == 0 and counts.singles == (0, 0)


def test_simulate_rejects_mechanism_free_channel():
    with pytest.raises(ValueError):
        simulate_fock_experiment(IdealDepolarizing(0.5), 10, DetectorParams(), 3)


@pytest.mark.parametrize("pairing", list(Pairing))
@pytest.mark.parametrize("alpha0, det", [(0.6, DetectorParams(0.8, 0.7, 0.9)), (1.4, DetectorParams(1.0, 0.5, 0.5, 0.02))])
def test_monte_carlo_matches_exact(pairing, alpha0, det):
    n = 400_000
    counts = simulate_fock_experiment(RandomRotation(alpha0, pairing=pairing), n, det, RandomStreams(7, (int(alpha0 * 10),)))
    p = coincidence_with_losses(*rotated_pair(alpha0), det, pairing.p_differ)
    sigma = math.sqrt(p * (1 - p) / n)
    assert abs(counts.rate - p) < 4 * sigma


def test_simulation_independent_of_threads():
    ch = RandomRotation(1.0, pairing=Pairing.INDEPENDENT_FAIR)
    a = simulate_fock_experiment(ch, 2_500_000, DetectorParams(), RandomStreams(9), threads=1)
    b = simulate_fock_experiment(ch, 2_500_000, DetectorParams(), RandomStreams(9), threads=3)
    assert a == b
