import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from homdepol.coherent import (
    VisibilityEstimate,
    analytic_visibility_low_mu,
    max_visibility,
    model_visibility,
    pair_coincidence_probability,
    reference_coincidence_probability,
    rotation_overlaps,
    run_visibility_experiment,
)
from homdepol.discriminator import (
    ConclusiveRandomRotation,
    InconclusiveAtMaximum,
    InconclusiveInsufficientPrecision,
    InconclusiveNoEvidence,
    OutOfModelError,
    coherent_verdict,
    estimate_alpha0,
    predicted_sigma_factor,
    required_pairs,
    single_photon_verdict,
    verdict_record,
)
from homdepol.fock import DetectorParams
from homdepol.polarization import Pairing, RandomRotation
from homdepol.rng import RandomStreams

IDEAL = DetectorParams()


def fake_estimate(v, eps, k=2.0):
    return VisibilityEstimate(v, eps / k, 1, 0, 1)


def test_verdict_invariants():
    with pytest.raises(ValueError):
        ConclusiveRandomRotation(0.5, 0.6, 0.7)
    with pytest.raises(ValueError):
        InconclusiveNoEvidence(0.1, 1.0)


def test_verdict_record_has_all_fields():
    rec = verdict_record(InconclusiveAtMaximum())
    assert rec["kind"] == "InconclusiveAtMaximum"
    assert rec["alpha0_estimate"] is None and rec["required_sigma"] is None
    rec = verdict_record(InconclusiveInsufficientPrecision(0.1))
    assert rec["required_sigma"] == 0.1


def test_single_coincidence_is_conclusive():
    for n in (1, 10, 10**6):
        assert isinstance(single_photon_verdict(1, n, IDEAL), ConclusiveRandomRotation)


def test_no_coincidence_is_no_evidence():
    v = single_photon_verdict(0, 10, IDEAL)
    assert isinstance(v, InconclusiveNoEvidence)
    assert v.confidence == 0.95


def test_zero_count_upper_bound():
    n, conf = 10**6, 0.99
    v = single_photon_verdict(0, n, IDEAL, confidence=conf)
    # solve (1 - sin^2(a)/4)^N = 1 - conf numerically
    root = optimize.brentq(lambda a: n * math.log1p(-(math.sin(a) ** 2) / 4) - math.log(1 - conf), 1e-9, 1.0, xtol=1e-15)
    assert v.alpha0_upper_bound == pytest.approx(root, rel=1e-9)
    assert v.alpha0_upper_bound == pytest.approx(4.29e-3, abs=5e-6)


def test_zero_count_bound_with_losses():
    det = DetectorParams(0.8, 0.5, 0.6)
    n, conf = 10**5, 0.95
    v = single_photon_verdict(0, n, det, confidence=conf)
    q = 0.25 * 0.8**2 * 0.5 * 0.6
    assert (1 - q * math.sin(v.alpha0_upper_bound) ** 2) ** n == pytest.approx(1 - conf, rel=1e-9)


def test_single_photon_estimate_inverts_rate():
    alpha0 = 0.7
    n = 10**6
    c = round(0.25 * math.sin(alpha0) ** 2 * n)
    v = single_photon_verdict(c, n, IDEAL)
    assert v.alpha0_estimate == pytest.approx(alpha0, abs=2e-3)
    assert v.ci_low < alpha0 < v.ci_high


def test_single_photon_saturated_rate():
    v = single_photon_verdict(30, 100, IDEAL)
    assert v.alpha0_estimate == pytest.approx(math.pi / 2)
    assert v.ci_high == pytest.approx(math.pi / 2)


def test_single_photon_with_dark_counts_is_statistical():
    det = DetectorParams(dark_prob=1e-3)
    n = 10**5
    # baseline coincidences of identical photons come from dark counts only
    assert isinstance(single_photon_verdict(1, n, det), InconclusiveNoEvidence)
    assert isinstance(single_photon_verdict(2000, n, det), ConclusiveRandomRotation)


def test_single_photon_validation():
    with pytest.raises(ValueError):
        single_photon_verdict(0, 10, IDEAL, confidence=1.0)
    with pytest.raises(ValueError):
        single_photon_verdict(0, 0, IDEAL)
    with pytest.raises(ValueError):
        single_photon_verdict(11, 10, IDEAL)


@pytest.mark.parametrize(
    "v, eps, kind",
    [
        (0.5, 0.02, InconclusiveAtMaximum),
        (0.25, 0.30, InconclusiveInsufficientPrecision),
        (0.1, 0.02, ConclusiveRandomRotation),
    ],
)
def test_coherent_verdict_examples(v, eps, kind):
    assert isinstance(coherent_verdict(fake_estimate(v, eps), 0.01), kind)


def test_insufficient_precision_reports_sigma():
    verdict = coherent_verdict(fake_estimate(0.25, 0.30), 0.01)
    needed = verdict.required_sigma
    assert isinstance(coherent_verdict(fake_estimate(0.25, 2 * needed * 0.99), 0.01), ConclusiveRandomRotation)
    assert needed == pytest.approx((max_visibility(0.01) - 0.25) / 2)


def test_conclusive_interval_brackets_truth():
    verdict = coherent_verdict(fake_estimate(0.1, 0.02), 0.01)
    assert verdict.ci_low <= verdict.alpha0_estimate <= verdict.ci_high
    assert verdict.alpha0_estimate == pytest.approx(estimate_alpha0(0.1, 0.01))


def test_coherent_verdict_validation():
    with pytest.raises(ValueError):
        coherent_verdict(fake_estimate(0.1, 0.02), 0.01, k_sigma=0)
    with pytest.raises(ValueError):
        coherent_verdict(VisibilityEstimate(math.nan, 0.1, 1, 0, 1), 0.01)


def test_below_model_floor_still_conclusive():
    # a fluctuation below V(pi/2) clamps the estimate to the edge
    v = coherent_verdict(fake_estimate(-0.05, 0.02), 0.01)
    assert v.alpha0_estimate == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("v, expected", [(0.5, 0.0), (0.25, math.pi / 4), (0.0, math.pi / 2)])
def test_estimate_alpha0_examples(v, expected):
    assert estimate_alpha0(v, 0.0) == pytest.approx(expected, abs=1e-12)


def test_estimate_alpha0_out_of_model():
    with pytest.raises(OutOfModelError):
        estimate_alpha0(0.6, 0.0)
    with pytest.raises(OutOfModelError):
        estimate_alpha0(0.5, 0.5)


@given(st.floats(0, math.pi / 2))
@settings(max_examples=200, deadline=None)
def test_round_trip_weak_limit(alpha0):
    v = analytic_visibility_low_mu("rotation", alpha0)
    assert estimate_alpha0(v, 0.0) == pytest.approx(alpha0, abs=1e-8)


@given(st.floats(0.01, math.pi / 2), st.sampled_from([0.05, 0.5, 2.0]), st.sampled_from(list(Pairing)))
@settings(max_examples=40, deadline=None)
def test_round_trip_finite_mu(alpha0, mu, pairing):
    v = model_visibility(mu, alpha0, pairing=pairing)
    assert estimate_alpha0(v, mu, pairing=pairing) == pytest.approx(alpha0, abs=1e-6)


def test_required_pairs_decrease_with_mu():
    ns = [required_pairs(mu, 0.5) for mu in (0.01, 0.05, 0.2, 0.5, 1.0)]
    assert all(a > b for a, b in zip(ns, ns[1:]))


def test_required_pairs_diverge_for_small_angles():
    ns = [required_pairs(0.05, a) for a in (0.5, 0.1, 0.02, 0.004)]
    assert all(a < b for a, b in zip(ns, ns[1:]))
    assert ns[-1] > 1e9


def test_required_pairs_validation():
    with pytest.raises(ValueError):
        required_pairs(0.05, 0.0)
    with pytest.raises(ValueError):
        required_pairs(0.0, 0.5)


def test_required_pairs_bare_rule():
    # power 1/2 gives the smallest n with k * sigma(V) < margin under the predicted variance
    mu, alpha0, k = 0.05, 1.0, 2.0
    n = required_pairs(mu, alpha0, k_sigma=k, power=0.5)
    margin, factor = predicted_sigma_factor(mu, alpha0, IDEAL, Pairing.ALTERNATING)
    assert margin == pytest.approx(max_visibility(mu) - model_visibility(mu, alpha0))
    assert k * math.sqrt(factor / n) < margin <= k * math.sqrt(factor / (n - 1))


def test_predicted_sigma_matches_counts():
    mu, alpha0, n = 0.05, 1.0, 10**7
    _, factor = predicted_sigma_factor(mu, alpha0, IDEAL, Pairing.ALTERNATING)
    pc = sum(w * pair_coincidence_probability(mu, mu, g, IDEAL) for w, g in rotation_overlaps(alpha0))
    pr = reference_coincidence_probability(mu, IDEAL)
    est = VisibilityEstimate.from_counts(n, round(n * pc), round(n * pr))
    assert est.sigma == pytest.approx(math.sqrt(factor / n), rel=1e-3)


def test_required_pairs_self_consistency():
    n = required_pairs(0.05, math.pi / 2, k_sigma=2)
    hits = 0
    for i in range(100):
        est = run_visibility_experiment(RandomRotation(math.pi / 2), 0.05, n, IDEAL, RandomStreams(500, (i,)))
        hits += isinstance(coherent_verdict(est, 0.05, k_sigma=2), ConclusiveRandomRotation)
    assert hits >= 90


@pytest.mark.parametrize("alpha0", [0.3, 0.8, math.pi / 2])
def test_verdict_never_weakens_with_noiseless_data(alpha0):
    mu = 0.05
    pc = sum(w * pair_coincidence_probability(mu, mu, g, IDEAL) for w, g in rotation_overlaps(alpha0))
    pr = reference_coincidence_probability(mu, IDEAL)
    seen = False
    for n in np.unique(np.logspace(3, 8, 80).astype(int)):
        est = VisibilityEstimate.from_counts(int(n), round(n * pc), round(n * pr))
        conclusive = isinstance(coherent_verdict(est, mu), ConclusiveRandomRotation)
        assert conclusive or not seen
        seen |= conclusive
    assert seen


def test_verdict_stable_under_seed_extension():
    mu, ch = 0.05, RandomRotation(math.pi / 2)
    seen = False
    for n in (50_000, 100_000, 200_000, 400_000, 800_000):
        est = run_visibility_experiment(ch, mu, n, IDEAL, RandomStreams(77))
        conclusive = isinstance(coherent_verdict(est, mu), ConclusiveRandomRotation)
        assert conclusive or not seen
        seen |= conclusive
    assert seen
