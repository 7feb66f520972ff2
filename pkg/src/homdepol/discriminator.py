"""Verdicts: is the channel a true depolarizer or a fast random rotation?

Single-photon regime: any coincidence beyond what the identical-photon model
allows heralds a rotation.  Coherent regime: the measured visibility must
undercut the ceiling ``V_max(mu)`` by more than the uncertainty
``epsilon = k_sigma * sigma``.

Rotation angles are reported in ``[0, pi/2]``; the sign and the branch
``alpha0 -> pi - alpha0`` cannot be identified from interference data.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from statistics import NormalDist
from typing import Union

from scipy import stats

from .coherent import (
    VisibilityEstimate,
    max_visibility,
    model_visibility,
    pair_coincidence_probability,
    reference_coincidence_probability,
    rotation_overlaps,
)
from .fock import DetectorParams, coincidence_with_losses
from .polarization import Pairing, PolarizationState

HALF_PI = math.pi / 2


class OutOfModelError(ValueError):
    """A visibility outside the range the rotation model can produce."""


@dataclass(frozen=True)
class ConclusiveRandomRotation:
    alpha0_estimate: float
    ci_low: float
    ci_high: float
    kind = "ConclusiveRandomRotation"

    def __post_init__(self):
        if not self.ci_low <= self.alpha0_estimate <= self.ci_high:
            raise ValueError("confidence interval must bracket the estimate")


@dataclass(frozen=True)
class InconclusiveAtMaximum:
    kind = "InconclusiveAtMaximum"


@dataclass(frozen=True)
class InconclusiveInsufficientPrecision:
    required_sigma: float
    kind = "InconclusiveInsufficientPrecision"


@dataclass(frozen=True)
class InconclusiveNoEvidence:
    alpha0_upper_bound: float
    confidence: float
    kind = "InconclusiveNoEvidence"

    def __post_init__(self):
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")


Verdict = Union[
    ConclusiveRandomRotation,
    InconclusiveAtMaximum,
    InconclusiveInsufficientPrecision,
    InconclusiveNoEvidence,
]

VERDICT_FIELDS = ("alpha0_estimate", "ci_low", "ci_high", "required_sigma", "alpha0_upper_bound", "confidence")


def verdict_record(verdict: Verdict) -> dict:
    """Flat record with every verdict field present (``None`` where not applicable)."""
    rec = {"kind": verdict.kind} | {k: None for k in VERDICT_FIELDS}
    rec.update(asdict(verdict))
    return rec


def _alpha_from_sin2(s: float) -> float:
    return math.asin(math.sqrt(min(max(s, 0.0), 1.0)))


def _check_confidence(confidence: float) -> None:
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence!r}")


def single_photon_verdict(
    coincidences: int,
    n_pairs: int,
    det: DetectorParams,
    confidence: float = 0.95,
    p_differ: float = 0.5,
) -> Verdict:
    """Verdict from a Fock-state run.

    Without dark counts a single coincidence proves a rotation.  With dark
    counts the count is tested against the identical-photon rate at level
    ``1 - confidence``.  The rotation angle is recovered from the coincidence
    rate, which is affine in ``sin^2(alpha0)``; its interval is a
    Clopper-Pearson interval mapped through that relation.
    """
    _check_confidence(confidence)
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    if not 0 <= coincidences <= n_pairs:
        raise ValueError("coincidences must lie in [0, n_pairs]")

    # coincidence rate as an affine function of s = sin^2(alpha0)
    h = PolarizationState(1, 0)
    base = coincidence_with_losses(h, h, det, p_differ)
    full = coincidence_with_losses(h, PolarizationState(0, 1), det, p_differ)
    slope = full - base

    def sin2(rate: float) -> float:
        return (rate - base) / slope if slope > 0 else 1.0

    tail = 1.0 - confidence
    if det.dark_prob == 0.0:
        significant = coincidences > 0
    else:
        significant = stats.binom.sf(coincidences - 1, n_pairs, base) < tail

    if not significant:
        upper_rate = stats.beta.ppf(confidence, coincidences + 1, n_pairs - coincidences)
        if coincidences == 0:
            upper_rate = -math.expm1(math.log1p(-confidence) / n_pairs)
        return InconclusiveNoEvidence(_alpha_from_sin2(sin2(upper_rate)), confidence)

    rate = coincidences / n_pairs
    lo = stats.beta.ppf(tail / 2, coincidences, n_pairs - coincidences + 1)
    hi = 1.0 if coincidences == n_pairs else stats.beta.ppf(1 - tail / 2, coincidences + 1, n_pairs - coincidences)
    est = _alpha_from_sin2(sin2(rate))
    return ConclusiveRandomRotation(
        est,
        min(_alpha_from_sin2(sin2(lo)), est),
        max(_alpha_from_sin2(sin2(hi)), est),
    )


def estimate_alpha0(
    v: float,
    mu: float,
    det: DetectorParams | None = None,
    pairing: Pairing = Pairing.ALTERNATING,
    tol: float = 1e-14,
) -> float:
    """Rotation angle whose expected visibility at ``mu`` equals ``v``.

    Bisects the monotone map ``alpha0 -> V`` on ``[0, pi/2]``; ``mu == 0``
    uses the weak-pulse limit.
    """
    det = det or DetectorParams()
    v_hi = max_visibility(mu, det)
    v_lo = model_visibility(mu, HALF_PI, det, pairing)
    slack = 1e-12
    if v > v_hi + slack or v < v_lo - slack:
        raise OutOfModelError(
            f"visibility {v!r} is outside [{v_lo!r}, {v_hi!r}] reachable by a rotation at mu={mu!r}"
        )
    if v >= v_hi:
        return 0.0
    if v <= v_lo:
        return HALF_PI
    lo, hi = 0.0, HALF_PI
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if model_visibility(mu, mid, det, pairing) > v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def coherent_verdict(
    est: VisibilityEstimate,
    mu: float,
    det: DetectorParams | None = None,
    k_sigma: float = 2.0,
    pairing: Pairing = Pairing.ALTERNATING,
) -> Verdict:
    """Apply the margin rule to a measured visibility.

    With ``epsilon = k_sigma * sigma`` and ceiling ``V_max(mu)``:
    ``v + epsilon < V_max`` is conclusive.  Otherwise the result is at the
    maximum when ``v`` lies within ``epsilon/2`` of the ceiling, and short of
    precision (more data could decide) when it sits further below.
    """
    det = det or DetectorParams()
    if not k_sigma > 0:
        raise ValueError("k_sigma must be positive")
    if not (math.isfinite(est.v) and math.isfinite(est.sigma)) or est.sigma < 0:
        raise ValueError(f"ill-formed visibility estimate {est!r}")
    eps = k_sigma * est.sigma
    v_max = max_visibility(mu, det)
    v_min = model_visibility(mu, HALF_PI, det, pairing)
    if est.v + eps < v_max:

        def angle(v: float) -> float:
            return estimate_alpha0(min(max(v, v_min), v_max), mu, det, pairing)

        return ConclusiveRandomRotation(angle(est.v), angle(est.v + eps), angle(est.v - eps))
    if est.v >= v_max - eps / 2:
        return InconclusiveAtMaximum()
    return InconclusiveInsufficientPrecision(required_sigma=(v_max - est.v) / k_sigma)


def predicted_sigma_factor(mu: float, alpha0: float, det: DetectorParams, pairing: Pairing) -> tuple[float, float]:
    """``(margin, F)`` with ``sigma(V)^2 = F / n_pairs`` under binomial counting."""
    g = rotation_overlaps(alpha0, pairing)
    pc = sum(w * pair_coincidence_probability(mu, mu, gi, det) for w, gi in g)
    pr = reference_coincidence_probability(mu, det)
    r = pc / pr
    factor = r**2 * ((1 - pc) / pc + (1 - pr) / pr)
    margin = max_visibility(mu, det) - (1 - r)
    return margin, factor


def required_pairs(
    mu: float,
    alpha0_resolvable: float,
    det: DetectorParams | None = None,
    k_sigma: float = 2.0,
    power: float = 0.95,
    pairing: Pairing = Pairing.ALTERNATING,
) -> int:
    """Pulse pairs needed to resolve ``alpha0_resolvable`` from the ceiling.

    Solves ``(k_sigma + z_power) * sigma(V) <= V_max - V`` so that a run of that
    size is conclusive with probability ``power``; ``power = 0.5`` gives the
    bare ``k_sigma * sigma < margin`` condition.
    """
    det = det or DetectorParams()
    if not alpha0_resolvable > 0:
        raise ValueError("alpha0_resolvable must be positive")
    if not mu > 0:
        raise ValueError("mu must be positive")
    if not 0.0 < power < 1.0:
        raise ValueError("power must lie in (0, 1)")
    margin, factor = predicted_sigma_factor(mu, alpha0_resolvable, det, pairing)
    if margin <= 0:
        raise ValueError(f"alpha0={alpha0_resolvable!r} is not resolvable from the ceiling at mu={mu!r}")
    z = k_sigma + NormalDist().inv_cdf(power)
    if z <= 0:
        return 1
    return max(1, math.floor(z * z * factor / margin**2) + 1)
