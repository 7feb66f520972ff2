"""Weak coherent pulses at the beamsplitter, threshold detectors, HOM visibility.

Pulses are treated as classical fields with a uniformly random relative
optical phase.  Each output port clicks with probability
``1 - (1 - dark) * exp(-eta * I)``, where ``I`` is the mean photon number
arriving at that port.  The visibility is ``1 - C_channel / C_reference`` with
the reference made of orthogonally polarized (fully distinguishable) pulses.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fock import DetectorParams
from .polarization import (
    ChannelModel,
    Pairing,
    PolarizationState,
    RandomRotation,
    TemporalProfile,
    TimeEntanglement,
    gaussian_overlap,
    pair_realizations,
)
from .rng import RandomStreams, as_streams, run_sharded

QUADRATURE_NODES = 64


class EstimationError(RuntimeError):
    """The reference run recorded no coincidences, so no visibility can be formed."""


@dataclass(frozen=True)
class CoherentPulse:
    mu: float
    jones: PolarizationState
    phase: float = 0.0

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError(f"mu must be non-negative, got {self.mu!r}")

    @property
    def field(self) -> np.ndarray:
        return math.sqrt(self.mu) * cmath.exp(1j * self.phase) * self.jones.lab_vector()


def output_fields(field_a: np.ndarray, field_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Beamsplitter on classical fields: ``C = (-iA + B)/sqrt2``, ``D = (A - iB)/sqrt2``.

    Polarization is the last axis.
    """
    a = np.asarray(field_a, dtype=complex)
    b = np.asarray(field_b, dtype=complex)
    r = 1 / math.sqrt(2)
    return r * (-1j * a + b), r * (a - 1j * b)


def output_intensities(field_a, field_b, coherence: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Mean photon numbers at ports C and D.

    ``coherence < 1`` scales the interference term, as for a temporal
    mismatch between the two pulses.
    """
    c, d = output_fields(field_a, field_b)
    i_c = np.sum(np.abs(c) ** 2, axis=-1)
    i_d = np.sum(np.abs(d) ** 2, axis=-1)
    if coherence != 1.0:
        mean = 0.5 * (i_c + i_d)
        i_c = coherence * i_c + (1 - coherence) * mean
        i_d = coherence * i_d + (1 - coherence) * mean
    return i_c, i_d


@lru_cache(maxsize=8)
def _phase_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return math.pi * (x + 1), w / 2


def _coincidence_from_cross(
    mu_a: float, mu_b: float, cross_im: np.ndarray, det: DetectorParams
) -> np.ndarray:
    """Coincidence probability given ``Im(A^dag B)`` (vectorized over phases)."""
    t1, t2 = det.transmission
    keep = 1.0 - det.dark_prob
    mean = 0.5 * (mu_a + mu_b)
    i_c = mean - cross_im
    i_d = mean + cross_im
    p1 = 1.0 - keep * np.exp(-t1 * i_c)
    p2 = 1.0 - keep * np.exp(-t2 * i_d)
    return np.clip(p1 * p2, 0.0, 1.0)


def pair_coincidence_probability(
    mu_a: float,
    mu_b: float,
    inner: complex,
    det: DetectorParams,
    coherence: float = 1.0,
    nodes: int = QUADRATURE_NODES,
) -> float:
    """Phase-averaged coincidence probability for pulses with Jones overlap ``inner``."""
    psi, w = _phase_nodes(nodes)
    cross = math.sqrt(mu_a * mu_b) * coherence * inner * np.exp(1j * psi)
    return float(np.dot(w, _coincidence_from_cross(mu_a, mu_b, cross.imag, det)))


def coherent_pair_click_probability(
    pulse_a: CoherentPulse,
    pulse_b: CoherentPulse,
    det: DetectorParams,
    coherence: float = 1.0,
    nodes: int = QUADRATURE_NODES,
) -> float:
    """Coincidence probability averaged over the relative optical phase.

    The fields are pushed through the beamsplitter at every quadrature node.
    """
    psi, w = _phase_nodes(nodes)
    fa = pulse_a.field
    fb = pulse_b.field[None, :] * np.exp(1j * psi)[:, None]
    i_c, i_d = output_intensities(np.broadcast_to(fa, fb.shape), fb, coherence)
    t1, t2 = det.transmission
    keep = 1.0 - det.dark_prob
    p = (1.0 - keep * np.exp(-t1 * i_c)) * (1.0 - keep * np.exp(-t2 * i_d))
    return float(np.dot(w, np.clip(p, 0.0, 1.0)))


def reference_coincidence_probability(mu: float, det: DetectorParams) -> float:
    return pair_coincidence_probability(mu, mu, 0j, det)


def visibility_for_overlaps(
    overlaps: list[tuple[float, complex]],
    mu: float,
    det: DetectorParams,
    coherence: float = 1.0,
) -> float:
    """Expected visibility for a mixture of pair overlaps ``[(weight, <a|b>), ...]``.

    ``mu == 0`` returns the weak-pulse limit.
    """
    if mu < 0:
        raise ValueError("mu must be non-negative")
    if mu == 0:
        if det.dark_prob > 0:
            return 0.0
        if det.transmission[0] == 0 or det.transmission[1] == 0:
            raise EstimationError("no light reaches one of the detectors")
        return sum(w * 0.5 * (coherence * abs(g)) ** 2 for w, g in overlaps)
    ref = reference_coincidence_probability(mu, det)
    if ref <= 0:
        raise EstimationError("reference coincidence probability is zero")
    chan = sum(w * pair_coincidence_probability(mu, mu, g, det, coherence) for w, g in overlaps)
    return 1.0 - chan / ref


def rotation_overlaps(alpha0: float, pairing: Pairing = Pairing.ALTERNATING) -> list[tuple[float, complex]]:
    """Pair overlaps of a balanced input behind the two-valued random rotation."""
    differ = 0.5 * (1 + cmath.exp(-2j * alpha0))
    if pairing is Pairing.ALTERNATING:
        return [(1.0, differ)]
    return [(0.5, 1.0 + 0j), (0.5, differ)]


def model_visibility(
    mu: float,
    alpha0: float,
    det: DetectorParams | None = None,
    pairing: Pairing = Pairing.ALTERNATING,
) -> float:
    """Expected visibility of the random-rotation channel at mean photon number ``mu``."""
    return visibility_for_overlaps(rotation_overlaps(alpha0, pairing), mu, det or DetectorParams())


def max_visibility(mu: float, det: DetectorParams | None = None) -> float:
    """Visibility of perfectly indistinguishable pulses: the ceiling at this ``mu``."""
    return visibility_for_overlaps([(1.0, 1.0 + 0j)], mu, det or DetectorParams())


def analytic_visibility_low_mu(channel_kind: str, alpha0: float = 0.0) -> float:
    """Weak-pulse visibility: 1/2 for true depolarization, ``cos^2(alpha0)/2`` for alternating rotations."""
    if not 0.0 <= alpha0 <= math.pi:
        raise ValueError(f"alpha0 must lie in [0, pi], got {alpha0!r}")
    kind = _normalize_kind(channel_kind)
    if kind == "time_entanglement":
        return 0.5
    return 0.5 * math.cos(alpha0) ** 2


def _normalize_kind(kind: str) -> str:
    aliases = {
        "depolarizing": "time_entanglement",
        "time_entanglement": "time_entanglement",
        "rotation": "random_rotation",
        "random_rotation": "random_rotation",
    }
    try:
        return aliases[kind]
    except KeyError:
        raise ValueError(f"unknown channel kind {kind!r}") from None


@dataclass(frozen=True)
class VisibilityEstimate:
    v: float
    sigma: float
    n_pairs: int
    coincidences_channel: int
    coincidences_reference: int

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be non-negative")

    @classmethod
    def from_counts(cls, n_pairs: int, coincidences_channel: int, coincidences_reference: int) -> "VisibilityEstimate":
        """Visibility from counts; the uncertainty propagates binomial variances of both counters.

        A zero channel count is given a variance of one count so the
        uncertainty never collapses to zero.
        """
        if coincidences_reference <= 0:
            raise EstimationError(
                "reference run recorded no coincidences; mu * eta is too small for n_pairs"
            )
        if not 0 <= coincidences_channel <= n_pairs or coincidences_reference > n_pairs:
            raise ValueError("coincidence counts must lie in [0, n_pairs]")
        cc, cr, n = float(coincidences_channel), float(coincidences_reference), float(n_pairs)
        ratio = cc / cr
        var_c = max(cc * (1 - cc / n), 1.0)
        var_r = cr * (1 - cr / n)
        sigma = math.sqrt(var_c / cr**2 + cc**2 * var_r / cr**4)
        return cls(1.0 - ratio, sigma, n_pairs, coincidences_channel, coincidences_reference)


@dataclass(frozen=True)
class _Counts:
    coincidences: int
    singles1: int
    singles2: int


def _click_counts(
    gen: np.random.Generator,
    size: int,
    mu: float,
    det: DetectorParams,
    weights: np.ndarray,
    inners: np.ndarray,
    coherence: float,
) -> np.ndarray:
    # one row of four uniforms per pair: realization, phase, click D1, click D2
    u = gen.random((size, 4))
    if len(weights) > 1:
        idx = np.searchsorted(np.cumsum(weights)[:-1], u[:, 0], side="right")
        g = inners[idx]
    else:
        g = np.full(size, inners[0])
    # Im(A^dag B) with B carrying the relative phase
    cross = mu * coherence * np.abs(g) * np.sin(2 * math.pi * u[:, 1] + np.angle(g))
    t1, t2 = det.transmission
    keep = 1.0 - det.dark_prob
    c1 = u[:, 2] < 1.0 - keep * np.exp(-t1 * (mu - cross))
    c2 = u[:, 3] < 1.0 - keep * np.exp(-t2 * (mu + cross))
    return np.array([np.count_nonzero(c1 & c2), np.count_nonzero(c1), np.count_nonzero(c2)], dtype=np.int64)


@dataclass(frozen=True)
class VisibilityRun:
    """Raw counters of a channel run and its distinguishable reference."""

    n_pairs: int
    channel: _Counts
    reference: _Counts

    def estimate(self) -> VisibilityEstimate:
        return VisibilityEstimate.from_counts(self.n_pairs, self.channel.coincidences, self.reference.coincidences)


def simulate_visibility_counts(
    channel: ChannelModel,
    mu: float,
    n_pairs: int,
    det: DetectorParams,
    rng: RandomStreams | int,
    psi_in: PolarizationState | None = None,
    od_mismatch: float = 0.0,
    tau_c: float | None = None,
    threads: int = 1,
) -> VisibilityRun:
    """Monte Carlo of channel and reference pulse pairs with independent sub-streams."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    psi_in = psi_in or PolarizationState.balanced()
    coherence = 1.0
    if od_mismatch:
        if tau_c is None and isinstance(channel, TimeEntanglement):
            tau_c = channel.profile.tau_c
        if tau_c is None:
            raise ValueError("od_mismatch needs a coherence time tau_c")
        coherence = gaussian_overlap(od_mismatch, tau_c)
    reals = pair_realizations(channel, psi_in)
    weights = np.array([r.weight for r in reals])
    inners = np.array([r.psi_a.overlap(r.psi_b) for r in reals])
    streams = as_streams(rng)

    def run(sub: RandomStreams, w, g) -> _Counts:
        parts = run_sharded(lambda gen, size: _click_counts(gen, size, mu, det, w, g, coherence), n_pairs, sub, threads)
        total = np.sum(parts, axis=0)
        return _Counts(*(int(x) for x in total))

    chan = run(streams.child(0), weights, inners)
    ref = run(streams.child(1), np.array([1.0]), np.array([0j]))
    return VisibilityRun(n_pairs, chan, ref)


def run_visibility_experiment(
    channel: ChannelModel,
    mu: float,
    n_pairs: int,
    det: DetectorParams,
    rng: RandomStreams | int,
    psi_in: PolarizationState | None = None,
    od_mismatch: float = 0.0,
    tau_c: float | None = None,
    threads: int = 1,
) -> VisibilityEstimate:
    """Measured HOM visibility of ``channel`` against a distinguishable reference.

    Raises :class:`EstimationError` when the reference records no coincidence.
    """
    return simulate_visibility_counts(
        channel, mu, n_pairs, det, rng, psi_in, od_mismatch, tau_c, threads
    ).estimate()


@dataclass(frozen=True)
class SurfaceCell:
    mu: float
    alpha0: float
    estimate: VisibilityEstimate | None
    error: str | None = None

    @property
    def visibility(self) -> float:
        return self.estimate.v if self.estimate else math.nan

    @property
    def sigma(self) -> float:
        return self.estimate.sigma if self.estimate else math.nan


def make_channel(channel_kind: str, alpha0: float = 0.0, pairing: Pairing = Pairing.ALTERNATING) -> ChannelModel:
    if _normalize_kind(channel_kind) == "time_entanglement":
        return TimeEntanglement(TemporalProfile(tau_c=1.0))
    return RandomRotation(alpha0, pairing=pairing)


def visibility_surface(
    mu_grid,
    alpha0_grid,
    channel_kind: str,
    det: DetectorParams,
    n_pairs: int,
    rng: RandomStreams | int,
    pairing: Pairing = Pairing.ALTERNATING,
    threads: int = 1,
) -> list[SurfaceCell]:
    """Cross-product sweep in (mu, alpha0) order; failed cells are flagged, not raised."""
    mu_grid, alpha0_grid = list(mu_grid), list(alpha0_grid)
    if not mu_grid or not alpha0_grid:
        raise ValueError("mu and alpha0 grids must be non-empty")
    streams = as_streams(rng)
    cells = []
    for i, mu in enumerate(mu_grid):
        for j, alpha0 in enumerate(alpha0_grid):
            try:
                channel = make_channel(channel_kind, alpha0, pairing)
                est = run_visibility_experiment(channel, mu, n_pairs, det, streams.child(i, j), threads=threads)
                cells.append(SurfaceCell(mu, alpha0, est))
            except (EstimationError, ValueError) as exc:
                cells.append(SurfaceCell(mu, alpha0, None, str(exc)))
    return cells
