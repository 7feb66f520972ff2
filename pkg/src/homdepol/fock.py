"""Two-photon Hong-Ou-Mandel engine on polarization-resolved Fock modes.

Input modes are ``a`` and ``b`` (H and V each), output modes ``c`` and ``d``.
States are stored on the normalized Fock basis, so a creation-operator
monomial ``prod (k^dag)^n |0>`` carries an extra ``sqrt(prod n!)``.

The channel eigenbasis is identified with H/V (any fixed axis can be rotated
there before the switch), and polarization states enter through their lab
Jones vectors.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .polarization import (
    ChannelModel,
    PolarizationState,
    pair_realizations,
)
from .rng import RandomStreams, as_streams, run_sharded

MAX_PHOTONS = 2


class Spatial(enum.Enum):
    A = "a"
    B = "b"
    C = "c"
    D = "d"


class Pol(enum.Enum):
    H = "H"
    V = "V"


@dataclass(frozen=True)
class ModeIndex:
    spatial: Spatial
    polarization: Pol

    def __str__(self):
        return f"{self.spatial.value}_{self.polarization.value}"


INPUT_MODES = tuple(ModeIndex(s, p) for s in (Spatial.A, Spatial.B) for p in (Pol.H, Pol.V))
OUTPUT_MODES = tuple(ModeIndex(s, p) for s in (Spatial.C, Spatial.D) for p in (Pol.H, Pol.V))

_R = 1 / math.sqrt(2)
# a^dag -> (d^dag - i c^dag)/sqrt2,  b^dag -> (c^dag - i d^dag)/sqrt2, per polarization
BEAMSPLITTER = {
    ModeIndex(Spatial.A, p): {ModeIndex(Spatial.D, p): _R, ModeIndex(Spatial.C, p): -1j * _R}
    for p in Pol
} | {
    ModeIndex(Spatial.B, p): {ModeIndex(Spatial.C, p): _R, ModeIndex(Spatial.D, p): -1j * _R}
    for p in Pol
}


@dataclass(frozen=True)
class FockSuperposition:
    """Superposition of occupation vectors over a fixed tuple of four modes."""

    modes: tuple[ModeIndex, ...]
    terms: Mapping[tuple[int, ...], complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.modes not in (INPUT_MODES, OUTPUT_MODES):
            raise ValueError("modes must be the input (a, b) or output (c, d) mode set")
        terms = {tuple(int(n) for n in occ): complex(amp) for occ, amp in self.terms.items() if amp != 0}
        numbers = {sum(occ) for occ in terms}
        if len(numbers) > 1:
            raise ValueError(f"terms mix photon numbers {sorted(numbers)}")
        for occ in terms:
            if len(occ) != len(self.modes) or min(occ) < 0:
                raise ValueError(f"invalid occupation vector {occ}")
        if numbers and numbers.pop() > MAX_PHOTONS:
            raise ValueError(f"engine supports at most {MAX_PHOTONS} photons")
        object.__setattr__(self, "terms", terms)

    @property
    def photon_number(self) -> int:
        return sum(next(iter(self.terms))) if self.terms else 0

    @property
    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.terms.values()))

    def normalized(self) -> "FockSuperposition":
        n = self.norm
        return FockSuperposition(self.modes, {k: v / n for k, v in self.terms.items()})

    def amplitude(self, **occupation: int) -> complex:
        """Amplitude by mode name, e.g. ``amplitude(c_H=2)``; unnamed modes are empty."""
        occ = tuple(occupation.get(str(m), 0) for m in self.modes)
        return self.terms.get(occ, 0j)

    def spatial_counts(self) -> dict[tuple[int, int], float]:
        """Polarization-blind probability of each (n_first, n_second) spatial split."""
        out: dict[tuple[int, int], float] = defaultdict(float)
        for occ, amp in self.terms.items():
            out[(occ[0] + occ[1], occ[2] + occ[3])] += abs(amp) ** 2
        return dict(out)


def beamsplitter_transform(state: FockSuperposition) -> FockSuperposition:
    """Map a state on the input modes through the 50/50 beamsplitter."""
    if state.modes != INPUT_MODES:
        raise ValueError("beamsplitter_transform expects a state on input modes a/b")
    index = {m: i for i, m in enumerate(OUTPUT_MODES)}
    out: dict[tuple[int, ...], complex] = defaultdict(complex)
    for occ, amp in state.terms.items():
        # creation-operator polynomial for this basis state
        poly = {(0, 0, 0, 0): amp / math.sqrt(math.prod(math.factorial(n) for n in occ))}
        for mode, n in zip(INPUT_MODES, occ):
            for _ in range(n):
                nxt: dict[tuple[int, ...], complex] = defaultdict(complex)
                for mono, coef in poly.items():
                    for target, t in BEAMSPLITTER[mode].items():
                        k = list(mono)
                        k[index[target]] += 1
                        nxt[tuple(k)] += coef * t
                poly = nxt
        for mono, coef in poly.items():
            out[mono] += coef * math.sqrt(math.prod(math.factorial(n) for n in mono))
    return FockSuperposition(OUTPUT_MODES, out)


def single_photon(spatial: Spatial, psi: PolarizationState) -> FockSuperposition:
    j = psi.lab_vector()
    offset = 0 if spatial is Spatial.A else 2
    terms = {}
    for p in range(2):
        occ = [0, 0, 0, 0]
        occ[offset + p] = 1
        terms[tuple(occ)] = j[p]
    return FockSuperposition(INPUT_MODES, terms)


def two_photon_input(psi_a: PolarizationState, psi_b: PolarizationState) -> FockSuperposition:
    """One photon in ``a`` with polarization ``psi_a`` and one in ``b`` with ``psi_b``."""
    ja, jb = psi_a.lab_vector(), psi_b.lab_vector()
    terms = {}
    for p in range(2):
        for q in range(2):
            occ = [0, 0, 0, 0]
            occ[p] += 1
            occ[2 + q] += 1
            terms[tuple(occ)] = ja[p] * jb[q]
    return FockSuperposition(INPUT_MODES, terms)


def hom_coincidence_probability(psi_a: PolarizationState, psi_b: PolarizationState) -> float:
    """Probability that ``c`` and ``d`` each receive at least one photon (ideal detectors)."""
    out = beamsplitter_transform(two_photon_input(psi_a, psi_b))
    return sum(p for (nc, nd), p in out.spatial_counts().items() if nc >= 1 and nd >= 1)


@dataclass(frozen=True)
class DetectorParams:
    """Switch transmission, detector efficiencies and per-gate dark-click probability."""

    eta_os: float = 1.0
    eta1: float = 1.0
    eta2: float = 1.0
    dark_prob: float = 0.0

    def __post_init__(self):
        for name in ("eta_os", "eta1", "eta2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if not 0.0 <= self.dark_prob < 1.0:
            raise ValueError(f"dark_prob must lie in [0, 1), got {self.dark_prob!r}")

    @property
    def transmission(self) -> tuple[float, float]:
        """End-to-end detection probability of one photon routed to detector 1 / detector 2."""
        return self.eta_os * self.eta1, self.eta_os * self.eta2


def click_outcome_probabilities(state: FockSuperposition, det: DetectorParams) -> np.ndarray:
    """Joint click probabilities ``[none, only D1, only D2, both]`` for an output state.

    D1 watches mode ``c`` and D2 mode ``d``.  Photons are lost independently
    (uniform loss commutes with the beamsplitter, so it is applied after it);
    a dark click is OR-ed with the photon clicks.
    """
    if state.modes != OUTPUT_MODES:
        raise ValueError("expected a state on output modes c/d")
    t1, t2 = det.transmission
    keep = 1.0 - det.dark_prob
    probs = np.zeros(4)
    for (nc, nd), w in state.spatial_counts().items():
        p1 = 1.0 - keep * (1.0 - t1) ** nc
        p2 = 1.0 - keep * (1.0 - t2) ** nd
        probs += w * np.array([(1 - p1) * (1 - p2), p1 * (1 - p2), (1 - p1) * p2, p1 * p2])
    return probs


def pair_outcome_probabilities(psi_a: PolarizationState, psi_b: PolarizationState, det: DetectorParams) -> np.ndarray:
    return click_outcome_probabilities(beamsplitter_transform(two_photon_input(psi_a, psi_b)), det)


def coincidence_with_losses(
    psi_a: PolarizationState,
    psi_b: PolarizationState,
    det: DetectorParams,
    p_differ: float,
) -> float:
    """Coincidence probability per pair when the photons differ with probability ``p_differ``.

    Otherwise the two photons are identical.  Without dark counts this is
    ``p_differ * eta_os^2 * eta1 * eta2 * hom_coincidence_probability(psi_a, psi_b)``.
    """
    if not 0.0 <= p_differ <= 1.0:
        raise ValueError(f"p_differ must lie in [0, 1], got {p_differ!r}")
    differ = pair_outcome_probabilities(psi_a, psi_b, det)[3]
    same = pair_outcome_probabilities(psi_a, psi_a, det)[3]
    return p_differ * differ + (1.0 - p_differ) * same


@dataclass(frozen=True)
class FockCounts:
    n_pairs: int
    coincidences: int
    singles: tuple[int, int]

    @property
    def rate(self) -> float:
        return self.coincidences / self.n_pairs if self.n_pairs else 0.0


def simulate_fock_experiment(
    channel: ChannelModel,
    n_pairs: int,
    det: DetectorParams,
    rng: RandomStreams | int,
    psi_in: PolarizationState | None = None,
    threads: int = 1,
) -> FockCounts:
    """Monte Carlo of the switch/delay/beamsplitter apparatus with single-photon pulses.

    Each trial draws the channel realization for the two photons, then one
    joint click outcome from the exact engine's probabilities.
    """
    if n_pairs < 0:
        raise ValueError("n_pairs must be non-negative")
    psi_in = psi_in or PolarizationState.balanced()
    realizations = pair_realizations(channel, psi_in)
    weights = np.array([r.weight for r in realizations])
    table = np.array([pair_outcome_probabilities(r.psi_a, r.psi_b, det) for r in realizations])
    cdf_real = np.cumsum(weights)[:-1]
    cdf_out = np.cumsum(table, axis=1)[:, :3]

    def work(gen: np.random.Generator, size: int) -> np.ndarray:
        u = gen.random((size, 2))
        idx = np.searchsorted(cdf_real, u[:, 0], side="right")
        outcome = (u[:, 1:2] >= cdf_out[idx]).sum(axis=1)
        return np.bincount(outcome, minlength=4)

    totals = np.zeros(4, dtype=np.int64)
    for counts in run_sharded(work, n_pairs, as_streams(rng), threads):
        totals += counts
    return FockCounts(
        n_pairs=n_pairs,
        coincidences=int(totals[3]),
        singles=(int(totals[1] + totals[3]), int(totals[2] + totals[3])),
    )
