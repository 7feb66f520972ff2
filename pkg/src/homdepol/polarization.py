"""Polarization states, density matrices and the three channel models.

All matrices live in the channel eigenbasis ``{|theta,phi>, |theta,phi>_perp}``.
The lab H/V frame is reached through :func:`eigenbasis_unitary`.

The coherence time ``tau_c`` is the standard deviation of the Gaussian
temporal *amplitude* wavepacket, not its FWHM.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

TOL = 1e-12


def eigenbasis_unitary(theta: float, phi: float) -> np.ndarray:
    """Columns are ``|theta,phi>`` and its orthogonal partner in H/V coordinates."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -cmath.exp(-1j * phi) * s], [cmath.exp(1j * phi) * s, c]],
        dtype=complex,
    )


@dataclass(frozen=True, eq=False)
class PolarizationState:
    """Pure polarization state expressed in the eigenbasis of axis (theta, phi).

    Equality ignores global phase and the choice of basis: two states are equal
    when their lab-frame fidelity is 1 within ``TOL``.
    """

    amp_par: complex
    amp_perp: complex
    basis_theta: float = 0.0
    basis_phi: float = 0.0

    def __post_init__(self):
        norm = abs(self.amp_par) ** 2 + abs(self.amp_perp) ** 2
        if abs(norm - 1.0) > TOL:
            raise ValueError(f"polarization state is not normalized (|psi|^2 = {norm!r})")

    @classmethod
    def balanced(cls, delta: float = 0.0, theta: float = 0.0, phi: float = 0.0) -> "PolarizationState":
        """Equal superposition ``(|theta,phi> + e^{i delta}|theta,phi>_perp)/sqrt(2)``."""
        r = 1 / math.sqrt(2)
        return cls(complex(r), r * cmath.exp(1j * delta), theta, phi)

    @classmethod
    def from_vector(cls, vec, theta: float = 0.0, phi: float = 0.0, normalize: bool = False) -> "PolarizationState":
        v = np.asarray(vec, dtype=complex)
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(complex(v[0]), complex(v[1]), theta, phi)

    @property
    def delta(self) -> float:
        """Relative phase ``arg(amp_perp) - arg(amp_par)``."""
        return cmath.phase(self.amp_perp) - cmath.phase(self.amp_par)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp_par, self.amp_perp], dtype=complex)

    def lab_vector(self) -> np.ndarray:
        """Jones vector in the H/V frame."""
        return eigenbasis_unitary(self.basis_theta, self.basis_phi) @ self.vector

    def in_basis(self, theta: float, phi: float) -> "PolarizationState":
        """Same physical state re-expressed in the eigenbasis of (theta, phi)."""
        vec = eigenbasis_unitary(theta, phi).conj().T @ self.lab_vector()
        vec = vec / np.linalg.norm(vec)
        return PolarizationState(complex(vec[0]), complex(vec[1]), theta, phi)

    def orthogonal(self) -> "PolarizationState":
        return PolarizationState(-self.amp_perp.conjugate(), self.amp_par.conjugate(), self.basis_theta, self.basis_phi)

    def overlap(self, other: "PolarizationState") -> complex:
        """Inner product ``<self|other>`` evaluated in the lab frame."""
        return complex(np.vdot(self.lab_vector(), other.lab_vector()))

    def fidelity(self, other: "PolarizationState") -> float:
        return abs(self.overlap(other)) ** 2

    def projector(self) -> "DensityMatrix":
        v = self.vector
        return DensityMatrix(np.outer(v, v.conj()))

    def __eq__(self, other):
        if not isinstance(other, PolarizationState):
            return NotImplemented
        return abs(self.fidelity(other) - 1.0) <= TOL

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """2x2 Hermitian, unit-trace, positive semidefinite operator."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"density matrix must be 2x2, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > TOL:
            raise ValueError(f"density matrix trace is {np.trace(m).real!r}, expected 1")
        if np.linalg.eigvalsh(m).min() < -TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def conjugate_by(self, u: np.ndarray) -> "DensityMatrix":
        return DensityMatrix(u @ self.m @ u.conj().T)

    def allclose(self, other: "DensityMatrix", atol: float = TOL) -> bool:
        return bool(np.max(np.abs(self.m - other.m)) <= atol)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.m).real)

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.m).min())


MIXED = DensityMatrix(np.eye(2) / 2)


@dataclass(frozen=True)
class TemporalProfile:
    """Gaussian wavepacket with coherence time ``tau_c``, DGD ``tau`` and optical frequency ``omega``."""

    tau_c: float
    tau: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if not self.tau_c > 0:
            raise ValueError(f"tau_c must be positive, got {self.tau_c!r}")
        if self.tau < 0:
            raise ValueError(f"tau must be non-negative, got {self.tau!r}")

    @property
    def overlap(self) -> float:
        return gaussian_overlap(self.tau, self.tau_c)


class Pairing(enum.Enum):
    """How the rotation signs of two consecutive photons are drawn.

    ``ALTERNATING``: the sign flips every pulse, so interfering pairs always differ.
    ``INDEPENDENT_FAIR``: each photon draws its sign independently, so pairs differ half the time.
    """

    ALTERNATING = "alternating"
    INDEPENDENT_FAIR = "independent_fair"

    @property
    def p_differ(self) -> float:
        return 1.0 if self is Pairing.ALTERNATING else 0.5


@dataclass(frozen=True)
class IdealDepolarizing:
    p: float

    def __post_init__(self):
        _check_probability("p", self.p)


@dataclass(frozen=True)
class TimeEntanglement:
    profile: TemporalProfile
    axis: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class RandomRotation:
    alpha0: float
    axis: tuple[float, float] = (0.0, 0.0)
    pairing: Pairing = Pairing.ALTERNATING

    def __post_init__(self):
        if not 0.0 <= self.alpha0 <= math.pi:
            raise ValueError(f"alpha0 must lie in [0, pi], got {self.alpha0!r}")


ChannelModel = Union[IdealDepolarizing, TimeEntanglement, RandomRotation]


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def apply_ideal_depolarizing(rho: DensityMatrix, p: float) -> DensityMatrix:
    """Replace ``rho`` by the fully mixed state with probability ``p``."""
    _check_probability("p", p)
    return DensityMatrix((1 - p) * rho.m + p * np.eye(2) / 2)


def gaussian_overlap(tau: float, tau_c: float) -> float:
    """Overlap of two Gaussian wavepackets of std ``tau_c`` displaced by ``tau``: ``exp(-(tau/tau_c)^2/4)``."""
    if not tau_c > 0:
        raise ValueError(f"tau_c must be positive, got {tau_c!r}")
    return math.exp(-0.25 * (tau / tau_c) ** 2)


def apply_time_entanglement_channel(psi_in: PolarizationState, profile: TemporalProfile) -> DensityMatrix:
    """Delay the ``|theta,phi>`` component by the DGD and trace out the arrival time.

    ``psi_in`` must already be expressed in the channel eigenbasis.
    """
    a, b = psi_in.amp_par, psi_in.amp_perp
    off = a * b.conjugate() * profile.overlap * cmath.exp(1j * profile.omega * profile.tau)
    return DensityMatrix(np.array([[abs(a) ** 2, off], [off.conjugate(), abs(b) ** 2]]))


def rotation_unitary(alpha: float) -> np.ndarray:
    return np.diag([1.0, cmath.exp(1j * alpha)])


def apply_random_rotation_mixture(psi_in: PolarizationState, alpha0: float) -> DensityMatrix:
    """Equal mixture of the input rotated by ``+alpha0`` and ``-alpha0`` about the channel axis."""
    rho = psi_in.projector()
    plus = rotation_unitary(alpha0)
    minus = rotation_unitary(-alpha0)
    return DensityMatrix(0.5 * rho.conjugate_by(plus).m + 0.5 * rho.conjugate_by(minus).m)


def sample_rotation(alpha0: float, rng: np.random.Generator) -> np.ndarray:
    """Draw ``U(+alpha0)`` or ``U(-alpha0)`` with probability 1/2 each."""
    sign = 1.0 if rng.random() < 0.5 else -1.0
    return rotation_unitary(sign * alpha0)


def dop(rho: DensityMatrix) -> float:
    """Degree of polarization ``sqrt(1 - 4 det rho)``.

    Evaluated as ``(rho00 - rho11)^2 + 4|rho01|^2``, equal to ``1 - 4 det`` at unit
    trace but free of cancellation when the state is nearly mixed.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    m = rho.m
    x = float((m[0, 0].real - m[1, 1].real) ** 2 + 4.0 * abs(m[0, 1]) ** 2)
    if x < 0.0:
        if x < -TOL:
            raise ValueError(f"1 - 4 det(rho) = {x!r} is negative beyond round-off")
        x = 0.0
    elif x > 1.0:
        if x > 1.0 + TOL:
            raise ValueError(f"1 - 4 det(rho) = {x!r} exceeds 1 beyond round-off")
        x = 1.0
    return math.sqrt(x)


def apply_channel(channel: ChannelModel, psi_in: PolarizationState) -> DensityMatrix:
    """Output density matrix of ``channel`` for a pure input, in the channel eigenbasis."""
    if isinstance(channel, IdealDepolarizing):
        return apply_ideal_depolarizing(psi_in.projector(), channel.p)
    psi = psi_in.in_basis(*channel.axis)
    if isinstance(channel, TimeEntanglement):
        return apply_time_entanglement_channel(psi, channel.profile)
    if isinstance(channel, RandomRotation):
        return apply_random_rotation_mixture(psi, channel.alpha0)
    raise TypeError(f"unknown channel model {channel!r}")


@dataclass(frozen=True)
class PairRealization:
    """One possible joint polarization of two consecutive photons, with its probability."""

    weight: float
    psi_a: PolarizationState
    psi_b: PolarizationState
    differ: bool = field(default=False)


def pair_realizations(channel: ChannelModel, psi_in: PolarizationState) -> list[PairRealization]:
    """Enumerate the polarization pairs that reach the beamsplitter together.

    Time-entangled photons all leave the channel in the same joint
    polarization-time mode, so each pair is a pair of identical states.
    Rotated photons carry their own sign; the pairing policy fixes how the two
    signs are correlated.
    """
    if isinstance(channel, IdealDepolarizing):
        raise ValueError(
            "the ideal depolarizing map does not specify a physical mechanism; "
            "use TimeEntanglement or RandomRotation for interference experiments"
        )
    psi = psi_in.in_basis(*channel.axis)
    if isinstance(channel, TimeEntanglement):
        return [PairRealization(1.0, psi, psi)]
    if isinstance(channel, RandomRotation):
        rotated = {}
        for sign in (1, -1):
            v = rotation_unitary(sign * channel.alpha0) @ psi.vector
            rotated[sign] = PolarizationState(complex(v[0]), complex(v[1]), *channel.axis)
        if channel.pairing is Pairing.ALTERNATING:
            combos = [(1, -1), (-1, 1)]
        else:
            combos = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        w = 1.0 / len(combos)
        return [PairRealization(w, rotated[sa], rotated[sb], sa != sb) for sa, sb in combos]
    raise TypeError(f"unknown channel model {channel!r}")
