"""Jones calculus for one- and two-photon polarization states.

Angles are in radians. The two-photon basis is ordered (HH, HV, VH, VV) with
photon 1 the idler and photon 2 the signal. Waveplate global phases follow a
fixed convention; compare states with :func:`fidelity`, never amplitude-wise.

Detection angles relate to physical analyzer half-wave-plate settings by
``theta = 2 * hwp_setting``. The API takes detection angles throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import InvalidInputError
from .utils import require_finite

UNITARY_TOL = 1e-12


def _frozen(values: ArrayLike, shape: tuple[int, ...]) -> NDArray[np.complex128]:
    array = np.array(values, dtype=np.complex128).reshape(shape)
    if not np.all(np.isfinite(array)):
        raise InvalidInputError("amplitudes must be finite")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class JonesVector:
    """Single-photon polarization amplitudes on |H>, |V>."""

    h: complex
    v: complex

    @property
    def array(self) -> NDArray[np.complex128]:
        return np.array([self.h, self.v], dtype=np.complex128)

    def norm2(self) -> float:
        return abs(self.h) ** 2 + abs(self.v) ** 2


@dataclass(frozen=True, eq=False)
class PolUnitary:
    """2x2 polarization operator acting on one photon."""

    m: NDArray[np.complex128]

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", _frozen(self.m, (2, 2)))

    def __matmul__(self, other: PolUnitary) -> PolUnitary:
        return PolUnitary(self.m @ other.m)

    def apply(self, j: JonesVector) -> JonesVector:
        """Apply this unitary to a single-photon Jones vector."""
        h, v = self.m @ j.array
        return JonesVector(complex(h), complex(v))

    def adjoint(self) -> PolUnitary:
        """Conjugate transpose."""
        return PolUnitary(self.m.conj().T)

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        return bool(np.allclose(self.m @ self.m.conj().T, np.eye(2), rtol=0, atol=tol))


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Pure two-photon polarization state, amplitudes ordered (HH, HV, VH, VV)."""

    amps: NDArray[np.complex128]

    def __post_init__(self) -> None:
        object.__setattr__(self, "amps", _frozen(self.amps, (4,)))

    @property
    def matrix(self) -> NDArray[np.complex128]:
        """Amplitudes as M[i1, i2] with i = 0 for H and 1 for V."""
        return self.amps.reshape(2, 2)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def normalized(self) -> TwoPhotonState:
        """Copy scaled to unit norm."""
        norm = math.sqrt(self.norm2())
        if norm == 0.0:
            raise InvalidInputError("cannot normalize the zero state")
        return TwoPhotonState(self.amps / norm)


def identity() -> PolUnitary:
    """Identity unitary."""
    return PolUnitary(np.eye(2))


def rotation(phi: float) -> PolUnitary:
    """Real rotation matrix R(phi)."""
    require_finite(phi)
    c, s = math.cos(phi), math.sin(phi)
    return PolUnitary(np.array([[c, -s], [s, c]]))


def retarder(delta: float) -> PolUnitary:
    """Phase retarder diag(1, e^{i delta}) with axes along H and V."""
    require_finite(delta)
    return PolUnitary(np.diag([1.0, complex(math.cos(delta), math.sin(delta))]))


def hwp(theta: float) -> PolUnitary:
    """Half-wave plate with fast axis at theta, in real reflection form."""
    require_finite(theta)
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return PolUnitary(np.array([[c, s], [s, -c]]))


def qwp(theta: float) -> PolUnitary:
    """Quarter-wave plate with fast axis at theta; qwp(0) = diag(1, i)."""
    require_finite(theta)
    return rotation(theta) @ PolUnitary(np.diag([1.0, 1j])) @ rotation(-theta)


def compose(*unitaries: PolUnitary) -> PolUnitary:
    """Product of unitaries; ``compose(a, b)`` applies b first, then a."""
    result = identity()
    for u in unitaries:
        result = result @ u
    return result


def linear_projector(theta: float) -> JonesVector:
    """Analyzer state transmitted at detection angle theta."""
    require_finite(theta)
    return JonesVector(math.cos(theta), math.sin(theta))


def product_state(j1: JonesVector, j2: JonesVector) -> TwoPhotonState:
    """Two-photon state of independent photons ``j1`` and ``j2``."""
    return TwoPhotonState(np.kron(j1.array, j2.array))


def basis_state(label: str) -> TwoPhotonState:
    """Basis ket such as ``"HV"`` (photon 1 first)."""
    order = ("HH", "HV", "VH", "VV")
    if label not in order:
        raise InvalidInputError(f"unknown basis label {label!r}")
    amps = np.zeros(4, dtype=np.complex128)
    amps[order.index(label)] = 1.0
    return TwoPhotonState(amps)


def bell_phi_plus() -> TwoPhotonState:
    """(|HH> + |VV>) / sqrt(2)."""
    r = 1 / math.sqrt(2)
    return TwoPhotonState(np.array([r, 0.0, 0.0, r]))


def bell_phi_minus() -> TwoPhotonState:
    """(|HH> - |VV>) / sqrt(2)."""
    r = 1 / math.sqrt(2)
    return TwoPhotonState(np.array([r, 0.0, 0.0, -r]))


def apply_single(u: PolUnitary, which: int, s: TwoPhotonState) -> TwoPhotonState:
    """Apply u to one photon: U (x) I for photon 1, I (x) U for photon 2."""
    match which:
        case 1:
            return TwoPhotonState((u.m @ s.matrix).reshape(4))
        case 2:
            return TwoPhotonState((s.matrix @ u.m.T).reshape(4))
        case _:
            raise InvalidInputError(f"photon index must be 1 or 2, got {which!r}")


def apply_both(u1: PolUnitary, u2: PolUnitary, s: TwoPhotonState) -> TwoPhotonState:
    """Apply ``u1`` to photon 1 and ``u2`` to photon 2."""
    return apply_single(u1, 1, apply_single(u2, 2, s))


def fidelity(a: TwoPhotonState, b: TwoPhotonState) -> float:
    """|<a|b>|^2, insensitive to global phase."""
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)


def coincidence_prob(s: TwoPhotonState, theta1: float, theta2: float) -> float:
    """Probability that both photons pass analyzers at theta1 and theta2."""
    a = linear_projector(theta1).array
    b = linear_projector(theta2).array
    amplitude = a.conj() @ s.matrix @ b.conj()
    return float(min(1.0, abs(amplitude) ** 2))


def marginal_pass_prob(s: TwoPhotonState, which: int, theta: float) -> float:
    """Probability that one photon passes its analyzer, the other unobserved."""
    a = linear_projector(theta).array.conj()
    match which:
        case 1:
            reduced = a @ s.matrix
        case 2:
            reduced = s.matrix @ a
        case _:
            raise InvalidInputError(f"photon index must be 1 or 2, got {which!r}")
    return float(min(1.0, np.sum(np.abs(reduced) ** 2)))


def analyzer_joint_probs(
    s: TwoPhotonState, theta1: float, theta2: float
) -> tuple[float, float, float, float]:
    """Joint analyzer outcomes (pass-pass, pass-fail, fail-pass, fail-fail)."""
    pp = coincidence_prob(s, theta1, theta2)
    m1 = marginal_pass_prob(s, 1, theta1)
    m2 = marginal_pass_prob(s, 2, theta2)
    pf = max(0.0, m1 - pp)
    fp = max(0.0, m2 - pp)
    ff = max(0.0, 1.0 - pp - pf - fp)
    return pp, pf, fp, ff
