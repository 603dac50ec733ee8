"""Counter-propagating Sagnac loop that turns two pumping directions into |HH> + |VV>.

HWP1 and QWP1 set the pump polarization at PBS1. The horizontal component
travels clockwise and scatters |H_i H_s> pairs, the vertical component travels
counter-clockwise and scatters |V_i V_s> pairs; both return through PBS1 and
pass HWP1 a second time on the way out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError
from .detection import AnalyzerSetting
from .polarization import (
    JonesVector,
    PolUnitary,
    TwoPhotonState,
    apply_both,
    compose,
    hwp,
    identity,
    qwp,
    retarder,
    rotation,
)
from .utils import require_finite


@dataclass(frozen=True)
class LoopConfig:
    """Waveplate settings and alignment residuals of the loop, in radians."""

    hwp1_angle: float = math.pi / 8
    qwp1_angle: float = 0.0
    loop_phase: float = 0.0
    residual_idler: PolUnitary = field(default_factory=identity)
    residual_signal: PolUnitary = field(default_factory=identity)
    compensation: bool = False

    def __post_init__(self) -> None:
        require_finite(self.hwp1_angle, self.qwp1_angle, self.loop_phase)
        for residual in (self.residual_idler, self.residual_signal):
            if not residual.is_unitary():
                raise InvalidInputError("residual compensation error must be unitary")


def residual_unitary(rotation_angle: float, retardance: float) -> PolUnitary:
    """Fiber-controller misalignment R(phi) diag(1, e^{i delta}); identity at zero."""
    return rotation(rotation_angle) @ retarder(retardance)


def pump_field(hwp1_angle: float, qwp1_angle: float = 0.0) -> JonesVector:
    """Pump polarization at PBS1.

    The input is the field that the alignment step leaves vertical at PBS1
    with both plates at zero.
    """
    aligned_input = qwp(0.0).adjoint().apply(JonesVector(0.0, 1.0))
    return compose(hwp(hwp1_angle), qwp(qwp1_angle)).apply(aligned_input)


def pump_split(hwp1_angle: float, qwp1_angle: float = 0.0) -> tuple[float, float]:
    """Power fractions (p_h, p_v) sent clockwise and counter-clockwise."""
    e = pump_field(hwp1_angle, qwp1_angle)
    return abs(e.h) ** 2, abs(e.v) ** 2


def generated_state(cfg: LoopConfig) -> TwoPhotonState:
    """Pair state recombined at PBS1, before the backward pass through HWP1.

    Each direction annihilates two pump photons, so its pair amplitude goes
    as the square of the pump field component, i.e. with pump power.
    """
    e = pump_field(cfg.hwp1_angle, cfg.qwp1_angle)
    phase = complex(math.cos(cfg.loop_phase), math.sin(cfg.loop_phase))
    amps = np.array([e.h**2, 0.0, 0.0, phase * e.v**2], dtype=np.complex128)
    state = TwoPhotonState(amps).normalized()
    return apply_both(cfg.residual_idler, cfg.residual_signal, state)


def backward_hwp1(s: TwoPhotonState, hwp1_angle: float) -> TwoPhotonState:
    """Bilateral action of HWP1 on the pair leaving the loop."""
    plate = hwp(hwp1_angle)
    return apply_both(plate, plate, s)


def output_state(cfg: LoopConfig) -> TwoPhotonState:
    """Pair state leaving the loop after the backward pass through HWP1."""
    return backward_hwp1(generated_state(cfg), cfg.hwp1_angle)


def compensation_offsets(hwp1_angle: float) -> float:
    """Offset added to the analyzer half-wave plates HWP2 and HWP3."""
    return hwp1_angle


def effective_analyzers(cfg: LoopConfig, theta1: float, theta2: float) -> AnalyzerSetting:
    """Analyzer setting for the loop, compensated when the loop asks for it."""
    offset = compensation_offsets(cfg.hwp1_angle) if cfg.compensation else 0.0
    return AnalyzerSetting(theta1=theta1, theta2=theta2, compensation_offset=offset)


def split_visibility(p_h: float, p_v: float) -> float:
    """Fringe visibility of the pure state p_h|HH> + p_v|VV>."""
    denominator = p_h**2 + p_v**2
    if denominator == 0.0:
        return 0.0
    return 2.0 * p_h * p_v / denominator
