"""Figures of merit computed from count records.

Rates are per-gate probabilities throughout. Count uncertainties are Poisson,
sqrt(N) per count, with all terms treated as independent.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import curve_fit

from .core import (
    CountRecord,
    EmptyRunError,
    ExperimentKind,
    IllPosedFitError,
    InvalidInputError,
    NormalizationError,
)
from .detection import (
    AnalyzerSetting,
    DetectorConfig,
    NoisePolarization,
    Seed,
    run_gates,
)
from .polarization import TwoPhotonState, bell_phi_plus
from .source import ChannelPlan, SourceParams, mean_noise, mean_pairs

logger = logging.getLogger(__name__)

MIN_FRINGE_ANGLES = 6
ANGLE_RESOLUTION = 1e-9
MAX_FRINGE_GAP = math.pi / (MIN_FRINGE_ANGLES - 1)
STREAM_IDS = {kind: i for i, kind in enumerate(ExperimentKind)}


@dataclass(frozen=True)
class CarResult:
    """Coincidence-to-accidental ratio; ``defined`` is False at zero accidentals."""

    ratio: float
    error: float
    defined: bool = True


@dataclass(frozen=True)
class InequalityResult:
    lhs: float
    sigma: float
    n_sigma_violation: float

    @property
    def violated(self) -> bool:
        return self.lhs > 0


@dataclass(frozen=True)
class FringePoint:
    theta2: float
    record: CountRecord


@dataclass(frozen=True)
class FringeDataset:
    """Coincidence counts against the signal analyzer angle at fixed theta1."""

    theta1: float
    points: tuple[FringePoint, ...]

    @classmethod
    def from_pairs(
        cls, theta1: float, pairs: Sequence[tuple[float, CountRecord]]
    ) -> FringeDataset:
        return cls(theta1, tuple(FringePoint(t, r) for t, r in pairs))

    def angles(self) -> NDArray[np.float64]:
        return np.array([p.theta2 for p in self.points], dtype=np.float64)

    def coincidences(self) -> NDArray[np.float64]:
        return np.array([p.record.coincidences for p in self.points], dtype=np.float64)


@dataclass(frozen=True)
class FringeFit:
    """Fit of C(theta2) = A cos^2(theta1 - theta2 - phase) + B."""

    amplitude: float
    offset: float
    phase: float
    visibility: float
    chi2_per_dof: float
    amplitude_error: float = 0.0
    offset_error: float = 0.0
    phase_error: float = 0.0
    visibility_error: float = 0.0


@dataclass(frozen=True)
class SweepPoint:
    power_uw: float
    mu: float
    car: CarResult
    inequality: InequalityResult
    signal_idler: CountRecord
    signal_split: CountRecord
    idler_split: CountRecord


def car(rec: CountRecord) -> CarResult:
    """Coincidence-to-accidental ratio with its Poisson error."""
    c, a = rec.coincidences, rec.accidentals_estimate
    if a == 0:
        return CarResult(math.nan, math.nan, defined=False)
    ratio = c / a
    error = math.hypot(
        rec.poisson_error("coincidences") / a,
        c * rec.poisson_error("accidentals_estimate") / a**2,
    )
    return CarResult(ratio, error)


def visibility_from_car(ratio: float) -> float:
    """Visibility of a fringe sitting on a flat accidental floor."""
    return (ratio - 1.0) / (ratio + 1.0)


def count_rates_hz(rec: CountRecord, gate_rate_khz: float) -> dict[str, float]:
    """Singles and coincidence rates at the detector gate rate."""
    if rec.gates == 0:
        raise EmptyRunError("rates of an empty record are undefined")
    scale = gate_rate_khz * 1e3 / rec.gates
    return {
        "singles_1_hz": rec.singles_1 * scale,
        "singles_2_hz": rec.singles_2 * scale,
        "coincidences_hz": rec.coincidences * scale,
        "accidentals_hz": rec.accidentals_estimate * scale,
    }


def zou_mandel_lhs(
    si: CountRecord, s_split: CountRecord, i_split: CountRecord
) -> InequalityResult:
    """Left side of the classical two-source coincidence inequality.

    (R_c^si - R_ac^si) - 2 (R_c^s/2 - R_ac^s/2 + R_c^i/2 - R_ac^i/2) <= 0 for
    classical light; a positive value certifies nonclassical correlation.
    """
    gates = {si.gates, s_split.gates, i_split.gates}
    if len(gates) != 1:
        raise NormalizationError(
            f"records cover different gate counts: {sorted(gates)}"
        )
    n = gates.pop()
    if n == 0:
        raise EmptyRunError("records hold no gates")
    pair = si.coincidences - si.accidentals_estimate
    splits = (
        s_split.coincidences
        - s_split.accidentals_estimate
        + i_split.coincidences
        - i_split.accidentals_estimate
    )
    lhs = (pair - 2 * splits) / n
    variance = si.coincidences + si.accidentals_estimate + 4 * (
        s_split.coincidences
        + s_split.accidentals_estimate
        + i_split.coincidences
        + i_split.accidentals_estimate
    )
    sigma = math.sqrt(variance) / n
    n_sigma = lhs / sigma if sigma > 0 else 0.0
    return InequalityResult(lhs, sigma, n_sigma)


def fringe_model(
    delta: NDArray[np.float64], amplitude: float, offset: float, phase: float
) -> NDArray[np.float64]:
    """A cos^2(delta - phase) + B with delta = theta1 - theta2."""
    return amplitude * np.cos(delta - phase) ** 2 + offset


def check_coverage(angles: NDArray[np.float64]) -> None:
    """Require enough distinct angles spread over the pi-periodic fringe.

    Angles are folded modulo pi; no gap between neighbours, the wrap-around
    gap included, may exceed pi / (MIN_FRINGE_ANGLES - 1). Twelve 15-degree
    steps pass, as do six 30-degree steps; a cluster plus one outlier fails.
    """
    folded = np.mod(np.asarray(angles, dtype=np.float64), math.pi)
    distinct = np.unique(np.round(folded / ANGLE_RESOLUTION) * ANGLE_RESOLUTION)
    if distinct.size and distinct[-1] >= math.pi - ANGLE_RESOLUTION:
        distinct = np.unique(np.append(distinct[:-1], 0.0))
    n = distinct.size
    if n < MIN_FRINGE_ANGLES:
        raise IllPosedFitError(f"fringe needs >= {MIN_FRINGE_ANGLES} distinct angles, got {n}")
    gaps = np.diff(np.append(distinct, distinct[0] + math.pi))
    widest = float(gaps.max())
    if widest > MAX_FRINGE_GAP + 1e-9:
        raise IllPosedFitError(
            f"fringe leaves a {math.degrees(widest):.1f} deg gap, "
            f"at most {math.degrees(MAX_FRINGE_GAP):.1f} allowed"
        )


def _linear_seed(
    delta: NDArray[np.float64], counts: NDArray[np.float64], sigma: NDArray[np.float64]
) -> tuple[float, float, float]:
    """Exact weighted solution on the basis {1, cos 2 delta, sin 2 delta}."""
    basis = np.column_stack([np.ones_like(delta), np.cos(2 * delta), np.sin(2 * delta)])
    coef, *_ = np.linalg.lstsq(basis / sigma[:, None], counts / sigma, rcond=None)
    c0, a, b = (float(x) for x in coef)
    amplitude = 2.0 * math.hypot(a, b)
    phase = 0.5 * math.atan2(b, a)
    return amplitude, c0 - amplitude / 2.0, phase


def _chi2(
    params: Sequence[float],
    delta: NDArray[np.float64],
    counts: NDArray[np.float64],
    sigma: NDArray[np.float64],
) -> float:
    """Weighted sum of squared fringe residuals."""
    residual = (counts - fringe_model(delta, *params)) / sigma
    return float(np.sum(residual**2))


def _covariance(
    params: Sequence[float], delta: NDArray[np.float64], sigma: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Parameter covariance from the Jacobian of the fringe model."""
    amplitude, _, phase = params
    jac = np.column_stack(
        [
            np.cos(delta - phase) ** 2,
            np.ones_like(delta),
            amplitude * np.sin(2 * (delta - phase)),
        ]
    ) / sigma[:, None]
    cov: NDArray[np.float64] = np.linalg.pinv(jac.T @ jac)
    return cov


def visibility_fit(fringe: FringeDataset) -> FringeFit:
    """Poisson-weighted fit of raw coincidences, accidentals not subtracted."""
    theta2 = fringe.angles()
    check_coverage(theta2)
    counts = fringe.coincidences()
    if not np.any(counts > 0):
        raise IllPosedFitError("fringe holds no coincidences")
    delta = fringe.theta1 - theta2
    sigma = np.sqrt(np.maximum(counts, 1.0))

    amplitude, offset, phase = _linear_seed(delta, counts, sigma)
    seed = (amplitude, max(offset, 0.0), phase)
    try:
        popt, _ = curve_fit(
            fringe_model,
            delta,
            counts,
            p0=seed,
            sigma=sigma,
            absolute_sigma=True,
            bounds=([0.0, 0.0, -math.pi], [np.inf, np.inf, math.pi]),
        )
        best = tuple(float(x) for x in popt)
    except RuntimeError as exc:
        logger.debug("bounded fit did not converge (%s); keeping linear seed", exc)
        best = seed
    if _chi2(seed, delta, counts, sigma) <= _chi2(best, delta, counts, sigma):
        best = seed

    amplitude, offset, phase = best
    # fold the phase into (-pi/2, pi/2]; the model has period pi
    phase = phase - math.pi * math.floor(phase / math.pi + 0.5)
    if phase <= -math.pi / 2:
        phase += math.pi
    params = (amplitude, offset, phase)
    cov = _covariance(params, delta, sigma)
    dof = max(delta.size - 3, 1)
    chi2_per_dof = _chi2(params, delta, counts, sigma) / dof

    total = amplitude + 2.0 * offset
    if total <= 0:
        raise IllPosedFitError("fitted fringe has zero height")
    visibility = amplitude / total
    grad = np.array([2.0 * offset, -2.0 * amplitude]) / total**2
    visibility_var = float(grad @ cov[:2, :2] @ grad)
    errors = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    logger.debug(
        "fringe fit A=%.4g B=%.4g phase=%.4g V=%.4f chi2/dof=%.3f",
        amplitude,
        offset,
        phase,
        visibility,
        chi2_per_dof,
    )
    return FringeFit(
        amplitude=amplitude,
        offset=offset,
        phase=phase,
        visibility=visibility,
        chi2_per_dof=chi2_per_dof,
        amplitude_error=float(errors[0]),
        offset_error=float(errors[1]),
        phase_error=float(errors[2]),
        visibility_error=math.sqrt(max(visibility_var, 0.0)),
    )


def measure_inequality(
    n_gates: int,
    state: TwoPhotonState,
    mu: float,
    noise_mu: float,
    analyzers: AnalyzerSetting,
    det: DetectorConfig,
    seed: Seed,
    *,
    key: tuple[int, ...] = (),
    workers: int = 1,
    noise: NoisePolarization | None = None,
    classical_surrogate: bool = False,
) -> tuple[CountRecord, CountRecord, CountRecord]:
    """Signal-idler, signal self-split and idler self-split runs of one point."""
    records = []
    for kind in (
        ExperimentKind.SIGNAL_IDLER,
        ExperimentKind.SIGNAL_SPLIT,
        ExperimentKind.IDLER_SPLIT,
    ):
        records.append(
            run_gates(
                n_gates,
                state,
                mu,
                noise_mu,
                analyzers,
                det,
                kind,
                seed,
                key=(*key, STREAM_IDS[kind]),
                workers=workers,
                noise=noise,
                classical_surrogate=classical_surrogate,
            )
        )
    si, s_split, i_split = records
    return si, s_split, i_split


def car_power_sweep(
    powers: Sequence[float],
    params: SourceParams,
    plan: ChannelPlan,
    det: DetectorConfig,
    gates_per_point: int,
    seed: Seed,
    *,
    state: TwoPhotonState | None = None,
    analyzers: AnalyzerSetting | None = None,
    classical_surrogate: bool = False,
    workers: int = 1,
    key: tuple[int, ...] = (),
) -> list[SweepPoint]:
    """CAR and inequality at each pump power; point i uses substream (*key, i)."""
    if not powers or any(p <= 0 for p in powers):
        raise InvalidInputError("sweep powers must be positive")
    if any(b <= a for a, b in zip(powers, powers[1:])):
        raise InvalidInputError("sweep powers must be strictly ascending")
    state = state or bell_phi_plus()
    analyzers = analyzers or AnalyzerSetting()
    noise = NoisePolarization(params.noise_polarized_fraction, params.noise_polarization)

    points = []
    for i, power in enumerate(powers):
        mu = mean_pairs(params, plan, power)
        noise_mu = mean_noise(params, power, plan)
        si, s_split, i_split = measure_inequality(
            gates_per_point,
            state,
            mu,
            noise_mu,
            analyzers,
            det,
            seed,
            key=(*key, i),
            workers=workers,
            noise=noise,
            classical_surrogate=classical_surrogate,
        )
        point = SweepPoint(
            power_uw=power,
            mu=mu,
            car=car(si),
            inequality=zou_mandel_lhs(si, s_split, i_split),
            signal_idler=si,
            signal_split=s_split,
            idler_split=i_split,
        )
        logger.info(
            "%.1f uW: mu=%.4g CAR=%.2f lhs=%.3g (%.1f sigma)",
            power,
            mu,
            point.car.ratio,
            point.inequality.lhs,
            point.inequality.n_sigma_violation,
        )
        points.append(point)
    return points
