"""Bench orchestration: turns an experiment plan into counting runs and metrics."""

from __future__ import annotations

import logging
import math
from typing import Any

from .config import ExperimentPlan
from .core import CountRecord, ExperimentKind, InvalidPlanError, PlanKind, SweepVariable
from .detection import (
    AnalyzerSetting,
    ClickProbabilities,
    click_probabilities,
    degenerate_rates,
    run_gates,
    signal_idler_rates,
)
from .metrics import (
    STREAM_IDS,
    FringeDataset,
    FringeFit,
    InequalityResult,
    SweepPoint,
    car_power_sweep,
    measure_inequality,
    visibility_fit,
    zou_mandel_lhs,
)
from .polarization import TwoPhotonState
from .sagnac import effective_analyzers, output_state, pump_split
from .source import (
    check_energy_conservation,
    detuning_nm,
    launched_power,
    mean_noise,
    mean_pairs,
    pump_photons_per_pulse,
)
from .utils import normalize_degrees

logger = logging.getLogger(__name__)


class Bench:
    """Simulated optical bench configured by one plan."""

    def __init__(
        self,
        plan: ExperimentPlan,
        workers: int = 1,
        classical_surrogate: bool = False,
    ):
        self.plan = plan
        self.workers = workers
        self.classical_surrogate = classical_surrogate
        self.loop = plan.loop_config()

    @property
    def degenerate(self) -> bool:
        """Whether the plan pumps with two wavelengths."""
        return self.plan.channels.kind is PlanKind.DEGENERATE

    def state(self) -> TwoPhotonState:
        """Pair state delivered to the analyzers."""
        return output_state(self.loop)

    def pump_powers(self, power_uw: float | None = None) -> tuple[float, float | None]:
        """First and second pump power at ``power_uw`` (the plan power by default).

        A degenerate plan keeps the ratio of its two pump powers; otherwise the
        second power is None.
        """
        pump = self.plan.pump
        power = pump.avg_power_uw if power_uw is None else power_uw
        if not self.degenerate:
            return power, None
        return power, power * pump.second_pump_power_uw / pump.avg_power_uw

    def mu(self, power_uw: float | None = None) -> float:
        """Mean pairs per pulse at ``power_uw`` (the plan power by default)."""
        power, second = self.pump_powers(power_uw)
        return mean_pairs(self.plan.source, self.plan.channels, power, second)

    def noise(self, power_uw: float | None = None) -> float:
        """Noise photons per pulse per channel, from every pump in the plan."""
        power, second = self.pump_powers(power_uw)
        return mean_noise(self.plan.source, power, self.plan.channels, second)

    def analyzers(self, theta1: float | None = None, theta2: float | None = None) -> AnalyzerSetting:
        """Analyzer setting, with loop compensation, at the given or nominal angles."""
        nominal = self.plan.analyzers
        return effective_analyzers(
            self.loop,
            nominal.theta1 if theta1 is None else theta1,
            nominal.theta2 if theta2 is None else theta2,
        )

    def run_point(
        self,
        kind: ExperimentKind | None = None,
        *,
        theta1: float | None = None,
        theta2: float | None = None,
        power_uw: float | None = None,
        key: tuple[int, ...] = (),
    ) -> CountRecord:
        """One counting run; the stream is ``(*key, id of kind)`` of the plan seed."""
        kind = kind or self.plan.kind
        return run_gates(
            self.plan.gates,
            self.state(),
            self.mu(power_uw),
            self.noise(power_uw),
            self.analyzers(theta1, theta2),
            self.plan.detectors,
            kind,
            self.plan.seed,
            key=(*key, STREAM_IDS[kind]),
            workers=self.workers,
            noise=self.plan.noise_polarization(),
            classical_surrogate=self.classical_surrogate,
        )

    def fringe_angles(self) -> list[float]:
        """Signal analyzer angles of the theta2 sweep, in degrees."""
        sweep = self.plan.sweep
        if sweep is None or sweep.variable is not SweepVariable.THETA2:
            raise InvalidPlanError("a fringe needs a [sweep] over theta2")
        return [normalize_degrees(v)[0] for v in sweep.values()]

    def fringe(self) -> tuple[FringeDataset, FringeFit]:
        """Run every fringe angle and fit the visibility."""
        if self.plan.kind not in (ExperimentKind.SIGNAL_IDLER, ExperimentKind.DEGENERATE):
            raise InvalidPlanError(f"no analyzers in a {self.plan.kind.value} run")
        pairs = []
        for i, degrees in enumerate(self.fringe_angles()):
            theta2 = math.radians(degrees)
            pairs.append((theta2, self.run_point(theta2=theta2, key=(i,))))
        dataset = FringeDataset.from_pairs(self.plan.analyzers.theta1, pairs)
        fit = visibility_fit(dataset)
        logger.info("fringe visibility %.4f +/- %.4f", fit.visibility, fit.visibility_error)
        return dataset, fit

    def _require_nondegenerate(self, what: str) -> None:
        if self.degenerate:
            raise InvalidPlanError(f"{what} needs a nondegenerate source")

    def car_sweep(self) -> list[SweepPoint]:
        """Run CAR and the inequality at every power of the sweep."""
        self._require_nondegenerate("a CAR sweep")
        sweep = self.plan.sweep
        if sweep is None or sweep.variable is not SweepVariable.POWER:
            raise InvalidPlanError("a CAR sweep needs a [sweep] over power")
        return car_power_sweep(
            sweep.values(),
            self.plan.source,
            self.plan.channels,
            self.plan.detectors,
            self.plan.gates,
            self.plan.seed,
            state=self.state(),
            analyzers=self.analyzers(),
            classical_surrogate=self.classical_surrogate,
            workers=self.workers,
        )

    def inequality(self) -> tuple[InequalityResult, tuple[CountRecord, CountRecord, CountRecord]]:
        """Signal-idler and both self-split runs at the plan operating point."""
        self._require_nondegenerate("the inequality test")
        records = measure_inequality(
            self.plan.gates,
            self.state(),
            self.mu(),
            self.noise(),
            self.analyzers(),
            self.plan.detectors,
            self.plan.seed,
            workers=self.workers,
            noise=self.plan.noise_polarization(),
            classical_surrogate=self.classical_surrogate,
        )
        result = zou_mandel_lhs(*records)
        logger.info("inequality lhs %.3g, %.1f sigma", result.lhs, result.n_sigma_violation)
        return result, records

    def expected_clicks(self) -> ClickProbabilities:
        """Closed-form per-gate probabilities at the plan operating point."""
        args = (self.state(), self.mu(), self.noise(), self.analyzers(), self.plan.detectors)
        noise = self.plan.noise_polarization()
        if self.plan.kind is ExperimentKind.DEGENERATE:
            return click_probabilities(degenerate_rates(*args, noise=noise))
        return click_probabilities(
            signal_idler_rates(*args, noise=noise, classical_surrogate=self.classical_surrogate)
        )

    def diagnostics(self) -> dict[str, Any]:
        """Derived quantities reported by ``validate``."""
        p_h, p_v = pump_split(self.loop.hwp1_angle, self.loop.qwp1_angle)
        energy = check_energy_conservation(self.plan.channels)
        clicks = self.expected_clicks()
        return {
            "mu": self.mu(),
            "noise_mu": self.noise(),
            "pump_photons_per_pulse": pump_photons_per_pulse(self.plan.pump),
            "launched_power_uw": launched_power(self.plan.pump.avg_power_uw),
            "detuning_nm": detuning_nm(self.plan.channels),
            "energy_detuning": energy.detuning,
            "energy_tolerance": energy.tolerance,
            "pump_split_h": p_h,
            "pump_split_v": p_v,
            "click_1": clicks.click_1,
            "click_2": clicks.click_2,
            "coincidence": clicks.coincidence,
            "expected_car": clicks.coincidence / clicks.accidental
            if clicks.accidental > 0
            else None,
        }


def simulate_fringe(plan: ExperimentPlan, workers: int = 1) -> FringeFit:
    """Convenience function returning just the fringe fit of a plan."""
    return Bench(plan, workers).fringe()[1]


def simulate_inequality(plan: ExperimentPlan, workers: int = 1) -> InequalityResult:
    """Inequality result of ``plan``."""
    return Bench(plan, workers).inequality()[0]
