"""Test cases for CAR, the classical inequality and visibility fits."""

import math

import numpy as np
import pytest

from soi_entangle.core import (
    CountRecord,
    EmptyRunError,
    ExperimentKind,
    IllPosedFitError,
    InvalidInputError,
    NormalizationError,
)
from soi_entangle.detection import AnalyzerSetting, DetectorConfig, run_gates
from soi_entangle.metrics import (
    FringeDataset,
    car,
    car_power_sweep,
    check_coverage,
    count_rates_hz,
    fringe_model,
    measure_inequality,
    visibility_fit,
    visibility_from_car,
    zou_mandel_lhs,
)
from soi_entangle.polarization import bell_phi_plus
from soi_entangle.source import ChannelPlan, SourceParams

GATES = 10_000_000


def scaled(rec: CountRecord, k: int) -> CountRecord:
    return CountRecord(*(k * v for v in rec.as_dict().values()))


def record(coincidences: int, accidentals: int = 0, gates: int = GATES) -> CountRecord:
    singles = max(coincidences, accidentals, 1)
    return CountRecord(gates, singles, singles, coincidences, accidentals)


def synthetic_fringe(
    amplitude: float, offset: float, phase: float = 0.0, steps: int = 12, stop: float = 165.0
) -> FringeDataset:
    theta2 = np.radians(np.linspace(0.0, stop, steps))
    counts = fringe_model(0.0 - theta2, amplitude, offset, phase)
    return FringeDataset.from_pairs(
        0.0, [(float(t), record(int(round(c)))) for t, c in zip(theta2, counts)]
    )


class TestCar:
    def test_examples(self) -> None:
        """Test CAR and its error on known counts."""
        result = car(record(300, 10))
        assert result.defined
        assert result.ratio == pytest.approx(30.0)
        assert result.error == pytest.approx(9.6, abs=0.05)

        assert car(record(10, 10)).ratio == pytest.approx(1.0)

    def test_zero_accidentals_undefined(self) -> None:
        """Test that CAR is undefined without accidentals."""
        result = car(record(50, 0))
        assert not result.defined
        assert math.isnan(result.ratio)

    def test_visibility_from_car(self) -> None:
        """Test visibility implied by a CAR value."""
        test_cases = [(1.0, 0.0), (3.0, 0.5), (19.0, 0.9)]
        for ratio, expected in test_cases:
            assert abs(visibility_from_car(ratio) - expected) < 1e-12, f"Failed for {ratio}"

    def test_count_rates(self) -> None:
        """Test conversion of counts to rates."""
        rates = count_rates_hz(CountRecord(780_000, 780, 390, 39, 1), 780.0)
        assert rates["singles_1_hz"] == pytest.approx(780.0)
        assert rates["singles_2_hz"] == pytest.approx(390.0)
        assert rates["coincidences_hz"] == pytest.approx(39.0)

        with pytest.raises(EmptyRunError):
            count_rates_hz(CountRecord(), 780.0)

    def test_ratio_is_scale_free(self) -> None:
        """Test that CAR ignores a common scale of counts and gates."""
        rec = CountRecord(1_000_000, 4000, 3500, 310, 12)
        for k in (2, 7, 1000):
            big = car(scaled(rec, k))
            assert big.ratio == pytest.approx(car(rec).ratio, rel=1e-12), f"Failed for {k}"
            assert big.error == pytest.approx(car(rec).error / math.sqrt(k), rel=1e-12)


class TestInequality:
    """Left side of the classical two-source inequality."""

    def test_example(self) -> None:
        """Test the inequality left side on known counts."""
        n = 1_000_000
        si = CountRecord(n, 1000, 1000, 100, 10)
        s_split = CountRecord(n, 500, 500, 5, 5)
        i_split = CountRecord(n, 500, 500, 3, 3)
        result = zou_mandel_lhs(si, s_split, i_split)
        assert result.lhs == pytest.approx(90 / n)
        assert result.sigma == pytest.approx(math.sqrt(110 + 4 * 16) / n)
        assert result.violated
        assert result.n_sigma_violation == pytest.approx(90 / math.sqrt(174))

    def test_classical_excess_is_negative(self) -> None:
        """Test a negative left side for split excess."""
        n = 1_000_000
        si = CountRecord(n, 1000, 1000, 10, 10)
        split = CountRecord(n, 1000, 1000, 30, 10)
        result = zou_mandel_lhs(si, split, split)
        assert result.lhs < 0
        assert not result.violated

    def test_mismatched_gates(self) -> None:
        """Test that records with different gate counts are rejected."""
        with pytest.raises(NormalizationError):
            zou_mandel_lhs(CountRecord(10), CountRecord(10), CountRecord(11))

    def test_empty_records(self) -> None:
        """Test that records with no gates are rejected."""
        with pytest.raises(EmptyRunError):
            zou_mandel_lhs(CountRecord(), CountRecord(), CountRecord())

    def test_lhs_is_scale_free(self) -> None:
        """Test that the normalized left side ignores a common scale."""
        n = 1_000_000
        records = (
            CountRecord(n, 1000, 1000, 100, 10),
            CountRecord(n, 500, 500, 5, 5),
            CountRecord(n, 500, 500, 3, 3),
        )
        base = zou_mandel_lhs(*records)
        for k in (3, 7, 500):
            result = zou_mandel_lhs(*(scaled(r, k) for r in records))
            assert result.lhs == pytest.approx(base.lhs, rel=1e-12), f"Failed for {k}"
            assert result.sigma == pytest.approx(base.sigma / math.sqrt(k), rel=1e-12)
            assert result.violated == base.violated

    def test_simulated_pairs_violate(self) -> None:
        """Test that simulated pairs violate the inequality."""
        det = DetectorConfig(eta_signal=0.5, eta_idler=0.5, dark_prob=0.0)
        records = measure_inequality(
            200_000, bell_phi_plus(), 0.05, 0.0, AnalyzerSetting(), det, 17
        )
        result = zou_mandel_lhs(*records)
        assert result.violated
        assert result.n_sigma_violation > 5

    def test_classical_surrogate_does_not_violate(self) -> None:
        """Test that independent streams do not violate the inequality."""
        det = DetectorConfig(eta_signal=0.5, eta_idler=0.5, dark_prob=0.0)
        records = measure_inequality(
            200_000,
            bell_phi_plus(),
            0.05,
            0.0,
            AnalyzerSetting(),
            det,
            17,
            classical_surrogate=True,
        )
        assert zou_mandel_lhs(*records).n_sigma_violation < 5


class TestVisibilityFit:
    def test_noiseless_fringe(self) -> None:
        """Test fit parameters of an exact fringe."""
        fit = visibility_fit(synthetic_fringe(1000.0, 50.0))
        assert fit.amplitude == pytest.approx(1000.0, abs=1.0)
        assert fit.offset == pytest.approx(50.0, abs=1.0)
        assert abs(fit.phase) < 1e-3
        assert fit.visibility == pytest.approx(1000.0 / 1100.0, abs=1e-3)
        assert fit.chi2_per_dof < 0.1

    def test_phase_recovered_and_folded(self) -> None:
        """Test that the fitted phase is recovered and folded."""
        test_cases = [(0.3, 0.3), (-0.4, -0.4), (0.3 + math.pi, 0.3), (1.4, 1.4)]
        for phase, expected in test_cases:
            fit = visibility_fit(synthetic_fringe(2000.0, 100.0, phase))
            assert abs(fit.phase - expected) < 1e-3, f"Failed for {phase}"
            assert -math.pi / 2 < fit.phase <= math.pi / 2

    def test_flat_floor_has_zero_visibility(self) -> None:
        """Test zero visibility for a flat fringe."""
        fit = visibility_fit(synthetic_fringe(0.0, 400.0))
        assert fit.visibility == pytest.approx(0.0, abs=1e-6)
        assert fit.amplitude >= 0.0

    def test_errors_shrink_with_counts(self) -> None:
        """Test that fit errors shrink with more counts."""
        small = visibility_fit(synthetic_fringe(100.0, 10.0))
        large = visibility_fit(synthetic_fringe(10000.0, 1000.0))
        assert 0 < large.visibility_error < small.visibility_error

    def test_visibility_matches_car(self) -> None:
        """Test that a fringe on its accidental floor gives (CAR - 1) / (CAR + 1)."""
        rng = np.random.default_rng(21)
        floor = 20_000.0
        theta2 = np.radians(np.linspace(0.0, 165.0, 12))
        for ratio in (5.0, 10.0, 30.0, 100.0):
            amplitude = (ratio - 1.0) * floor
            counts = rng.poisson(fringe_model(0.0 - theta2, amplitude, floor, 0.0))
            fringe = FringeDataset.from_pairs(
                0.0,
                [(float(t), record(int(c), int(floor))) for t, c in zip(theta2, counts)],
            )
            fit = visibility_fit(fringe)
            peak = car(fringe.points[0].record)
            expected = visibility_from_car(peak.ratio)
            assert fit.visibility == pytest.approx(expected, rel=0.02), f"Failed for {ratio}"

    def test_simulated_fringe_fits_well(self) -> None:
        """Test the reduced chi-square of fits to simulated fringes."""
        det = DetectorConfig(eta_signal=0.5, eta_idler=0.5, dark_prob=1e-4)
        theta2 = np.radians(np.linspace(0.0, 165.0, 12))
        chi2 = []
        for seed in range(5):
            pairs = [
                (
                    float(t),
                    run_gates(
                        200_000,
                        bell_phi_plus(),
                        0.05,
                        0.001,
                        AnalyzerSetting(0.0, float(t)),
                        det,
                        ExperimentKind.SIGNAL_IDLER,
                        seed,
                        key=(i,),
                    ),
                )
                for i, t in enumerate(theta2)
            ]
            fit = visibility_fit(FringeDataset.from_pairs(0.0, pairs))
            chi2.append(fit.chi2_per_dof)
        assert float(np.mean(chi2)) < 2.0
        assert max(chi2) < 4.0

    def test_coverage(self) -> None:
        """Test angle sets that do and do not cover the fringe."""
        check_coverage(np.radians(np.linspace(0.0, 165.0, 12)))
        check_coverage(np.radians(np.linspace(0.0, 150.0, 6)))

        bad = [
            np.radians(np.linspace(0.0, 165.0, 5)),
            np.radians(np.linspace(0.0, 90.0, 12)),
            np.radians([0.0, 0.0, 0.0, 45.0, 90.0, 135.0, 135.0]),
        ]
        for angles in bad:
            with pytest.raises(IllPosedFitError):
                check_coverage(angles)

    def test_clustered_angles_rejected(self) -> None:
        """Test that a cluster plus one outlier does not cover the fringe."""
        test_cases = [
            [0.0, 1.0, 2.0, 3.0, 4.0, 150.0],
            [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0],
            [170.0, 175.0, 180.0, 185.0, 190.0, 90.0],
        ]
        for degrees in test_cases:
            with pytest.raises(IllPosedFitError, match="gap"):
                check_coverage(np.radians(degrees))

    def test_coverage_wraps_around_pi(self) -> None:
        """Test that angles are compared modulo half a turn."""
        check_coverage(np.radians(np.linspace(90.0, 255.0, 12)))
        check_coverage(np.radians([-60.0, -30.0, 0.0, 30.0, 60.0, 90.0]))

    def test_too_few_angles(self) -> None:
        """Test that a fit needs enough angles."""
        with pytest.raises(IllPosedFitError):
            visibility_fit(synthetic_fringe(1000.0, 50.0, steps=4, stop=135.0))

    def test_no_coincidences(self) -> None:
        """Test that a fit needs coincidences."""
        with pytest.raises(IllPosedFitError):
            visibility_fit(synthetic_fringe(0.0, 0.0))


class TestCarPowerSweep:
    """Sweep driver over pump power."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.params = SourceParams(kappa=1e-5, raman_coeff=1e-5)
        self.det = DetectorConfig(eta_signal=0.2, eta_idler=0.2, dark_prob=1e-4)

    def test_points_follow_powers(self) -> None:
        """Test one sweep point per pump power."""
        points = car_power_sweep([20.0, 40.0], self.params, ChannelPlan(), self.det, 20_000, 5)
        assert [p.power_uw for p in points] == [20.0, 40.0]
        assert points[1].mu == pytest.approx(4 * points[0].mu)
        for p in points:
            assert p.signal_idler.gates == p.signal_split.gates == p.idler_split.gates == 20_000

    def test_reproducible(self) -> None:
        """Test that a sweep is reproducible."""
        a = car_power_sweep([30.0], self.params, ChannelPlan(), self.det, 20_000, 9)
        b = car_power_sweep([30.0], self.params, ChannelPlan(), self.det, 20_000, 9)
        for x, y in zip(a, b):
            assert x.signal_idler == y.signal_idler
            assert x.signal_split == y.signal_split
            assert x.idler_split == y.idler_split

    def test_invalid_powers(self) -> None:
        """Test rejection of power lists that are not positive and strictly increasing."""
        for powers in ([], [0.0, 10.0], [20.0, 10.0], [10.0, 10.0]):
            with pytest.raises(InvalidInputError):
                car_power_sweep(powers, self.params, ChannelPlan(), self.det, 1_000, 0)
