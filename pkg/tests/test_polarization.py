"""Test cases for Jones calculus on one and two photons."""

import math

import numpy as np
import pytest

from soi_entangle.core import InvalidInputError
from soi_entangle.polarization import (
    JonesVector,
    PolUnitary,
    TwoPhotonState,
    analyzer_joint_probs,
    apply_both,
    apply_single,
    basis_state,
    bell_phi_minus,
    bell_phi_plus,
    coincidence_prob,
    compose,
    fidelity,
    hwp,
    identity,
    linear_projector,
    marginal_pass_prob,
    product_state,
    qwp,
    retarder,
    rotation,
)

TOL = 1e-12


def random_state(rng: np.random.Generator) -> TwoPhotonState:
    amps = rng.normal(size=4) + 1j * rng.normal(size=4)
    return TwoPhotonState(amps).normalized()


class TestWaveplates:
    """Waveplate constructors and their conventions."""

    def test_hwp_examples(self) -> None:
        """Test half-wave plate matrices at known angles."""
        test_cases = [
            (0.0, np.array([[1, 0], [0, -1]])),
            (math.pi / 4, np.array([[0, 1], [1, 0]])),
        ]
        for theta, expected in test_cases:
            assert np.allclose(hwp(theta).m, expected, atol=TOL), f"Failed for {theta}"

        j = hwp(math.pi / 8).apply(JonesVector(1.0, 0.0))
        r = 1 / math.sqrt(2)
        assert abs(j.h - r) < TOL and abs(j.v - r) < TOL

    def test_qwp_anchor_and_square(self) -> None:
        """Test the quarter-wave plate at zero and its square."""
        assert np.allclose(qwp(0.0).m, np.diag([1, 1j]), atol=TOL)
        assert np.allclose((qwp(0.0) @ qwp(0.0)).m, hwp(0.0).m, atol=TOL)

    def test_qwp_makes_circular_light(self) -> None:
        """Test that a quarter-wave plate at 45 degrees makes circular light."""
        # independent reference: fast axis at 45 degrees
        c = 0.5
        reference = np.array([[c + 0.5j, c - 0.5j], [c - 0.5j, c + 0.5j]])
        assert np.allclose(qwp(math.pi / 4).m, reference, atol=TOL)

        j = qwp(math.pi / 4).apply(JonesVector(1.0, 0.0))
        assert abs(abs(j.h) ** 2 - 0.5) < TOL
        assert abs(abs(j.v) ** 2 - 0.5) < TOL

    def test_constructors_are_unitary(self) -> None:
        """Test that every constructor returns a unitary."""
        for theta in np.linspace(-math.pi, math.pi, 73):
            for u in (hwp(theta), qwp(theta), rotation(theta), retarder(theta)):
                assert u.is_unitary(), f"Not unitary at {theta}"

    def test_qwp_twice_is_hwp_up_to_phase(self) -> None:
        """Test that two quarter-wave plates act as a half-wave plate."""
        rng = np.random.default_rng(7)
        for theta in np.linspace(0, math.pi, 37):
            s = random_state(rng)
            twice = apply_single(qwp(theta) @ qwp(theta), 1, s)
            half = apply_single(hwp(theta), 1, s)
            assert abs(fidelity(twice, half) - 1) < TOL, f"Failed for {theta}"

    def test_compose_order(self) -> None:
        """Test the order of matrix composition."""
        a, b = hwp(0.3), qwp(1.1)
        j = JonesVector(0.6, 0.8j)
        direct = a.apply(b.apply(j))
        composed = compose(a, b).apply(j)
        assert abs(direct.h - composed.h) < TOL
        assert abs(direct.v - composed.v) < TOL

    def test_non_finite_angle_rejected(self) -> None:
        """Test that non-finite angles are rejected."""
        with pytest.raises(InvalidInputError):
            hwp(math.nan)
        with pytest.raises(InvalidInputError):
            linear_projector(math.inf)

    def test_non_finite_amplitudes_rejected(self) -> None:
        """Test that non-finite amplitudes are rejected."""
        with pytest.raises(InvalidInputError):
            PolUnitary(np.array([[1, 0], [0, math.nan]]))


class TestProjectors:
    def test_linear_projector(self) -> None:
        """Test linear polarizer projectors."""
        r = 1 / math.sqrt(2)
        test_cases = [
            (0.0, (1.0, 0.0)),
            (math.pi / 2, (0.0, 1.0)),
            (math.pi / 4, (r, r)),
        ]
        for theta, (h, v) in test_cases:
            j = linear_projector(theta)
            assert abs(j.h - h) < TOL and abs(j.v - v) < TOL, f"Failed for {theta}"


class TestTwoPhotonStates:
    """Single- and two-sided actions on pair states."""

    def setup_method(self) -> None:
        self.rng = np.random.default_rng(2024)
        self.phi_plus = bell_phi_plus()

    def test_bell_state(self) -> None:
        """Test the phi plus amplitudes."""
        r = 1 / math.sqrt(2)
        assert np.allclose(self.phi_plus.amps, [r, 0, 0, r], atol=TOL)
        assert abs(self.phi_plus.norm2() - 1) < TOL

    def test_apply_single_examples(self) -> None:
        """Test a unitary applied to one photon."""
        hh = basis_state("HH")
        test_cases = [
            (identity(), 1, hh, hh),
            (hwp(math.pi / 4), 1, hh, basis_state("VH")),
            (
                hwp(math.pi / 8),
                2,
                hh,
                TwoPhotonState(np.array([1, 1, 0, 0]) / math.sqrt(2)),
            ),
        ]
        for u, which, s, expected in test_cases:
            result = apply_single(u, which, s)
            assert abs(fidelity(result, expected) - 1) < TOL

    def test_apply_single_bad_index(self) -> None:
        """Test that photon indices other than 1 and 2 are rejected."""
        for which in (0, 3, -1):
            with pytest.raises(InvalidInputError):
                apply_single(identity(), which, self.phi_plus)

    def test_apply_then_adjoint_restores(self) -> None:
        """Test that the adjoint undoes a unitary."""
        for _ in range(50):
            s = random_state(self.rng)
            u = compose(hwp(self.rng.uniform(0, 3)), qwp(self.rng.uniform(0, 3)))
            for which in (1, 2):
                back = apply_single(u.adjoint(), which, apply_single(u, which, s))
                assert np.allclose(back.amps, s.amps, atol=TOL)

    def test_norm_preserved(self) -> None:
        """Test that unitaries preserve the state norm."""
        for _ in range(100):
            s = random_state(self.rng)
            u1 = hwp(self.rng.uniform(-3, 3)) @ qwp(self.rng.uniform(-3, 3))
            u2 = retarder(self.rng.uniform(-3, 3)) @ rotation(self.rng.uniform(-3, 3))
            assert abs(apply_both(u1, u2, s).norm2() - 1) < TOL

    def test_apply_both_examples(self) -> None:
        """Test unitaries applied to both photons."""
        s = random_state(self.rng)
        assert np.allclose(apply_both(identity(), identity(), s).amps, s.amps, atol=TOL)

        swapped = apply_both(hwp(math.pi / 4), hwp(math.pi / 4), basis_state("HV"))
        assert abs(fidelity(swapped, basis_state("VH")) - 1) < TOL

        u1, u2 = hwp(0.4), qwp(0.9)
        both = apply_both(u1, u2, s)
        sequential = apply_single(u1, 1, apply_single(u2, 2, s))
        assert np.allclose(both.amps, sequential.amps, atol=TOL)

    def test_bilateral_hwp_invariance(self) -> None:
        """Test phi plus under equal half-wave plates on both photons."""
        result = apply_both(hwp(math.radians(22.5)), hwp(math.radians(22.5)), self.phi_plus)
        assert abs(fidelity(result, self.phi_plus) - 1) < TOL

        # brute-force Kronecker product as an independent check
        h = hwp(math.pi / 8).m
        brute = np.kron(h, h) @ self.phi_plus.amps
        assert abs(abs(np.vdot(brute, self.phi_plus.amps)) ** 2 - 1) < TOL

    def test_bilateral_rotation_invariance(self) -> None:
        """Test phi plus under equal rotations on both photons."""
        for phi in np.linspace(-math.pi, math.pi, 91):
            rotated = apply_both(rotation(phi), rotation(phi), self.phi_plus)
            assert abs(fidelity(rotated, self.phi_plus) - 1) < TOL, f"rotation {phi}"
            flipped = apply_both(hwp(phi), hwp(phi), self.phi_plus)
            assert abs(fidelity(flipped, self.phi_plus) - 1) < TOL, f"hwp {phi}"


class TestCoincidenceLaw:
    def setup_method(self) -> None:
        self.phi_plus = bell_phi_plus()

    def test_examples(self) -> None:
        """Test coincidence probabilities at known analyzer angles."""
        test_cases = [
            (0.0, math.pi / 2, 0.0),
            (0.0, 0.0, 0.5),
            (math.pi / 8, 3 * math.pi / 8, 0.25),
        ]
        for t1, t2, expected in test_cases:
            got = coincidence_prob(self.phi_plus, t1, t2)
            assert abs(got - expected) < TOL, f"Failed for ({t1}, {t2})"

    def test_cos_squared_on_degree_grid(self) -> None:
        """Test the cos-squared law on a grid of angles."""
        grid = np.radians(np.arange(0, 360))
        worst = 0.0
        for t1 in grid[::5]:
            for t2 in grid:
                expected = 0.5 * math.cos(t1 - t2) ** 2
                worst = max(worst, abs(coincidence_prob(self.phi_plus, t1, t2) - expected))
        assert worst < TOL

    def test_phi_minus(self) -> None:
        """Test the coincidence law of phi minus."""
        s = bell_phi_minus()
        assert coincidence_prob(s, 0.0, math.pi / 2) < TOL
        assert coincidence_prob(s, math.pi / 4, math.pi / 4) < TOL

    def test_marginals_of_bell_state_are_half(self) -> None:
        """Test that each photon of phi plus passes half the time."""
        for theta in np.linspace(0, math.pi, 19):
            for which in (1, 2):
                assert abs(marginal_pass_prob(self.phi_plus, which, theta) - 0.5) < TOL

    def test_joint_probs_sum_to_one(self) -> None:
        """Test that joint outcome probabilities sum to one."""
        rng = np.random.default_rng(3)
        for _ in range(50):
            s = random_state(rng)
            t1, t2 = rng.uniform(0, math.pi, size=2)
            probs = analyzer_joint_probs(s, t1, t2)
            assert all(p >= 0 for p in probs)
            assert abs(sum(probs) - 1) < 1e-12

    def test_product_state_factorizes(self) -> None:
        """Test that product states give factorized probabilities."""
        j1 = linear_projector(0.3)
        j2 = linear_projector(1.2)
        s = product_state(j1, j2)
        for t1, t2 in [(0.0, 0.0), (0.3, 1.2), (1.0, 2.0)]:
            expected = marginal_pass_prob(s, 1, t1) * marginal_pass_prob(s, 2, t2)
            assert abs(coincidence_prob(s, t1, t2) - expected) < TOL
