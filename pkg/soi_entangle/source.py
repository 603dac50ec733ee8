"""Pump, pair-generation and noise-photon statistics of the waveguide source."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .core import InvalidInputError, InvalidPlanError, PlanKind
from .utils import require_finite

logger = logging.getLogger(__name__)

TELECOM_BAND_NM = (1500.0, 1620.0)
REFERENCE_TEMPERATURE_K = 300.0


@dataclass(frozen=True)
class PumpConfig:
    """Pulsed pump as measured inside the waveguide."""

    avg_power_uw: float
    center_wavelength_nm: float = 1555.9
    pulse_duration_ps: float = 5.0
    rep_rate_mhz: float = 50.3
    # second pump of the degenerate scheme; None means equal to avg_power_uw
    pump2_power_uw: float | None = None

    def __post_init__(self) -> None:
        fields = (self.avg_power_uw, self.pulse_duration_ps, self.rep_rate_mhz)
        if any(not math.isfinite(x) or x <= 0 for x in fields):
            raise InvalidInputError("pump power, pulse duration and rate must be > 0")
        low, high = TELECOM_BAND_NM
        if not low <= self.center_wavelength_nm <= high:
            raise InvalidInputError(
                f"pump wavelength {self.center_wavelength_nm} nm outside [{low}, {high}]"
            )
        if self.pump2_power_uw is not None and not self.pump2_power_uw > 0:
            raise InvalidInputError("second pump power must be > 0")

    @property
    def second_pump_power_uw(self) -> float:
        """Power of the second pump, defaulting to the first."""
        if self.pump2_power_uw is None:
            return self.avg_power_uw
        return self.pump2_power_uw


@dataclass(frozen=True)
class ChannelPlan:
    """Pump, signal and idler wavelengths with the channel filter widths."""

    kind: PlanKind = PlanKind.NONDEGENERATE
    pump_wavelengths: tuple[float, ...] = (1555.9,)
    signal_wavelength: float = 1550.95
    idler_wavelength: float = 1561.0
    signal_fwhm: float = 1.0
    idler_fwhm: float = 1.0

    def __post_init__(self) -> None:
        values = (
            *self.pump_wavelengths,
            self.signal_wavelength,
            self.idler_wavelength,
            self.signal_fwhm,
            self.idler_fwhm,
        )
        if any(not math.isfinite(x) or x <= 0 for x in values):
            raise InvalidInputError("wavelengths and filter widths must be positive")

    def validate(self) -> None:
        """Raise InvalidPlanError unless the pump count matches the kind."""
        match self.kind:
            case PlanKind.NONDEGENERATE:
                if len(self.pump_wavelengths) != 1:
                    raise InvalidPlanError("a nondegenerate plan takes exactly 1 pump")
            case PlanKind.DEGENERATE:
                if len(self.pump_wavelengths) != 2:
                    raise InvalidPlanError("a degenerate plan takes exactly 2 pumps")
                if self.signal_wavelength != self.idler_wavelength:
                    raise InvalidPlanError("degenerate output needs signal = idler")


@dataclass(frozen=True)
class SourceParams:
    """Pair-rate and noise coefficients, all per pump pulse."""

    kappa: float = 8.68e-6  # pairs / (pulse uW^2)
    raman_coeff: float = 1e-5  # photons / (pulse uW) per channel
    ase_floor: float = 0.0  # photons / pulse per channel
    noise_polarized_fraction: float = 0.0
    noise_polarization: float = 0.0  # radians
    raman_temperature_k: float = REFERENCE_TEMPERATURE_K

    def __post_init__(self) -> None:
        require_finite(self.kappa, self.raman_coeff, self.ase_floor)
        if min(self.kappa, self.raman_coeff, self.ase_floor) < 0:
            raise InvalidInputError("source coefficients must be >= 0")
        if not 0.0 <= self.noise_polarized_fraction <= 1.0:
            raise InvalidInputError("noise_polarized_fraction must lie in [0, 1]")
        if not self.raman_temperature_k > 0:
            raise InvalidInputError("raman temperature must be > 0 K")


@dataclass(frozen=True)
class CouplingBudget:
    """Losses between the launch fiber and the waveguide."""

    fiber_port: float = 0.8
    polarization_controller: float = 0.8
    taper: float = 0.1

    @property
    def transmission(self) -> float:
        """Fraction of launched pump power reaching the waveguide."""
        return self.fiber_port * self.polarization_controller * self.taper


@dataclass(frozen=True)
class EnergyCheck:
    detuning: float
    tolerance: float
    passed: bool


def check_energy_conservation(plan: ChannelPlan) -> EnergyCheck:
    """Relative mismatch between pump and generated photon frequencies.

    Frequencies are vacuum-wavelength reciprocals; a nondegenerate plan counts
    its single pump twice. The tolerance is the summed fractional half-width
    of the signal and idler filters.
    """
    plan.validate()
    pumps = [1.0 / w for w in plan.pump_wavelengths]
    if plan.kind is PlanKind.NONDEGENERATE:
        pumps = pumps * 2
    nu_s = 1.0 / plan.signal_wavelength
    nu_i = 1.0 / plan.idler_wavelength
    detuning = abs(math.fsum([*pumps, -nu_s, -nu_i])) / (nu_s + nu_i)
    tolerance = (
        0.5 * plan.signal_fwhm / plan.signal_wavelength
        + 0.5 * plan.idler_fwhm / plan.idler_wavelength
    )
    logger.debug("energy mismatch %.3e, tolerance %.3e", detuning, tolerance)
    return EnergyCheck(detuning, tolerance, detuning <= tolerance)


def detuning_nm(plan: ChannelPlan) -> float:
    """Half the signal-idler separation, the offset of each from the pump."""
    return abs(plan.idler_wavelength - plan.signal_wavelength) / 2.0


def mean_pairs(
    params: SourceParams,
    plan: ChannelPlan,
    power_per_pump: float,
    power_pump2: float | None = None,
) -> float:
    """Mean pairs per pulse; quadratic in pump power for either scheme."""
    plan.validate()
    if power_per_pump < 0 or (power_pump2 is not None and power_pump2 < 0):
        raise InvalidInputError("pump power must be >= 0")
    match plan.kind:
        case PlanKind.NONDEGENERATE:
            return params.kappa * power_per_pump**2
        case PlanKind.DEGENERATE:
            second = power_per_pump if power_pump2 is None else power_pump2
            return params.kappa * power_per_pump * second


def raman_thermal_factor(
    detuning_thz: float,
    temperature_k: float,
    reference_k: float = REFERENCE_TEMPERATURE_K,
) -> float:
    """Raman noise at ``temperature_k`` relative to ``reference_k``.

    Averages the Stokes (n + 1) and anti-Stokes (n) Bose-Einstein weights,
    one channel lying on each side of the pump.
    """
    if detuning_thz <= 0:
        return 1.0

    def occupancy(t: float) -> float:
        x = constants.h * detuning_thz * 1e12 / (constants.k * t)
        return 1.0 / math.expm1(x)

    n, n_ref = occupancy(temperature_k), occupancy(reference_k)
    return ((n + 1.0) / (n_ref + 1.0) + n / n_ref) / 2.0


def frequency_detuning_thz(plan: ChannelPlan) -> float:
    """Mean pump-to-channel frequency offset."""
    c = constants.c
    pump = np.mean([c / (w * 1e-9) for w in plan.pump_wavelengths])
    channels = (plan.signal_wavelength, plan.idler_wavelength)
    offsets = [abs(c / (w * 1e-9) - pump) for w in channels]
    return float(np.mean(offsets)) / 1e12


def mean_noise(
    params: SourceParams,
    power_per_pump: float,
    plan: ChannelPlan | None = None,
    power_pump2: float | None = None,
) -> float:
    """Noise photons per pulse per channel: linear Raman plus an ASE floor.

    A degenerate plan scatters Raman photons from both pumps; the second pump
    defaults to the first.
    """
    if power_per_pump < 0 or (power_pump2 is not None and power_pump2 < 0):
        raise InvalidInputError("pump power must be >= 0")
    total = power_per_pump
    if plan is not None and plan.kind is PlanKind.DEGENERATE:
        total += power_per_pump if power_pump2 is None else power_pump2
    raman = params.raman_coeff * total
    if plan is not None and params.raman_temperature_k != REFERENCE_TEMPERATURE_K:
        raman *= raman_thermal_factor(
            frequency_detuning_thz(plan), params.raman_temperature_k
        )
    return raman + params.ase_floor


def sample_pair_count(mu: float, rng: np.random.Generator) -> int:
    """Poisson-distributed pair number with mean mu."""
    if mu < 0 or not math.isfinite(mu):
        raise InvalidInputError(f"mean must be finite and >= 0, got {mu!r}")
    if mu == 0:
        return 0
    return int(rng.poisson(mu))


def waveguide_power(launched_uw: float, coupling: CouplingBudget | None = None) -> float:
    """In-waveguide average power for a given fiber-launched power."""
    return launched_uw * (coupling or CouplingBudget()).transmission


def launched_power(waveguide_uw: float, coupling: CouplingBudget | None = None) -> float:
    """Power to launch into the fibre for ``waveguide_uw`` in the waveguide."""
    return waveguide_uw / (coupling or CouplingBudget()).transmission


def pump_photons_per_pulse(pump: PumpConfig) -> float:
    """Mean pump photon number per pulse inside the waveguide."""
    pulse_energy = pump.avg_power_uw * 1e-6 / (pump.rep_rate_mhz * 1e6)
    photon_energy = constants.h * constants.c / (pump.center_wavelength_nm * 1e-9)
    return pulse_energy / photon_energy
