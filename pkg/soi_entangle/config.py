"""Experiment plan files: strict parsing, default filling and canonical text.

A plan file is line oriented::

    [pump]
    avg_power_uw = 96      # comment

Sections and keys are case-sensitive and unknown ones are rejected. Units are
part of the key names. Angles are read in degrees, reduced to [0, 360) at six
decimals, and held in radians on the dataclasses.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TypeVar

from .core import (
    ConfigError,
    ExperimentKind,
    ParseWarning,
    PlanKind,
    SimulationError,
    SweepSpacing,
    SweepVariable,
)
from .detection import AnalyzerSetting, DetectorConfig, NoisePolarization
from .sagnac import LoopConfig, residual_unitary
from .source import (
    TELECOM_BAND_NM,
    ChannelPlan,
    PumpConfig,
    SourceParams,
    check_energy_conservation,
)
from .utils import ANGLE_DECIMALS, normalize_degrees, sweep_values

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
SEED_LIMIT = 2**64

SECTION_ORDER = ("pump", "channels", "source", "loop", "detectors", "experiment", "sweep")
SCHEMA: dict[str, frozenset[str]] = {
    "pump": frozenset(
        {"avg_power_uw", "pump2_power_uw", "center_nm", "pulse_ps", "rep_rate_mhz"}
    ),
    "channels": frozenset(
        {
            "kind",
            "pump1_nm",
            "pump2_nm",
            "signal_nm",
            "idler_nm",
            "signal_fwhm_nm",
            "idler_fwhm_nm",
        }
    ),
    "source": frozenset(
        {
            "kappa",
            "raman_coeff",
            "ase_floor",
            "noise_polarized_fraction",
            "noise_polarization_deg",
            "raman_temperature_k",
        }
    ),
    "loop": frozenset(
        {
            "hwp1_deg",
            "qwp1_deg",
            "loop_phase_deg",
            "compensation",
            "residual_idler_rotation_deg",
            "residual_idler_retardance_deg",
            "residual_signal_rotation_deg",
            "residual_signal_retardance_deg",
        }
    ),
    "detectors": frozenset({"eta_signal", "eta_idler", "dark_prob", "gate_rate_khz"}),
    "experiment": frozenset(
        {"format_version", "kind", "theta1_deg", "theta2_deg", "gates", "seed"}
    ),
    "sweep": frozenset({"variable", "start", "stop", "steps", "spacing"}),
}

DEGENERATE_PUMPS_NM = (1550.95, 1560.01)
DEGENERATE_OUTPUT_NM = 1555.9
DEGENERATE_FWHM_NM = 0.8

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_SWITCH = {"on": True, "off": False}

E = TypeVar("E", bound=Enum)


@dataclass(frozen=True)
class LoopSettings:
    """Loop waveplates and fiber-controller residuals, in radians."""

    hwp1_angle: float = math.radians(22.5)
    qwp1_angle: float = 0.0
    loop_phase: float = 0.0
    residual_idler_rotation: float = 0.0
    residual_idler_retardance: float = 0.0
    residual_signal_rotation: float = 0.0
    residual_signal_retardance: float = 0.0
    compensation: bool = False

    def config(self) -> LoopConfig:
        """Loop configuration with residual unitaries built from the stored angles."""
        return LoopConfig(
            hwp1_angle=self.hwp1_angle,
            qwp1_angle=self.qwp1_angle,
            loop_phase=self.loop_phase,
            residual_idler=residual_unitary(
                self.residual_idler_rotation, self.residual_idler_retardance
            ),
            residual_signal=residual_unitary(
                self.residual_signal_rotation, self.residual_signal_retardance
            ),
            compensation=self.compensation,
        )


@dataclass(frozen=True)
class SweepSpec:
    """Swept quantity; theta2 bounds are degrees, power bounds uW."""

    variable: SweepVariable
    start: float
    stop: float
    steps: int
    spacing: SweepSpacing = SweepSpacing.LINEAR

    def values(self) -> list[float]:
        """Swept values in plan units."""
        return sweep_values(self.start, self.stop, self.steps, self.spacing)


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to reproduce one simulated run."""

    pump: PumpConfig
    channels: ChannelPlan = field(default_factory=ChannelPlan)
    source: SourceParams = field(default_factory=SourceParams)
    loop: LoopSettings = field(default_factory=LoopSettings)
    detectors: DetectorConfig = field(default_factory=DetectorConfig)
    kind: ExperimentKind = ExperimentKind.SIGNAL_IDLER
    analyzers: AnalyzerSetting = field(default_factory=AnalyzerSetting)
    sweep: SweepSpec | None = None
    gates: int = 10_000_000
    seed: int = 0

    def loop_config(self) -> LoopConfig:
        """Loop configuration of this plan."""
        return self.loop.config()

    def noise_polarization(self) -> NoisePolarization:
        """Noise polarization declared in ``[source]``."""
        return NoisePolarization(
            self.source.noise_polarized_fraction, self.source.noise_polarization
        )


def with_overrides(
    plan: ExperimentPlan, *, gates: int | None = None, seed: int | None = None
) -> ExperimentPlan:
    """Copy of ``plan`` with command-line overrides applied."""
    changes: dict[str, int] = {}
    if gates is not None:
        changes["gates"] = gates
    if seed is not None:
        if not 0 <= seed < SEED_LIMIT:
            raise ConfigError("OUT_OF_RANGE", f"seed must lie in [0, 2^64), got {seed}")
        changes["seed"] = seed
    return dataclasses.replace(plan, **changes)


# -- reading ---------------------------------------------------------------


@dataclass(frozen=True)
class _Entry:
    value: str
    line: int
    column: int


@dataclass
class _Section:
    name: str
    line: int
    entries: dict[str, _Entry] = field(default_factory=dict)


def _read_sections(text: str) -> dict[str, _Section]:
    """Split plan text into sections of key/value entries with their positions."""
    sections: dict[str, _Section] = {}
    current: _Section | None = None
    for lineno, raw in enumerate(text.removeprefix("\ufeff").splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        stripped = body.lstrip()
        if not stripped:
            continue
        col = len(body) - len(stripped) + 1

        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("SYNTAX_ERROR", "unterminated section header", lineno, col)
            name = stripped[1:-1].strip()
            if not _IDENT.fullmatch(name):
                raise ConfigError("SYNTAX_ERROR", f"bad section name {name!r}", lineno, col)
            if name not in SCHEMA:
                raise ConfigError("UNKNOWN_SECTION", f"unknown section [{name}]", lineno, col + 1)
            if name in sections:
                raise ConfigError(
                    "DUPLICATE_SECTION",
                    f"[{name}] already defined on line {sections[name].line}",
                    lineno,
                    col,
                )
            current = sections[name] = _Section(name, lineno)
            continue

        key, sep, rest = stripped.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError("SYNTAX_ERROR", "expected 'key = value'", lineno, col)
        if not _IDENT.fullmatch(key):
            raise ConfigError("SYNTAX_ERROR", f"bad key {key!r}", lineno, col)
        if current is None:
            raise ConfigError("SYNTAX_ERROR", f"key {key!r} outside any section", lineno, col)
        if key not in SCHEMA[current.name]:
            raise ConfigError(
                "UNKNOWN_KEY", f"unknown key {key!r} in [{current.name}]", lineno, col
            )
        if key in current.entries:
            raise ConfigError(
                "DUPLICATE_KEY", f"{key!r} repeated in [{current.name}]", lineno, col
            )
        value = rest.strip()
        value_col = col + stripped.index("=") + 1 + len(rest) - len(rest.lstrip())
        if not value:
            raise ConfigError("INVALID_VALUE", f"{key!r} has no value", lineno, value_col)
        current.entries[key] = _Entry(value, lineno, value_col)
    return sections


class _Reader:
    """Typed, located access to the keys of one section."""

    def __init__(self, section: _Section | None, warnings: list[ParseWarning]):
        self.section = section
        self.warnings = warnings

    @property
    def line(self) -> int:
        """Line of the section header, or 0 when the section is absent."""
        return self.section.line if self.section else 0

    def has(self, key: str) -> bool:
        """Whether ``key`` is present in the section."""
        return self.section is not None and key in self.section.entries

    def entry(self, key: str) -> _Entry | None:
        """Raw entry for ``key``, if present."""
        if self.section is None:
            return None
        return self.section.entries.get(key)

    def require(self, key: str) -> _Entry:
        """Raw entry for ``key``; raises MISSING_KEY when absent."""
        entry = self.entry(key)
        if entry is None:
            name = self.section.name if self.section else "?"
            raise ConfigError("MISSING_KEY", f"[{name}] needs {key!r}", max(self.line, 1), 1)
        return entry

    def location(self, key: str) -> tuple[int, int]:
        """Line and column of ``key``, or of the section header when absent."""
        entry = self.entry(key)
        if entry is None:
            return max(self.line, 1), 1
        return entry.line, entry.column

    def _number(self, key: str, entry: _Entry) -> float:
        try:
            value = float(entry.value)
        except ValueError:
            raise ConfigError(
                "INVALID_VALUE", f"{key!r} expects a number, got {entry.value!r}",
                entry.line, entry.column,
            ) from None
        if not math.isfinite(value):
            raise ConfigError(
                "INVALID_VALUE", f"{key!r} must be finite", entry.line, entry.column
            )
        return value

    def real(
        self,
        key: str,
        default: float | None,
        *,
        low: float | None = None,
        high: float | None = None,
        positive: bool = False,
    ) -> float:
        """Finite float value of ``key``, checked against the given bounds."""
        entry = self.entry(key) if default is not None else self.require(key)
        if entry is None:
            assert default is not None
            return default
        value = self._number(key, entry)
        if positive and not value > 0:
            raise ConfigError(
                "OUT_OF_RANGE", f"{key!r} must be > 0, got {entry.value}",
                entry.line, entry.column,
            )
        if (low is not None and value < low) or (high is not None and value > high):
            raise ConfigError(
                "OUT_OF_RANGE",
                f"{key!r} must lie in [{low}, {high}], got {entry.value}",
                entry.line, entry.column,
            )
        return value

    def integer(
        self, key: str, default: int | None, *, low: int | None = None, high: int | None = None
    ) -> int:
        """Base-10 integer value of ``key``, checked against the given bounds."""
        entry = self.entry(key) if default is not None else self.require(key)
        if entry is None:
            assert default is not None
            return default
        try:
            value = int(entry.value, 10)
        except ValueError:
            raise ConfigError(
                "INVALID_VALUE", f"{key!r} expects an integer, got {entry.value!r}",
                entry.line, entry.column,
            ) from None
        if (low is not None and value < low) or (high is not None and value >= high):
            raise ConfigError(
                "OUT_OF_RANGE", f"{key!r} out of range: {entry.value}", entry.line, entry.column
            )
        return value

    def angle(self, key: str, default_deg: float = 0.0) -> float:
        """Angle of ``key`` in radians, folded into [0, 360) degrees with a warning."""
        entry = self.entry(key)
        if entry is None:
            return math.radians(default_deg)
        degrees, changed = normalize_degrees(self._number(key, entry))
        if changed:
            self.warnings.append(
                ParseWarning(
                    "ANGLE_NORMALIZED",
                    f"{key} = {entry.value} read as {degrees:.{ANGLE_DECIMALS}f}",
                    entry.line,
                    entry.column,
                )
            )
        return math.radians(degrees)

    def choice(self, key: str, enum: type[E], default: E | None) -> E:
        """Enum member named by ``key``."""
        entry = self.entry(key) if default is not None else self.require(key)
        if entry is None:
            assert default is not None
            return default
        try:
            return enum(entry.value)
        except ValueError:
            allowed = " | ".join(str(m.value) for m in enum)
            raise ConfigError(
                "INVALID_VALUE", f"{key!r} must be one of {allowed}, got {entry.value!r}",
                entry.line, entry.column,
            ) from None

    def switch(self, key: str, default: bool) -> bool:
        """Boolean value of an ``on``/``off`` key."""
        entry = self.entry(key)
        if entry is None:
            return default
        if entry.value not in _SWITCH:
            raise ConfigError(
                "INVALID_VALUE", f"{key!r} must be on or off, got {entry.value!r}",
                entry.line, entry.column,
            )
        return _SWITCH[entry.value]


def _read_pump(r: _Reader, kind: PlanKind) -> PumpConfig:
    """Read ``[pump]``; a second pump power is allowed for degenerate plans only."""
    low, high = TELECOM_BAND_NM
    pump2: float | None = None
    if r.has("pump2_power_uw"):
        if kind is not PlanKind.DEGENERATE:
            line, col = r.location("pump2_power_uw")
            raise ConfigError(
                "INVALID_PLAN", "pump2_power_uw applies to degenerate plans only", line, col
            )
        pump2 = r.real("pump2_power_uw", None, positive=True)
    avg = r.real("avg_power_uw", None, positive=True)
    if kind is PlanKind.DEGENERATE and pump2 is None:
        pump2 = avg
    return PumpConfig(
        avg_power_uw=avg,
        center_wavelength_nm=r.real("center_nm", 1555.9, low=low, high=high),
        pulse_duration_ps=r.real("pulse_ps", 5.0, positive=True),
        rep_rate_mhz=r.real("rep_rate_mhz", 50.3, positive=True),
        pump2_power_uw=pump2,
    )


def _read_channels(r: _Reader, kind: PlanKind, pump_center: float) -> ChannelPlan:
    """Read ``[channels]``, filling pump and channel wavelengths for ``kind``."""
    match kind:
        case PlanKind.NONDEGENERATE:
            if r.has("pump2_nm"):
                line, col = r.location("pump2_nm")
                raise ConfigError(
                    "INVALID_PLAN", "a nondegenerate plan takes exactly 1 pump", line, col
                )
            pumps: tuple[float, ...] = (r.real("pump1_nm", pump_center, positive=True),)
            signal, idler, fwhm = 1550.95, 1561.0, 1.0
        case PlanKind.DEGENERATE:
            pumps = (
                r.real("pump1_nm", DEGENERATE_PUMPS_NM[0], positive=True),
                r.real("pump2_nm", DEGENERATE_PUMPS_NM[1], positive=True),
            )
            signal = idler = DEGENERATE_OUTPUT_NM
            fwhm = DEGENERATE_FWHM_NM
    channels = ChannelPlan(
        kind=kind,
        pump_wavelengths=pumps,
        signal_wavelength=r.real("signal_nm", signal, positive=True),
        idler_wavelength=r.real("idler_nm", idler, positive=True),
        signal_fwhm=r.real("signal_fwhm_nm", fwhm, positive=True),
        idler_fwhm=r.real("idler_fwhm_nm", fwhm, positive=True),
    )
    if kind is PlanKind.DEGENERATE and channels.signal_wavelength != channels.idler_wavelength:
        line, col = r.location("idler_nm" if r.has("idler_nm") else "signal_nm")
        raise ConfigError("INVALID_PLAN", "degenerate output needs signal_nm = idler_nm", line, col)
    return channels


def _read_source(r: _Reader) -> SourceParams:
    return SourceParams(
        kappa=r.real("kappa", 8.68e-6, low=0.0),
        raman_coeff=r.real("raman_coeff", 1e-5, low=0.0),
        ase_floor=r.real("ase_floor", 0.0, low=0.0),
        noise_polarized_fraction=r.real("noise_polarized_fraction", 0.0, low=0.0, high=1.0),
        noise_polarization=r.angle("noise_polarization_deg"),
        raman_temperature_k=r.real("raman_temperature_k", 300.0, positive=True),
    )


def _read_loop(r: _Reader) -> LoopSettings:
    return LoopSettings(
        hwp1_angle=r.angle("hwp1_deg", 22.5),
        qwp1_angle=r.angle("qwp1_deg"),
        loop_phase=r.angle("loop_phase_deg"),
        residual_idler_rotation=r.angle("residual_idler_rotation_deg"),
        residual_idler_retardance=r.angle("residual_idler_retardance_deg"),
        residual_signal_rotation=r.angle("residual_signal_rotation_deg"),
        residual_signal_retardance=r.angle("residual_signal_retardance_deg"),
        compensation=r.switch("compensation", False),
    )


def _read_detectors(r: _Reader) -> DetectorConfig:
    return DetectorConfig(
        eta_signal=r.real("eta_signal", 0.007, low=0.0, high=1.0),
        eta_idler=r.real("eta_idler", 0.008, low=0.0, high=1.0),
        dark_prob=r.real("dark_prob", 5e-6, low=0.0, high=1.0),
        gate_rate_khz=r.real("gate_rate_khz", 780.0, positive=True),
    )


def _read_sweep(r: _Reader) -> SweepSpec:
    """Read ``[sweep]``; log spacing needs positive end points."""
    spec = SweepSpec(
        variable=r.choice("variable", SweepVariable, None),
        start=r.real("start", None),
        stop=r.real("stop", None),
        steps=r.integer("steps", None, low=2),
        spacing=r.choice("spacing", SweepSpacing, SweepSpacing.LINEAR),
    )
    if spec.spacing is SweepSpacing.LOG and min(spec.start, spec.stop) <= 0:
        line, col = r.location("start" if spec.start <= 0 else "stop")
        raise ConfigError("OUT_OF_RANGE", "log spacing needs positive bounds", line, col)
    if spec.variable is SweepVariable.POWER and min(spec.start, spec.stop) <= 0:
        line, col = r.location("start" if spec.start <= 0 else "stop")
        raise ConfigError("OUT_OF_RANGE", "swept powers must be > 0", line, col)
    return spec


def parse_with_warnings(text: str) -> tuple[ExperimentPlan, list[ParseWarning]]:
    """Parse a plan document, returning the plan and non-fatal diagnostics."""
    sections = _read_sections(text)
    warnings: list[ParseWarning] = []

    def reader(name: str) -> _Reader:
        return _Reader(sections.get(name), warnings)

    if "pump" not in sections:
        raise ConfigError("MISSING_SECTION", "required section [pump] is missing", 1, 1)

    experiment = reader("experiment")
    version = experiment.integer("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        line, col = experiment.location("format_version")
        raise ConfigError(
            "UNSUPPORTED_VERSION", f"format_version {version} is not supported", line, col
        )

    channels_r = reader("channels")
    plan_kind = channels_r.choice("kind", PlanKind, PlanKind.NONDEGENERATE)
    pump_r = reader("pump")
    try:
        pump = _read_pump(pump_r, plan_kind)
        channels = _read_channels(channels_r, plan_kind, pump.center_wavelength_nm)
        source = _read_source(reader("source"))
        loop = _read_loop(reader("loop"))
        detectors = _read_detectors(reader("detectors"))
    except ConfigError:
        raise
    except SimulationError as exc:
        raise ConfigError("INVALID_PLAN", exc.message, max(pump_r.line, 1), 1) from exc

    kind = experiment.choice("kind", ExperimentKind, ExperimentKind.SIGNAL_IDLER)
    if (kind is ExperimentKind.DEGENERATE) != (plan_kind is PlanKind.DEGENERATE):
        line, col = experiment.location("kind")
        raise ConfigError(
            "INVALID_PLAN",
            f"experiment kind {kind.value} does not match a {plan_kind.value} source",
            line,
            col,
        )
    analyzers = AnalyzerSetting(
        theta1=experiment.angle("theta1_deg"), theta2=experiment.angle("theta2_deg")
    )
    gates = experiment.integer("gates", 10_000_000, low=1)
    seed = experiment.integer("seed", 0, low=0, high=SEED_LIMIT)
    sweep = _read_sweep(reader("sweep")) if "sweep" in sections else None

    if plan_kind is PlanKind.DEGENERATE and pump.second_pump_power_uw != pump.avg_power_uw:
        line, col = pump_r.location("pump2_power_uw")
        warnings.append(
            ParseWarning(
                "PHASE_MATCH_SUBOPTIMAL",
                "degenerate pumps should carry equal power for optimal phase matching",
                line,
                col,
            )
        )
    energy = check_energy_conservation(channels)
    if not energy.passed:
        warnings.append(
            ParseWarning(
                "ENERGY_MISMATCH",
                f"relative detuning {energy.detuning:.3e} exceeds filter tolerance "
                f"{energy.tolerance:.3e}",
                max(channels_r.line, 1),
                1,
            )
        )
    if warnings:
        logger.debug("plan parsed with %d warning(s)", len(warnings))

    plan = ExperimentPlan(
        pump=pump,
        channels=channels,
        source=source,
        loop=loop,
        detectors=detectors,
        kind=kind,
        analyzers=analyzers,
        sweep=sweep,
        gates=gates,
        seed=seed,
    )
    return plan, warnings


def parse(text: str) -> ExperimentPlan:
    """Parse plan text, discarding warnings."""
    return parse_with_warnings(text)[0]


def load(path: str | Path) -> ExperimentPlan:
    """Parse the plan file at ``path``."""
    return parse(read_text(path))


def read_text(path: str | Path) -> str:
    """Read a plan file as UTF-8, reporting undecodable bytes as a syntax error."""
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError("SYNTAX_ERROR", f"{path} is not UTF-8: {exc.reason}") from exc


# -- writing ---------------------------------------------------------------


def _angle(radians: float) -> str:
    degrees, _ = normalize_degrees(math.degrees(radians))
    return f"{degrees:.{ANGLE_DECIMALS}f}"


def _real(value: float) -> str:
    return repr(float(value))


def _sections(plan: ExperimentPlan) -> dict[str, dict[str, str]]:
    """Canonical key/value text of every section of ``plan``."""
    pump, ch, src, loop, det = plan.pump, plan.channels, plan.source, plan.loop, plan.detectors
    degenerate = ch.kind is PlanKind.DEGENERATE

    pump_keys = {
        "avg_power_uw": _real(pump.avg_power_uw),
        "center_nm": _real(pump.center_wavelength_nm),
        "pulse_ps": _real(pump.pulse_duration_ps),
        "rep_rate_mhz": _real(pump.rep_rate_mhz),
    }
    channel_keys = {
        "kind": ch.kind.value,
        "pump1_nm": _real(ch.pump_wavelengths[0]),
        "signal_nm": _real(ch.signal_wavelength),
        "idler_nm": _real(ch.idler_wavelength),
        "signal_fwhm_nm": _real(ch.signal_fwhm),
        "idler_fwhm_nm": _real(ch.idler_fwhm),
    }
    if degenerate:
        pump_keys["pump2_power_uw"] = _real(pump.second_pump_power_uw)
        channel_keys["pump2_nm"] = _real(ch.pump_wavelengths[1])

    sections = {
        "pump": pump_keys,
        "channels": channel_keys,
        "source": {
            "kappa": _real(src.kappa),
            "raman_coeff": _real(src.raman_coeff),
            "ase_floor": _real(src.ase_floor),
            "noise_polarized_fraction": _real(src.noise_polarized_fraction),
            "noise_polarization_deg": _angle(src.noise_polarization),
            "raman_temperature_k": _real(src.raman_temperature_k),
        },
        "loop": {
            "hwp1_deg": _angle(loop.hwp1_angle),
            "qwp1_deg": _angle(loop.qwp1_angle),
            "loop_phase_deg": _angle(loop.loop_phase),
            "compensation": "on" if loop.compensation else "off",
            "residual_idler_rotation_deg": _angle(loop.residual_idler_rotation),
            "residual_idler_retardance_deg": _angle(loop.residual_idler_retardance),
            "residual_signal_rotation_deg": _angle(loop.residual_signal_rotation),
            "residual_signal_retardance_deg": _angle(loop.residual_signal_retardance),
        },
        "detectors": {
            "eta_signal": _real(det.eta_signal),
            "eta_idler": _real(det.eta_idler),
            "dark_prob": _real(det.dark_prob),
            "gate_rate_khz": _real(det.gate_rate_khz),
        },
        "experiment": {
            "format_version": str(FORMAT_VERSION),
            "kind": plan.kind.value,
            "theta1_deg": _angle(plan.analyzers.theta1),
            "theta2_deg": _angle(plan.analyzers.theta2),
            "gates": str(plan.gates),
            "seed": str(plan.seed),
        },
    }
    if plan.sweep is not None:
        sections["sweep"] = {
            "variable": plan.sweep.variable.value,
            "start": _real(plan.sweep.start),
            "stop": _real(plan.sweep.stop),
            "steps": str(plan.sweep.steps),
            "spacing": plan.sweep.spacing.value,
        }
    return sections


def serialize(plan: ExperimentPlan) -> str:
    """Canonical text: fixed section order, sorted keys, one blank line between."""
    sections = _sections(plan)
    blocks = []
    for name in SECTION_ORDER:
        if name not in sections:
            continue
        keys = sections[name]
        lines = [f"[{name}]"] + [f"{k} = {keys[k]}" for k in sorted(keys)]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
