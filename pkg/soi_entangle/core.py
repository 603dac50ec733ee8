"""Core data structures, enums and errors for the photon-pair bench simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, TypedDict


class PlanKind(Enum):
    """Four-photon scattering configuration of the source."""

    NONDEGENERATE = "nondegenerate"
    DEGENERATE = "degenerate"


class ExperimentKind(Enum):
    """Which detector arrangement a run simulates."""

    SIGNAL_IDLER = "signal_idler"
    SIGNAL_SPLIT = "signal_split"
    IDLER_SPLIT = "idler_split"
    DEGENERATE = "degenerate"


class Channel(Enum):
    """Output channel routed through the 50/50 splitter in a self-split run."""

    SIGNAL = "signal"
    IDLER = "idler"


class SweepVariable(Enum):
    """Plan quantity varied across sweep points."""

    THETA2 = "theta2"
    POWER = "power"


class SweepSpacing(Enum):
    """Spacing of sweep points between start and stop."""

    LINEAR = "linear"
    LOG = "log"


class PhotonStatistics(Enum):
    """Per-gate photon-number law of the pair stream."""

    POISSON = "poisson"
    FOCK = "fock"


@dataclass(frozen=True)
class CountRecord:
    """Tallies from one gated counting run.

    Channel 1 is the idler detector and channel 2 the signal detector in a
    signal-idler run; in split runs they are the two splitter arms.
    """

    gates: int = 0
    singles_1: int = 0
    singles_2: int = 0
    coincidences: int = 0
    accidentals_estimate: int = 0

    def __post_init__(self) -> None:
        counts = (
            self.singles_1,
            self.singles_2,
            self.coincidences,
            self.accidentals_estimate,
        )
        if self.gates < 0 or any(c < 0 for c in counts):
            raise InvalidInputError("count record fields must be nonnegative")
        if any(c > self.gates for c in counts):
            raise InvalidInputError("a detector registers at most one click per gate")
        if self.coincidences > min(self.singles_1, self.singles_2):
            raise InvalidInputError("coincidences exceed the smaller singles count")

    def poisson_error(self, field_name: str) -> float:
        """Poisson standard error sqrt(N) of one count field."""
        return math.sqrt(getattr(self, field_name))

    def as_dict(self) -> dict[str, int]:
        """Count fields by name."""
        return {
            "gates": self.gates,
            "singles_1": self.singles_1,
            "singles_2": self.singles_2,
            "coincidences": self.coincidences,
            "accidentals_estimate": self.accidentals_estimate,
        }


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""

    code = "SIMULATION_ERROR"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code


class InvalidInputError(SimulationError):
    code = "INVALID_INPUT"


class InvalidPlanError(SimulationError):
    code = "INVALID_PLAN"


class EmptyRunError(SimulationError):
    code = "EMPTY_RUN"


class NormalizationError(SimulationError):
    code = "NORMALIZATION"


class IllPosedFitError(SimulationError):
    code = "ILL_POSED_FIT"


class ConfigError(SimulationError):
    """Plan-file error with a 1-based source location."""

    code = "CONFIG_ERROR"

    def __init__(self, code: str, message: str, line: int = 1, column: int = 1):
        super().__init__(message, code)
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.code}: {self.message}"


@dataclass(frozen=True)
class ParseWarning:
    """Non-fatal diagnostic recorded while parsing a plan."""

    code: str
    message: str
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: warning {self.code}: {self.message}"


class RunReport(TypedDict):
    """Self-contained record of one CLI run."""

    command: str
    seed: int
    overrides: dict[str, Any]
    plan: str
    points: list[dict[str, Any]]
