"""Silicon-waveguide photon-pair bench simulator.

Models a counter-propagating Sagnac source of polarization-entangled pairs,
gated photon counting with noise and dark counts, and the analyses built on
it: coincidence-to-accidental ratio, the classical two-source inequality and
two-photon interference visibility.
"""

from .bench import Bench, simulate_fringe, simulate_inequality
from .config import ExperimentPlan, load, parse, parse_with_warnings, serialize
from .core import (
    ConfigError,
    CountRecord,
    ExperimentKind,
    PlanKind,
    SimulationError,
)
from .detection import AnalyzerSetting, DetectorConfig, run_gates
from .metrics import FringeDataset, FringeFit, InequalityResult, car, visibility_fit, zou_mandel_lhs
from .polarization import PolUnitary, TwoPhotonState
from .presets import load_preset, preset_names

__version__ = "0.1.0"
__all__ = [
    "Bench",
    "simulate_fringe",
    "simulate_inequality",
    "ExperimentPlan",
    "parse",
    "parse_with_warnings",
    "serialize",
    "load",
    "load_preset",
    "preset_names",
    "ConfigError",
    "SimulationError",
    "CountRecord",
    "ExperimentKind",
    "PlanKind",
    "AnalyzerSetting",
    "DetectorConfig",
    "run_gates",
    "FringeDataset",
    "FringeFit",
    "InequalityResult",
    "car",
    "visibility_fit",
    "zou_mandel_lhs",
    "PolUnitary",
    "TwoPhotonState",
]
