"""Mean-value exergy analysis of a diesel engine over drive cycles."""

__version__ = "0.1.0"

from .engine import DEFAULT_ENGINE, EngineGeometry, EngineSpec, OperatingPoint
from .exergy import ExergyRates, ExergyTotals, PercentBreakdown, integrate, percentages
from .mixture import DRY_AIR, HUMID_AMBIENT, IntakeState, ReferenceState
from .model import EngineModel, balance
from .sweep import CycleTrace, STUDY_GRID, SweepGrid, evaluate_cycle, run_sweep, trend_report
from .thermo import DIESEL, Species

__all__ = [
    "DEFAULT_ENGINE", "DIESEL", "DRY_AIR", "HUMID_AMBIENT", "STUDY_GRID",
    "CycleTrace", "EngineGeometry", "EngineModel", "EngineSpec", "ExergyRates",
    "ExergyTotals", "IntakeState", "OperatingPoint", "PercentBreakdown",
    "ReferenceState", "Species", "SweepGrid", "balance", "evaluate_cycle",
    "integrate", "percentages", "run_sweep", "trend_report",
]
