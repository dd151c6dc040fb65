"""Simulation and uniqueness checks for CIR / squared Bessel processes skew-reflected on a curve."""
from .errors import DomainError, NumericalFailure, PreconditionError, SkewCurveError, ValidationError
from .model import Curve, ModelParams, SignedMeasureSummary, jordan_decomposition, slope_bounds
from .criterion import CriterionReport, SkewWeight, check_corollary, skew_weight_cancellation
from .engine import SimConfig, Trajectory, couple, simulate, simulate_path, step

__version__ = "0.1.0"
