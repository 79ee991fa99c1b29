"""Pseudospectral simulator for 2D MHD with fractional dissipation."""

from fracmhd.diagnostics import DiagnosticsRecord, RegionVerdict, classify_region, gn_ratio
from fracmhd.dynamics import MhdState, PhysParams, init_condition, step
from fracmhd.errors import (
    ConfigInvalid,
    DegenerateInput,
    FracMhdError,
    GridMismatch,
    HermitianViolation,
    NegativePowerOnMean,
    NonFinite,
    NonZeroMean,
    ResolutionLoss,
)
from fracmhd.harness import RunConfig, SweepSpec, run, sweep
from fracmhd.spectral import GridSpec, RealSamples, SpectralField

__version__ = "0.1.0"

__all__ = [
    "ConfigInvalid",
    "DegenerateInput",
    "DiagnosticsRecord",
    "FracMhdError",
    "GridMismatch",
    "GridSpec",
    "HermitianViolation",
    "MhdState",
    "NegativePowerOnMean",
    "NonFinite",
    "NonZeroMean",
    "PhysParams",
    "RealSamples",
    "RegionVerdict",
    "ResolutionLoss",
    "RunConfig",
    "SpectralField",
    "SweepSpec",
    "classify_region",
    "gn_ratio",
    "init_condition",
    "run",
    "step",
    "sweep",
]
