"""Symbolic-dynamics toolkit for homoclinic bifurcations of Shilnikov saddle-foci."""
from __future__ import annotations

__version__ = "0.1.0"

from .integrate import Branch, IntegrationConfig, SymbolStream, integrate_symbols, separatrix_ic, separatrix_symbols
from .models import ModelKind, ModelSpec, Transform, classify_equilibrium, equilibria, param_transform
from .symbolic import KneadingConfig, Mode, classify_long_term, kneading_invariant, lz76_complexity
from .sweep import CellClass, SweepConfig, SweepGrid, refine_boundary, run_sweep

__all__ = [
    "Branch", "IntegrationConfig", "SymbolStream", "integrate_symbols", "separatrix_ic",
    "separatrix_symbols", "ModelKind", "ModelSpec", "Transform", "classify_equilibrium",
    "equilibria", "param_transform", "KneadingConfig", "Mode", "classify_long_term",
    "kneading_invariant", "lz76_complexity", "CellClass", "SweepConfig", "SweepGrid",
    "refine_boundary", "run_sweep", "__version__",
]
