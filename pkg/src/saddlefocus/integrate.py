"""Fixed-step RK4 runs of the separatrices and their binary symbol streams.

A symbol is emitted at every local extremum of ``x(t)`` that clears the
gate: ``1`` for a maximum above ``+threshold``, ``0`` for a minimum below
``-threshold``. Extrema inside the gate emit nothing.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .models import ModelSpec

__all__ = [
    "Branch",
    "Status",
    "IntegrationConfig",
    "SymbolStream",
    "rk4_step",
    "separatrix_ic",
    "integrate_symbols",
]


class Branch(enum.IntEnum):
    GAMMA1 = 1
    GAMMA2 = -1

    @classmethod
    def parse(cls, name) -> "Branch":
        if isinstance(name, Branch):
            return name
        key = str(name).lower().replace("_", "").replace("-", "")
        table = {"gamma1": cls.GAMMA1, "1": cls.GAMMA1, "g1": cls.GAMMA1,
                 "gamma2": cls.GAMMA2, "2": cls.GAMMA2, "g2": cls.GAMMA2,
                 "-1": cls.GAMMA2}
        try:
            return table[key]
        except KeyError:
            raise ValueError(f"unknown branch {name!r}") from None


class Status(enum.IntEnum):
    COMPLETED = _k.COMPLETED
    ESCAPED = _k.ESCAPED
    TIMED_OUT = _k.TIMED_OUT


@dataclass(frozen=True)
class IntegrationConfig:
    """Integration settings.

    ``stall_tol`` ends a run once the vector field (max norm) drops below
    it: the trajectory has settled on an equilibrium. With ``settle_fill``
    a run that settles on one of the side equilibria (``|x| = 1``) is
    completed with that side's symbol, which is the limit of the ever
    smaller oscillations around a stable focus. Set ``stall_tol = 0`` to
    integrate to ``max_time`` unconditionally.
    """
    dt: float = 0.002
    max_time: float = 1e5
    max_symbols: int = 1000
    esc_bound: float = 100.0
    delta: float = 1e-6
    symbol_threshold: float = 1.0
    refine_extrema: bool = True
    stall_tol: float = 1e-10
    settle_fill: bool = True

    def __post_init__(self):
        if not self.dt > 0 or not self.delta > 0 or not self.esc_bound > 0:
            raise ValueError("dt, delta and esc_bound must be strictly positive")
        if int(self.max_symbols) < 1:
            raise ValueError("max_symbols must be >= 1")
        if not self.max_time > 0:
            raise ValueError("max_time must be positive")
        if self.stall_tol < 0:
            raise ValueError("stall_tol must be non-negative")

    @property
    def max_steps(self) -> int:
        return int(math.ceil(self.max_time / self.dt))


@dataclass
class SymbolStream:
    symbols: np.ndarray
    status: Status
    steps: int = 0

    @property
    def escaped_at(self) -> int | None:
        return len(self.symbols) if self.status is Status.ESCAPED else None

    def __str__(self) -> str:
        return "".join("1" if s else "0" for s in self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)


def rk4_step(m: ModelSpec, s, dt: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if not dt > 0 or not np.all(np.isfinite(s)):
        raise ValueError("rk4_step needs finite state and dt > 0")
    out = np.array(_k.rk4(int(m.kind), m.a, m.b, s[0], s[1], s[2], dt))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("diverged")
    return out


def separatrix_ic(m: ModelSpec, branch="gamma1", delta: float = 1e-6) -> np.ndarray:
    """Point ``delta`` away from the origin along its unstable direction.

    Gamma1 leaves to the right (positive x component), Gamma2 is its mirror.
    """
    ok, vx, vy, vz = _k.unstable_direction(int(m.kind), m.a, m.b)
    if not ok:
        raise ValueError("no 1D unstable direction at the origin")
    sign = float(Branch.parse(branch))
    return sign * delta * np.array([vx, vy, vz])


def integrate_symbols(m: ModelSpec, ic, cfg: IntegrationConfig | None = None) -> SymbolStream:
    cfg = cfg or IntegrationConfig()
    ic = np.asarray(ic, dtype=float)
    if ic.shape != (3,) or not np.all(np.isfinite(ic)):
        raise ValueError("initial condition must be a finite 3-vector")
    out = np.zeros(int(cfg.max_symbols), dtype=np.uint8)
    n, status, steps = _k.integrate_kernel(
        int(m.kind), m.a, m.b, ic[0], ic[1], ic[2], cfg.dt, cfg.max_steps,
        int(cfg.max_symbols), cfg.esc_bound, cfg.symbol_threshold,
        cfg.refine_extrema, cfg.stall_tol, cfg.settle_fill, -1, out)
    return SymbolStream(out[:n].copy(), Status(status), int(steps))


def separatrix_symbols(m: ModelSpec, branch="gamma1", cfg: IntegrationConfig | None = None) -> SymbolStream:
    cfg = cfg or IntegrationConfig()
    return integrate_symbols(m, separatrix_ic(m, branch, cfg.delta), cfg)
