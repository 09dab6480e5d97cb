"""Biparametric grid sweeps over the separatrix symbol streams.

Each cell maps its sweep coordinates ``(u, v)`` to model parameters,
starts the chosen separatrix of the origin, records its symbols and
encodes them as a kneading value (or a long-term class in DCP mode).
Cells are independent; the grid is split into contiguous chunks of flat
cell indices and the result does not depend on how the chunks are spread
over worker processes.
"""
from __future__ import annotations

import enum
import logging
import multiprocessing as mp
import os
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as _k
from .integrate import Branch, IntegrationConfig
from .models import ModelKind, Transform
from .symbolic import (
    KneadingConfig,
    Mode,
    detect_period,
    kneading_weights,
    lz76_complexity,
    normalized_lz,
)

__all__ = [
    "CellClass",
    "SweepConfig",
    "SweepGrid",
    "PointResult",
    "BoundaryPoint",
    "ESCAPE_SENTINEL",
    "DCP_CHAOS_BIT",
    "default_workers",
    "evaluate_points",
    "run_sweep",
    "refine_boundary",
    "scan_line",
]

log = logging.getLogger(__name__)

ESCAPE_SENTINEL = -1.0
DCP_CHAOS_BIT = 0x80000000


class CellClass(enum.IntEnum):
    OK = 0
    TRUNCATED = 1
    ESCAPED = 2
    TIMED_OUT = 3
    INVALID = 4      # the origin has no 1D unstable direction here
    UNSTARTED = 5    # left over by a cancelled sweep


@dataclass(frozen=True)
class SweepConfig:
    model: ModelKind
    transform: Transform
    u_range: tuple[float, float]
    v_range: tuple[float, float]
    resolution: tuple[int, int]
    encoding: KneadingConfig = field(default_factory=KneadingConfig)
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)
    branch: Branch = Branch.GAMMA1

    def __post_init__(self):
        object.__setattr__(self, "model", ModelKind.parse(self.model))
        object.__setattr__(self, "transform", Transform.parse(self.transform))
        object.__setattr__(self, "branch", Branch.parse(self.branch))
        ur = tuple(float(x) for x in self.u_range)
        vr = tuple(float(x) for x in self.v_range)
        res = tuple(int(n) for n in self.resolution)
        if len(ur) != 2 or len(vr) != 2 or len(res) != 2:
            raise ValueError("ranges and resolution need two entries each")
        if not (np.all(np.isfinite(ur + vr)) and ur[0] < ur[1] and vr[0] < vr[1]):
            raise ValueError(f"ranges must be finite with lo < hi, got {ur} and {vr}")
        if min(res) < 2:
            raise ValueError(f"resolution must be >= 2 per axis, got {res}")
        object.__setattr__(self, "u_range", ur)
        object.__setattr__(self, "v_range", vr)
        object.__setattr__(self, "resolution", res)

    @property
    def shape(self) -> tuple[int, int]:
        return self.resolution

    def u_values(self) -> np.ndarray:
        return _axis(self.u_range, self.resolution[0])

    def v_values(self) -> np.ndarray:
        return _axis(self.v_range, self.resolution[1])

    def cell_center(self, p: int, q: int) -> tuple[float, float]:
        nu, nv = self.resolution
        if not (0 <= p < nu and 0 <= q < nv):
            raise IndexError(f"cell ({p}, {q}) outside {nu}x{nv} grid")
        return float(self.u_values()[p]), float(self.v_values()[q])


def _axis(rng, n):
    lo, hi = rng
    return lo + np.arange(n) * ((hi - lo) / (n - 1))


@dataclass
class SweepGrid:
    """Sweep result; ``values[p, q]`` belongs to ``u_values()[p], v_values()[q]``.

    ``values`` holds K in [0, 1], ``ESCAPE_SENTINEL`` for escaped or
    invalid cells and NaN for unstarted ones. In DCP mode ``codes`` holds
    the period of periodic cells, ``DCP_CHAOS_BIT | lz`` for chaotic cells
    and 0 otherwise; ``lz_norm`` the normalized complexity of chaotic cells.
    """
    config: SweepConfig
    values: np.ndarray
    classes: np.ndarray
    codes: np.ndarray | None = None
    lz_norm: np.ndarray | None = None
    complete: bool = True
    wall_time: float = 0.0
    workers: int = 1

    def counts(self) -> dict[str, int]:
        return {c.name: int(np.sum(self.classes == c)) for c in CellClass}


@dataclass
class PointResult:
    values: np.ndarray
    classes: np.ndarray
    codes: np.ndarray
    lz_norm: np.ndarray
    symbols: np.ndarray | None = None
    lengths: np.ndarray | None = None


def default_workers() -> int:
    env = os.environ.get("CHAOS_WORKERS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("CHAOS_WORKERS must be a positive integer")
        return n
    return os.cpu_count() or 1


# -- cell evaluation ----------------------------------------------------------

def _integration_args(cfg: SweepConfig):
    enc, ic = cfg.encoding, cfg.integration
    if enc.mode is Mode.ONE_SIDED:
        # the symbol that ends a one-sided count is the first 0
        stop_bit = 0
    else:
        stop_bit = -1
    return (int(cfg.model), int(cfg.transform), float(int(cfg.branch)),
            ic.delta, ic.dt, ic.max_steps, int(enc.j), ic.esc_bound,
            ic.symbol_threshold, bool(ic.refine_extrema), ic.stall_tol,
            bool(ic.settle_fill), stop_bit)


def _encode(cfg: SweepConfig, syms, lengths, status):
    """Turn raw per-cell symbol rows into (values, classes, codes, lz_norm)."""
    enc = cfg.encoding
    n_cells = len(lengths)
    values = np.zeros(n_cells)
    classes = np.full(n_cells, CellClass.OK, dtype=np.uint8)
    codes = np.zeros(n_cells, dtype=np.uint32)
    lz_norm = np.zeros(n_cells)

    if enc.mode is Mode.ONE_SIDED:
        # leading 1s of the whole stream, capped at r = j; runs stop on the first 0
        r = enc.j
        zero = (syms == 0) | (np.arange(r)[None, :] >= lengths[:, None])
        values = np.where(zero.any(axis=1), zero.argmax(axis=1), r) / r
    else:
        w = kneading_weights(enc.i, enc.j, enc.q)
        values = syms[:, enc.i - 1:enc.j].astype(float) @ w

    timed_out = status == _k.TIMED_OUT
    classes[timed_out & (lengths >= enc.i)] = CellClass.TRUNCATED
    classes[timed_out & (lengths < enc.i)] = CellClass.TIMED_OUT
    esc = status == _k.ESCAPED
    bad = status == _k.NO_UNSTABLE
    classes[esc] = CellClass.ESCAPED
    classes[bad] = CellClass.INVALID
    values[esc | bad] = ESCAPE_SENTINEL

    if enc.mode is Mode.DCP:
        for c in range(n_cells):
            if esc[c] or bad[c]:
                continue
            n = int(lengths[c])
            window = syms[c, enc.i - 1:min(n, enc.j)]
            if len(window) == 0:
                window = syms[c, :n]
            if len(window) >= 2:
                p = detect_period(window)
                if p is not None:
                    codes[c] = p
                    continue
            if len(window) == 0:
                lz = 1
                lz_norm[c] = 1.0
            else:
                lz = lz76_complexity(window)
                lz_norm[c] = normalized_lz(lz, len(window))
            codes[c] = DCP_CHAOS_BIT | lz
    return values, classes, codes, lz_norm


def _eval_flat(cfg: SweepConfig, us: np.ndarray, vs: np.ndarray, keep_symbols=False):
    n_cells = len(us)
    syms = np.zeros((n_cells, cfg.encoding.j), dtype=np.uint8)
    lengths = np.zeros(n_cells, dtype=np.int64)
    status = np.zeros(n_cells, dtype=np.int64)
    (model, tkind, sign, delta, dt, max_steps, max_sym, esc, thr, refine,
     stall, fill, stop_bit) = _integration_args(cfg)
    _k.cells_kernel(model, tkind, np.ascontiguousarray(us, dtype=float),
                    np.ascontiguousarray(vs, dtype=float), sign, delta, dt,
                    max_steps, max_sym, esc, thr, refine, stall, fill,
                    stop_bit, syms, lengths, status)
    out = _encode(cfg, syms, lengths, status)
    if keep_symbols:
        return out + (syms, lengths)
    return out


def evaluate_points(cfg: SweepConfig, us, vs, keep_symbols: bool = False) -> PointResult:
    """Evaluate arbitrary (u, v) points with the cell pipeline of ``cfg``.

    Uses exactly the same kernel as :func:`run_sweep`, so a point that
    coincides with a grid node gets a bit-identical result.
    """
    us = np.atleast_1d(np.asarray(us, dtype=float)).ravel()
    vs = np.atleast_1d(np.asarray(vs, dtype=float)).ravel()
    if us.shape != vs.shape:
        raise ValueError("u and v must have the same length")
    res = _eval_flat(cfg, us, vs, keep_symbols=keep_symbols)
    if keep_symbols:
        values, classes, codes, lz, syms, lengths = res
        return PointResult(values, classes, codes, lz, syms, lengths)
    return PointResult(*res)


# -- grid driver ----------------------------------------------------------------

def _chunk_worker(cfg: SweepConfig, start: int, stop: int):
    nu, nv = cfg.resolution
    flat = np.arange(start, stop)
    us = cfg.u_values()[flat // nv]
    vs = cfg.v_values()[flat % nv]
    return start, stop, _eval_flat(cfg, us, vs)


def _chunks(n_cells: int, workers: int, chunk_size: int | None):
    if chunk_size is None:
        chunk_size = max(1, min(4096, -(-n_cells // (workers * 16))))
    return [(s, min(s + chunk_size, n_cells)) for s in range(0, n_cells, chunk_size)]


def _warm_up(cfg: SweepConfig):
    # compile (or load from cache) once in the parent so forked workers inherit it
    _eval_flat(replace(cfg, resolution=(2, 2)), np.array([cfg.u_range[0]]),
               np.array([cfg.v_range[0]]))


def run_sweep(cfg: SweepConfig, workers: int | None = None,
              cancel: threading.Event | None = None,
              chunk_size: int | None = None, progress=None) -> SweepGrid:
    """Evaluate every cell of the grid.

    ``workers=None`` reads ``CHAOS_WORKERS`` or uses all cores. Setting
    ``cancel`` (or a KeyboardInterrupt) stops scheduling new chunks; the
    returned grid then has ``complete=False`` and unstarted cells.
    ``progress`` is called as ``progress(done_cells, total_cells)``.
    """
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    nu, nv = cfg.resolution
    n_cells = nu * nv
    values = np.full(n_cells, np.nan)
    classes = np.full(n_cells, CellClass.UNSTARTED, dtype=np.uint8)
    dcp = cfg.encoding.mode is Mode.DCP
    codes = np.zeros(n_cells, dtype=np.uint32)
    lz_norm = np.zeros(n_cells)
    chunks = _chunks(n_cells, workers, chunk_size)
    done = 0
    complete = True
    t0 = time.perf_counter()

    def store(start, stop, res):
        nonlocal done
        values[start:stop], classes[start:stop], codes[start:stop], lz_norm[start:stop] = res
        done += stop - start
        if progress is not None:
            progress(done, n_cells)

    _warm_up(cfg)
    try:
        if workers == 1:
            for start, stop in chunks:
                if cancel is not None and cancel.is_set():
                    complete = False
                    break
                store(*_chunk_worker(cfg, start, stop))
        else:
            complete = _run_pool(cfg, chunks, workers, cancel, store)
    except KeyboardInterrupt:
        log.warning("sweep interrupted; returning partial grid")
        complete = False

    return SweepGrid(
        config=cfg,
        values=values.reshape(nu, nv),
        classes=classes.reshape(nu, nv),
        codes=codes.reshape(nu, nv) if dcp else None,
        lz_norm=lz_norm.reshape(nu, nv) if dcp else None,
        complete=complete and done == n_cells,
        wall_time=time.perf_counter() - t0,
        workers=workers,
    )


def _run_pool(cfg, chunks, workers, cancel, store) -> bool:
    try:
        ctx = mp.get_context("fork")
    except ValueError:
        ctx = mp.get_context()
    pending = iter(chunks)
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        running = set()
        try:
            # keep a bounded number of chunks in flight so cancel is prompt
            for _ in range(2 * workers):
                nxt = next(pending, None)
                if nxt is None:
                    break
                running.add(pool.submit(_chunk_worker, cfg, *nxt))
            while running:
                finished, running = wait(running, timeout=0.5, return_when=FIRST_COMPLETED)
                for fut in finished:
                    store(*fut.result())
                if cancel is not None and cancel.is_set():
                    for fut in running:
                        fut.cancel()
                    return False
                for _ in range(len(finished)):
                    nxt = next(pending, None)
                    if nxt is None:
                        break
                    running.add(pool.submit(_chunk_worker, cfg, *nxt))
        except KeyboardInterrupt:
            for fut in running:
                fut.cancel()
            raise
    return True


# -- boundary refinement ----------------------------------------------------------

@dataclass
class BoundaryPoint:
    u: float
    v: float
    width: float          # final bracket length in (u, v) units
    k_a: float
    k_b: float
    symbols_a: str
    symbols_b: str
    iterations: int
    non_robust_probes: int = 0


def _probe(cfg, u, v):
    r = evaluate_points(cfg, [u], [v], keep_symbols=True)
    n = int(r.lengths[0])
    bits = "".join("1" if s else "0" for s in r.symbols[0, :n])
    return float(r.values[0]), int(r.classes[0]), bits


def refine_boundary(cfg: SweepConfig, cell_a, cell_b, tol: float = 1e-9,
                    max_iter: int = 200) -> BoundaryPoint:
    """Bisect between two adjacent cells with different K.

    The bracket ends always carry different K values. A probe that does not
    finish cleanly (escape, time-out) is logged as non-robust; bisection
    then keeps the half whose ends still differ.
    """
    (pa, qa), (pb, qb) = tuple(cell_a), tuple(cell_b)
    if abs(pa - pb) + abs(qa - qb) != 1 and not (abs(pa - pb) == 1 and abs(qa - qb) == 1):
        raise ValueError("cells must be adjacent")
    ua, va = cfg.cell_center(pa, qa)
    ub, vb = cfg.cell_center(pb, qb)
    return refine_segment(cfg, (ua, va), (ub, vb), tol=tol, max_iter=max_iter)


def refine_segment(cfg: SweepConfig, pa, pb, tol: float = 1e-9,
                   max_iter: int = 200) -> BoundaryPoint:
    """Bisection between two arbitrary (u, v) points with different K."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    ua, va = map(float, pa)
    ub, vb = map(float, pb)
    ka, ca, sa = _probe(cfg, ua, va)
    kb, cb, sb = _probe(cfg, ub, vb)
    if ca != CellClass.OK or cb != CellClass.OK:
        raise ValueError("both end cells must be Ok")
    if ka == kb:
        raise ValueError("no boundary: both ends have the same kneading value")
    seg = float(np.hypot(ub - ua, vb - va))
    lo, hi = 0.0, 1.0
    flaky = 0
    it = 0
    while (hi - lo) * seg >= tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        um, vm = ua + mid * (ub - ua), va + mid * (vb - va)
        km, cm, sm = _probe(cfg, um, vm)
        if cm != CellClass.OK:
            flaky += 1
            log.warning("non-robust probe at (%.12g, %.12g): class %s",
                        um, vm, CellClass(cm).name)
        if km == ka:
            lo, sa = mid, sm
        else:
            hi, kb, sb = mid, km, sm
        it += 1
    mid = 0.5 * (lo + hi)
    return BoundaryPoint(u=ua + mid * (ub - ua), v=va + mid * (vb - va),
                         width=(hi - lo) * seg, k_a=ka, k_b=kb,
                         symbols_a=sa, symbols_b=sb, iterations=it,
                         non_robust_probes=flaky)


def scan_line(cfg: SweepConfig, pa, pb, n: int):
    """K along ``n`` equally spaced points from ``pa`` to ``pb`` (inclusive)."""
    t = np.linspace(0.0, 1.0, n)
    us = pa[0] + t * (pb[0] - pa[0])
    vs = pa[1] + t * (pb[1] - pa[1])
    r = evaluate_points(cfg, us, vs)
    return us, vs, r
