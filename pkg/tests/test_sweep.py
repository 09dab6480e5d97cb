from __future__ import annotations

import threading

import numpy as np
import pytest

from saddlefocus.integrate import IntegrationConfig
from saddlefocus.models import ModelSpec
from saddlefocus.integrate import separatrix_symbols
from saddlefocus.sweep import (
    DCP_CHAOS_BIT,
    ESCAPE_SENTINEL,
    CellClass,
    SweepConfig,
    default_workers,
    evaluate_points,
    refine_boundary,
    refine_segment,
    run_sweep,
    scan_line,
)
from saddlefocus.symbolic import KneadingConfig, kneading_invariant


def _same(g1, g2):
    assert np.array_equal(g1.classes, g2.classes)
    assert np.array_equal(g1.values, g2.values, equal_nan=True)


def test_axes_include_both_ends(chua_cfg):
    cfg = chua_cfg(res=(5, 3))
    assert np.allclose(cfg.u_values(), np.linspace(0.5, 1.0, 5))
    assert cfg.cell_center(4, 2) == (1.0, 6.0)
    with pytest.raises(IndexError):
        cfg.cell_center(5, 0)


def test_repeat_runs_are_identical(chua_cfg):
    cfg = SweepConfig("chua", "identity", (8.0, 11.0), (12.0, 15.0), (2, 2), KneadingConfig(1, 8))
    _same(run_sweep(cfg, workers=1), run_sweep(cfg, workers=1))


def test_worker_count_does_not_change_results():
    cfg = SweepConfig("chua", "identity", (6.0, 12.0), (9.0, 15.0), (7, 6), KneadingConfig(1, 8))
    g1 = run_sweep(cfg, workers=1)
    g3 = run_sweep(cfg, workers=3, chunk_size=5)
    _same(g1, g3)
    assert g1.complete and g3.complete and g3.workers == 3


def test_cells_follow_single_trajectory_pipeline():
    cfg = SweepConfig("chua", "identity", (9.0, 11.0), (13.0, 15.0), (3, 3), KneadingConfig(2, 9))
    g = run_sweep(cfg, workers=1)
    for p, q in [(0, 0), (1, 2), (2, 1)]:
        a, b = cfg.cell_center(p, q)
        s = separatrix_symbols(ModelSpec("chua", a, b), cfg=IntegrationConfig(max_symbols=9))
        assert g.values[p, q] == kneading_invariant(s, 2, 9)


def test_constant_patch_in_stable_regime():
    # small a: the separatrix settles on the right focus, every cell reads 1...1
    cfg = SweepConfig("chua", "identity", (0.4, 0.6), (5.8, 6.2), (5, 5), KneadingConfig(1, 6))
    g = run_sweep(cfg, workers=1)
    assert np.all(g.classes == CellClass.OK)
    assert np.all(g.values == 1 - 2.0 ** -6)


def test_evaluate_points_matches_grid_nodes():
    cfg = SweepConfig("chua", "polar", (0.8, 1.0), (9.0, 10.0), (3, 3), KneadingConfig(1, 5))
    g = run_sweep(cfg, workers=1)
    r = evaluate_points(cfg, [cfg.u_values()[1]], [cfg.v_values()[2]])
    assert r.values[0] == g.values[1, 2]


def test_escape_and_invalid_cells():
    cfg = SweepConfig("acst", "identity", (4.0, 5.0), (0.3, 0.5), (2, 2), KneadingConfig(1, 6),
                      IntegrationConfig(max_time=2000))
    g = run_sweep(cfg, workers=1)
    assert np.all(g.classes == CellClass.ESCAPED)
    assert np.all(g.values == ESCAPE_SENTINEL)
    bad = SweepConfig("chua", "identity", (1.0, 2.0), (-2.0, -1.0), (2, 2), KneadingConfig(1, 6))
    gb = run_sweep(bad, workers=1)
    assert np.all(gb.classes == CellClass.INVALID)
    assert np.all(gb.values == ESCAPE_SENTINEL)


def test_one_sided_mode_stops_at_first_zero():
    cfg = SweepConfig("chua", "identity", (10.16, 11.0), (14.7, 15.0), (2, 2),
                      KneadingConfig(1, 20, mode="one-sided"))
    r = evaluate_points(cfg, [10.16], [14.7], keep_symbols=True)
    bits = r.symbols[0, : r.lengths[0]]
    assert bits[-1] == 0 and np.all(bits[:-1] == 1)
    assert r.values[0] == pytest.approx((len(bits) - 1) / 20)


def test_dcp_mode_codes():
    cfg = SweepConfig("chua", "identity", (2.0, 9.0), (6.0, 7.0), (2, 2),
                      KneadingConfig.dcp(101, 300))
    r = evaluate_points(cfg, [2.0, 9.0, 10.16], [6.0, 6.0, 14.7])
    assert list(r.codes[:2]) == [1, 2]
    assert r.codes[2] & DCP_CHAOS_BIT
    assert 0 < r.lz_norm[2] <= 1.5


def test_cancel_before_start_leaves_unstarted_cells(chua_cfg):
    ev = threading.Event()
    ev.set()
    g = run_sweep(chua_cfg(res=(6, 6)), workers=1, cancel=ev)
    assert not g.complete
    assert np.all(g.classes == CellClass.UNSTARTED)
    assert np.all(np.isnan(g.values))


def test_cancel_midway_keeps_finished_chunks(chua_cfg):
    ev = threading.Event()

    def progress(done, total):
        if done >= 8:
            ev.set()

    g = run_sweep(chua_cfg(res=(6, 6)), workers=1, cancel=ev, chunk_size=4, progress=progress)
    assert not g.complete
    done = g.classes != CellClass.UNSTARTED
    assert done.sum() == 8
    assert np.all(~np.isnan(g.values[done]))
    assert g.counts()["UNSTARTED"] == 28


def test_cancel_with_pool():
    cfg = SweepConfig("chua", "identity", (6.0, 12.0), (9.0, 15.0), (20, 20), KneadingConfig(1, 6))
    ev = threading.Event()
    g = run_sweep(cfg, workers=2, cancel=ev, chunk_size=10,
                  progress=lambda d, t: ev.set())
    assert not g.complete
    assert g.counts()["UNSTARTED"] > 0
    ok = g.classes != CellClass.UNSTARTED
    ref = run_sweep(cfg, workers=1)
    assert np.array_equal(g.values[ok], ref.values[ok])


def test_refine_between_adjacent_cells():
    cfg = SweepConfig("chua", "polar", (0.86, 0.89), (9.995, 10.0), (4, 2), KneadingConfig(1, 3))
    g = run_sweep(cfg, workers=1)
    col = g.values[:, 0]
    p = int(np.flatnonzero(col[1:] != col[:-1])[0])
    bp = refine_boundary(cfg, (p, 0), (p + 1, 0), tol=1e-8)
    assert bp.width < 1e-8
    assert cfg.u_values()[p] <= bp.u <= cfg.u_values()[p + 1]
    assert bp.k_a != bp.k_b
    assert bp.symbols_a[:2] == bp.symbols_b[:2] == "10"


def test_refine_errors():
    cfg = SweepConfig("chua", "identity", (0.4, 0.6), (5.8, 6.2), (3, 3), KneadingConfig(1, 6))
    with pytest.raises(ValueError, match="no boundary"):
        refine_boundary(cfg, (0, 0), (1, 0))
    with pytest.raises(ValueError, match="adjacent"):
        refine_boundary(cfg, (0, 0), (2, 0))
    with pytest.raises(ValueError):
        refine_segment(cfg, (0.5, 6.0), (0.6, 6.0), tol=0)


def test_scan_line_endpoints():
    cfg = SweepConfig("chua", "identity", (0.4, 0.6), (5.8, 6.2), (2, 2), KneadingConfig(1, 6))
    us, vs, r = scan_line(cfg, (0.4, 6.0), (0.6, 6.0), 5)
    assert us[0] == 0.4 and us[-1] == 0.6 and len(r.values) == 5


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig("chua", "identity", (1, 0), (0, 1), (4, 4))
    with pytest.raises(ValueError):
        SweepConfig("chua", "identity", (0, 1), (0, 1), (1, 4))
    with pytest.raises(ValueError):
        SweepConfig("chua", "identity", (0, float("inf")), (0, 1), (4, 4))


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("CHAOS_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("CHAOS_WORKERS", "0")
    with pytest.raises(ValueError):
        default_workers()
