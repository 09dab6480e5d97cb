"""Command-line entry point: ``saddlefocus <command> ...``.

Exit codes: 0 ok, 1 usage or configuration error, 2 numerical failure,
3 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .container import (
    RunManifest,
    config_from_dict,
    config_hash,
    manifest_path,
    read_sweep,
    write_diagram,
    write_sweep,
)
from .integrate import Branch, IntegrationConfig
from .models import (
    ModelKind,
    ModelSpec,
    Transform,
    classify_equilibrium,
    equilibria,
)
from .render import build_colormap, render_diagram, render_grid, write_image, write_sidecar
from .sweep import CellClass, SweepConfig, default_workers, evaluate_points, refine_boundary, refine_segment, run_sweep
from .symbolic import KneadingConfig, Mode
from .theory import ReturnMapParams, diagram_sweep, map1d_samples, scalability_check

log = logging.getLogger("saddlefocus")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
FLAG_TOL = 1e-8


class UsageError(Exception):
    pass


class NumericalError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- parsing helpers ----------------------------------------------------------------

def _pair(text: str, kind=float, sep=":"):
    parts = str(text).replace(",", sep).split(sep)
    if len(parts) != 2:
        raise UsageError(f"expected two values separated by '{sep}', got {text!r}")
    try:
        return kind(parts[0]), kind(parts[1])
    except ValueError:
        raise UsageError(f"cannot parse {text!r}") from None


def _res(text: str):
    t = str(text).lower().replace("x", ":")
    if ":" not in t and "," not in t:
        t = f"{t}:{t}"
    return _pair(t, int)


def read_config_file(path) -> dict:
    """Flat ``key=value`` file; '#' starts a comment; keys use the flag names."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


SWEEP_KEYS = ("model", "transform", "u_range", "v_range", "res", "window", "mode", "branch",
              "dt", "max_time", "q", "delta", "esc_bound", "refine_extrema", "stall_tol",
              "seed", "workers", "out", "img")


def _merged(args) -> dict:
    vals = {}
    if getattr(args, "config", None):
        vals.update(read_config_file(args.config))
        unknown = set(vals) - set(SWEEP_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for k in SWEEP_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            vals[k] = v
    return vals


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def build_sweep_config(vals: dict) -> SweepConfig:
    """Resolve merged flag/config values into a validated SweepConfig."""
    try:
        model = ModelKind.parse(vals.get("model", "chua"))
        transform = Transform.parse(vals.get("transform", "identity"))
        if transform is Transform.CHUA_POLAR and model is not ModelKind.CHUA:
            raise UsageError("the polar transform belongs to the chua model")
        if transform is Transform.ACST_AFFINE and model is not ModelKind.ACST:
            raise UsageError("the affine transform belongs to the acst model")
        for key in ("u_range", "v_range", "res"):
            if key not in vals:
                raise UsageError(f"missing required setting {key.replace('_', '-')}")
        mode = Mode.parse(vals.get("mode", "full"))
        if "window" in vals:
            i, j = _pair(vals["window"], int)
        elif mode is Mode.DCP:
            i, j = 601, 1000
        else:
            i, j = 1, 10
        enc = KneadingConfig(i, j, float(vals.get("q", 0.5)), mode)
        integ_kw = {"max_symbols": j}
        for key in ("dt", "max_time", "delta", "esc_bound", "stall_tol"):
            if key in vals:
                integ_kw[key] = float(vals[key])
        if "refine_extrema" in vals:
            integ_kw["refine_extrema"] = _bool(vals["refine_extrema"])
        integ = IntegrationConfig(**integ_kw)
        return SweepConfig(model, transform, _pair(vals["u_range"]), _pair(vals["v_range"]),
                           _res(vals["res"]), enc, integ, Branch.parse(vals.get("branch", "gamma1")))
    except UsageError:
        raise
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _workers(vals) -> int:
    if vals.get("workers") is not None:
        n = int(vals["workers"])
        if n < 1:
            raise UsageError("--workers must be >= 1")
        return n
    try:
        return default_workers()
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- commands -----------------------------------------------------------------------

def _flags(report) -> list[str]:
    flags = []
    if report.sigma1 is not None and abs(report.sigma1) < FLAG_TOL:
        flags.append("NSF")
    if report.sigma2 is not None and abs(report.sigma2) < FLAG_TOL:
        flags.append("NDSF")
    return flags


def cmd_models_info(args) -> int:
    try:
        m = ModelSpec(ModelKind.parse(args.model), args.a, args.b)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    reports = []
    for p in equilibria(m):
        r = classify_equilibrium(m, p)
        d = r.as_dict()
        d["flags"] = _flags(r)
        reports.append(d)
    if args.json:
        print(json.dumps({"model": m.kind.name.lower(), "a": m.a, "b": m.b,
                          "equilibria": reports}, indent=2, sort_keys=True))
        return EXIT_OK
    print(f"{m.kind.name.lower()}  a={m.a:g}  b={m.b:g}")
    for d in reports:
        loc = ", ".join(f"{v:g}" for v in d["location"])
        ev = ", ".join(f"{re:.6g}{im:+.6g}j" if im else f"{re:.6g}" for re, im in d["eigenvalues"])
        print(f"  ({loc}): {d['topo_class']}")
        print(f"    eigenvalues: {ev}")
        if d["nu"] is not None:
            print(f"    nu={d['nu']:.6g}  sigma1={d['sigma1']:.6g}  sigma2={d['sigma2']:.6g}")
        if d["flags"]:
            print(f"    flags: {' '.join(d['flags'])}")
    return EXIT_OK


def _write_outputs(grid, out, img, seed):
    h = config_hash(grid.config)
    if out:
        write_sweep(grid, out)
        RunManifest.for_grid(grid).write(manifest_path(out))
    if img:
        cmap = build_colormap(seed)
        write_image(render_grid(grid, cmap), img)
        enc = grid.config.encoding
        write_sidecar(img, {"config_hash": h, "seed": seed, "window": f"{enc.i}:{enc.j}",
                            "mode": enc.mode.name.lower(), "tool_version": __version__})
    return h


def cmd_sweep(args) -> int:
    vals = _merged(args)
    cfg = build_sweep_config(vals)
    workers = _workers(vals)
    out, img = vals.get("out"), vals.get("img")
    if not out and not img:
        raise UsageError("nothing to write: give --out and/or --img")
    if img and Path(img).suffix.lower() not in (".ppm", ".png"):
        raise UsageError("--img must end in .ppm or .png")
    seed = int(vals.get("seed", 42))
    if seed < 0:
        raise UsageError("--seed must be unsigned")
    for p in (out, img):
        if p and not Path(p).resolve().parent.is_dir():
            raise OSError(f"output directory for {p} does not exist")
    grid = run_sweep(cfg, workers=workers)
    h = _write_outputs(grid, out, img, seed)
    counts = {k: v for k, v in grid.counts().items() if v}
    print(f"sweep {cfg.resolution[0]}x{cfg.resolution[1]} done in {grid.wall_time:.2f}s "
          f"on {workers} worker(s); config {h}; classes {counts}")
    return EXIT_OK if grid.complete else EXIT_NUMERIC


def _theory_params(args) -> ReturnMapParams:
    try:
        return ReturnMapParams(B0=args.B0, R=args.R, Omega0=args.Omega0, nu0=args.nu0,
                               phi2=args.phi2)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _csv_out(path, header, rows):
    if path:
        import io

        from ._fileio import atomic_write

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        atomic_write(Path(path), buf.getvalue().encode())
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_theory(args) -> int:
    p = _theory_params(args)
    if args.what == "bars":
        mu = _pair(args.mu_range)
        nu = _pair(args.nu_range)
        try:
            d = diagram_sweep(args.code, mu, nu, _res(args.res), p, sign_rule=args.sign_rule,
                              keep_mu=not args.drop_mu)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if not args.out and not args.img:
            raise UsageError("nothing to write: give --out and/or --img")
        if args.out:
            write_diagram(d, args.out)
        if args.img:
            write_image(render_diagram(d), args.img)
        counts = np.bincount(d.regions.ravel(), minlength=3)
        print(f"code [{d.code_str}]: infeasible={counts[0]} z<0={counts[1]} z>0={counts[2]}")
        if counts[1] + counts[2] == 0:
            print("code infeasible on the whole grid", file=sys.stderr)
            return EXIT_NUMERIC
        return EXIT_OK
    if args.what == "ratios":
        try:
            rows = scalability_check(args.code, p, args.n_lo, args.n_hi, sign_rule=args.sign_rule,
                                     keep_mu=not args.drop_mu)
        except ValueError as exc:
            raise NumericalError(str(exc)) from None
        _csv_out(args.out, ["n", "width_ratio", "distance_ratio", "target"],
                 [(r.n, f"{r.width_ratio:.10g}", f"{r.distance_ratio:.10g}", f"{p.ratio:.10g}")
                  for r in rows])
        return EXIT_OK
    z, fz = map1d_samples(args.mu, p, args.z_lo, None, args.n, keep_mu=not args.drop_mu)
    _csv_out(args.out, ["z", "z_next"], [(f"{a:.12g}", f"{b:.12g}") for a, b in zip(z, fz)])
    return EXIT_OK


def _load_config_for_refine(args) -> SweepConfig:
    if args.data:
        man = manifest_path(args.data)
        if man.exists():
            return config_from_dict(RunManifest.read(man).config)
        log.warning("no manifest next to %s; using default integration settings", args.data)
        return read_sweep(args.data).config
    vals = _merged(args)
    vals.setdefault("res", "2:2")
    if args.near:
        # only the model settings matter when scanning around a point
        vals.setdefault("u_range", "0:1")
        vals.setdefault("v_range", "0:1")
    return build_sweep_config(vals)


def _grid_boundaries(data, cfg, every: bool):
    """Adjacent (along u) Ok cell pairs of a stored sweep whose K differ."""
    g = read_sweep(data, cfg.integration)
    ok = g.classes == CellClass.OK
    diff = ok[1:] & ok[:-1] & (g.values[1:] != g.values[:-1])
    pairs = [((p, q), (p + 1, q)) for p, q in zip(*np.nonzero(diff))]
    return pairs if every else pairs[:1]


def cmd_refine(args) -> int:
    cfg = _load_config_for_refine(args)
    try:
        if args.cells:
            a, b = args.cells.split("/") if "/" in args.cells else args.cells.split(";")
            pt = refine_boundary(cfg, _pair(a, int, ","), _pair(b, int, ","), tol=args.tol)
            points = [pt]
        elif args.near:
            u0, v0 = _pair(args.near, float, ",")
            du = args.span
            pa, pb = ((u0 - du, v0), (u0 + du, v0)) if args.axis == "u" else ((u0, v0 - du), (u0, v0 + du))
            t = np.linspace(0.0, 1.0, args.samples)
            us = pa[0] + t * (pb[0] - pa[0])
            vs = pa[1] + t * (pb[1] - pa[1])
            r = evaluate_points(cfg, us, vs)
            ok = r.classes == CellClass.OK
            points = []
            for k in range(len(t) - 1):
                if ok[k] and ok[k + 1] and r.values[k] != r.values[k + 1]:
                    points.append(refine_segment(cfg, (us[k], vs[k]), (us[k + 1], vs[k + 1]), tol=args.tol))
            if not points:
                raise NumericalError("no boundary")
            points.sort(key=lambda q: math.hypot(q.u - u0, q.v - v0))
            if not args.all:
                points = points[:1]
        elif args.data:
            points = [refine_boundary(cfg, a, b, tol=args.tol)
                      for a, b in _grid_boundaries(args.data, cfg, args.all)]
            if not points:
                raise NumericalError("no boundary")
        else:
            raise UsageError("give --cells or --near")
    except ValueError as exc:
        msg = str(exc)
        if "no boundary" in msg or "must be Ok" in msg:
            raise NumericalError(msg) from None
        raise UsageError(msg) from None
    rows = [{"u": q.u, "v": q.v, "width": q.width, "k_a": q.k_a, "k_b": q.k_b,
             "symbols_a": q.symbols_a, "symbols_b": q.symbols_b,
             "non_robust_probes": q.non_robust_probes} for q in points]
    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
    else:
        for q in rows:
            print(f"u={q['u']:.12f} v={q['v']:.12f} width={q['width']:.3g} "
                  f"{q['symbols_a']} | {q['symbols_b']}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def _add_sweep_flags(sp, required=False):
    sp.add_argument("--config", help="key=value file; flags override it")
    sp.add_argument("--model", choices=["chua", "acst"])
    sp.add_argument("--transform", choices=["identity", "polar", "chua-polar", "affine", "acst-affine"])
    sp.add_argument("--u-range", dest="u_range", metavar="LO:HI")
    sp.add_argument("--v-range", dest="v_range", metavar="LO:HI")
    sp.add_argument("--res", metavar="NUxNV")
    sp.add_argument("--window", metavar="I:J")
    sp.add_argument("--mode", choices=["full", "one-sided", "dcp"])
    sp.add_argument("--branch", choices=["gamma1", "gamma2"])
    sp.add_argument("--dt", type=float)
    sp.add_argument("--max-time", dest="max_time", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--workers", type=int, help="default: $CHAOS_WORKERS or all cores")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="saddlefocus", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    mi = sub.add_parser("models-info", help="equilibria, spectra and saddle quantities")
    mi.add_argument("--model", required=True)
    mi.add_argument("--a", type=float, required=True)
    mi.add_argument("--b", type=float, required=True)
    mi.add_argument("--json", action="store_true")
    mi.set_defaults(func=cmd_models_info)

    sw = sub.add_parser("sweep", help="biparametric kneading or DCP sweep")
    _add_sweep_flags(sw)
    sw.add_argument("--out", help="CSWP data file")
    sw.add_argument("--img", help="image file (.ppm or .png)")
    sw.add_argument("--seed", type=int, help="colormap seed (default 42)")
    sw.set_defaults(func=cmd_sweep)

    th = sub.add_parser("theory", help="return-map diagrams and ratios")
    th.add_argument("what", choices=["bars", "ratios", "map1d"])
    th.add_argument("--code", default="11")
    th.add_argument("--B0", type=float, default=0.8)
    th.add_argument("--R", type=float, default=1.0)
    th.add_argument("--Omega0", type=float, default=3.0)
    th.add_argument("--nu0", type=float, default=0.5)
    th.add_argument("--phi2", type=float, default=0.0)
    th.add_argument("--sign-rule", dest="sign_rule", default="phase",
                    choices=["phase", "alternating", "minus"])
    th.add_argument("--drop-mu", dest="drop_mu", action="store_true",
                    help="omit the small mu shift after the first pass")
    th.add_argument("--mu-range", dest="mu_range", default="1e-6:0.1")
    th.add_argument("--nu-range", dest="nu_range", default="0.02:0.98")
    th.add_argument("--res", default="600x300")
    th.add_argument("--n-lo", dest="n_lo", type=int, default=6)
    th.add_argument("--n-hi", dest="n_hi", type=int, default=12)
    th.add_argument("--mu", type=float, default=0.0)
    th.add_argument("--z-lo", dest="z_lo", type=float, default=1e-6)
    th.add_argument("--n", type=int, default=2000)
    th.add_argument("--out")
    th.add_argument("--img")
    th.set_defaults(func=cmd_theory)

    rf = sub.add_parser("refine", help="bisect a kneading boundary")
    rf.add_argument("--data", help="CSWP file whose config (manifest) is used")
    _add_sweep_flags(rf)
    rf.add_argument("--cells", metavar="P,Q/P2,Q2")
    rf.add_argument("--near", metavar="U,V")
    rf.add_argument("--axis", choices=["u", "v"], default="u")
    rf.add_argument("--span", type=float, default=0.005)
    rf.add_argument("--samples", type=int, default=21)
    rf.add_argument("--tol", type=float, default=1e-9)
    rf.add_argument("--all", action="store_true", help="refine every boundary found, not just the nearest or first")
    rf.add_argument("--json", action="store_true")
    rf.set_defaults(func=cmd_refine)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"saddlefocus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, FloatingPointError, ArithmeticError) as exc:
        print(f"saddlefocus: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"saddlefocus: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
