"""Colour maps and raster output for sweep and diagram grids.

Images are ``(height, width, 3)`` uint8 arrays in display order: row 0 is
the top of the picture, i.e. the largest ``v``; column 0 is the smallest
``u``. The parameter origin therefore sits at the bottom-left corner.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._fileio import atomic_write
from .models import VerticalLine
from .sweep import DCP_CHAOS_BIT, CellClass, SweepGrid
from .symbolic import Mode

__all__ = [
    "Colormap",
    "Special",
    "build_colormap",
    "period_color_index",
    "render_grid",
    "render_diagram",
    "overlay_curves",
    "write_image",
    "read_ppm",
    "write_sidecar",
    "MAX_PIXELS",
]

MAX_PIXELS = 1 << 26
PERIOD_HASH = 2654435761   # Knuth's multiplicative hash constant


@dataclass(frozen=True)
class Colormap:
    """256 RGB entries: red falls 255 -> 0, blue rises 0 -> 255, green is seeded noise."""
    entries: np.ndarray
    seed: int

    def __getitem__(self, k):
        return self.entries[k]


def build_colormap(seed: int = 42) -> Colormap:
    """Green bytes come from ``random.Random(seed).getrandbits(8)`` (MT19937)."""
    if seed < 0:
        raise ValueError("seed must be unsigned")
    rng = random.Random(seed)
    k = np.arange(256)
    green = np.array([rng.getrandbits(8) for _ in range(256)])
    entries = np.stack([255 - k, green, k], axis=1).astype(np.uint8)
    entries.setflags(write=False)
    return Colormap(entries, int(seed))


@dataclass(frozen=True)
class Special:
    escape_color: tuple[int, int, int] = (255, 0, 0)
    timeout_color: tuple[int, int, int] = (0, 0, 0)
    unstarted_color: tuple[int, int, int] = (128, 128, 128)


def period_color_index(p) -> np.ndarray:
    """Colormap bin of a period: ``(p * 2654435761) mod 256``."""
    return (np.asarray(p, dtype=np.uint64) * np.uint64(PERIOD_HASH)) % np.uint64(256)


def _to_display(cells: np.ndarray) -> np.ndarray:
    # cells[p, q] with p along u and q along v -> image[row, col]
    return np.ascontiguousarray(np.flipud(np.swapaxes(cells, 0, 1)))


def render_grid(grid: SweepGrid, cmap: Colormap | None = None,
                special: Special | None = None) -> np.ndarray:
    cmap = cmap or build_colormap()
    special = special or Special()
    nu, nv = grid.values.shape
    if nu * nv > MAX_PIXELS:
        raise ValueError(f"grid of {nu}x{nv} exceeds the {MAX_PIXELS}-pixel limit")
    out = np.zeros((nu, nv, 3), dtype=np.uint8)
    cls = grid.classes
    usable = (cls == CellClass.OK) | (cls == CellClass.TRUNCATED)
    if grid.config.encoding.mode is Mode.DCP and grid.codes is not None:
        codes = grid.codes.astype(np.uint64)
        chaotic = (codes & np.uint64(DCP_CHAOS_BIT)) != 0
        periodic = usable & ~chaotic & (codes > 0)
        out[periodic] = cmap.entries[period_color_index(codes[periodic]).astype(int)]
        chaos = usable & chaotic
        lum = np.round(255.0 * (1.0 - np.clip(grid.lz_norm[chaos], 0.0, 1.0))).astype(np.uint8)
        out[chaos] = lum[:, None]
    else:
        k = np.clip(np.nan_to_num(grid.values[usable]), 0.0, 1.0)
        out[usable] = cmap.entries[np.floor(k * 255.999).astype(int)]
    out[cls == CellClass.ESCAPED] = special.escape_color
    out[(cls == CellClass.TIMED_OUT) | (cls == CellClass.INVALID)] = special.timeout_color
    out[cls == CellClass.UNSTARTED] = special.unstarted_color
    return _to_display(out)


DIAGRAM_COLORS = np.array([[255, 255, 255], [40, 90, 220], [250, 200, 60]], dtype=np.uint8)


def render_diagram(diagram, colors: np.ndarray = DIAGRAM_COLORS) -> np.ndarray:
    """(mu, nu0) region grid to an image; mu runs along x, nu0 upwards."""
    reg = np.asarray(diagram.regions)
    if reg.size > MAX_PIXELS:
        raise ValueError("diagram too large to render")
    return _to_display(colors[reg])


def overlay_curves(image: np.ndarray, curves, extent, color=(255, 255, 255)) -> np.ndarray:
    """Draw ``curves`` with 1-px strokes on a copy of ``image``.

    ``extent`` is ``(u_lo, u_hi, v_lo, v_hi)`` of the pixel centres. Each
    curve is a callable ``u -> v`` (NaN or exceptions mean "no point") or a
    :class:`VerticalLine`. Segments outside the image are clipped.
    """
    img = np.array(image, copy=True)
    h, w = img.shape[:2]
    u_lo, u_hi, v_lo, v_hi = (float(x) for x in extent)
    us = u_lo + np.arange(w) * (u_hi - u_lo) / (w - 1)
    for curve in curves:
        if isinstance(curve, VerticalLine):
            col = (curve.a - u_lo) / (u_hi - u_lo) * (w - 1)
            c = int(round(col))
            if 0 <= c < w and -0.5 <= col <= w - 0.5:
                img[:, c] = color
            continue
        rows = np.full(w, np.nan)
        for c, u in enumerate(us):
            try:
                v = float(curve(u))
            except (ValueError, ZeroDivisionError, OverflowError):
                continue
            if math.isfinite(v):
                rows[c] = (v_hi - v) / (v_hi - v_lo) * (h - 1)
        for c in range(w):
            r = rows[c]
            if math.isnan(r):
                continue
            # extend halfway to the neighbours so steep parts stay connected
            span = [r]
            for nb in (c - 1, c + 1):
                if 0 <= nb < w and not math.isnan(rows[nb]):
                    span.append(0.5 * (r + rows[nb]))
            top = max(0, int(math.floor(min(span) + 0.5)))
            bottom = min(h - 1, int(math.floor(max(span) + 0.5)))
            if top <= bottom:
                img[top:bottom + 1, c] = color
    return img


def _check_image(image) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError("image must be an (h, w, 3) uint8 array")
    return img


def ppm_bytes(image) -> bytes:
    img = _check_image(image)
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img).tobytes()


def write_image(image, path, fmt: str | None = None) -> Path:
    """Write PPM (P6) or PNG; the format defaults to the file suffix."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).upper()
    if fmt not in ("PPM", "PNG"):
        raise ValueError(f"unsupported image format {fmt!r}")
    img = _check_image(image)
    try:
        if fmt == "PPM":
            atomic_write(path, ppm_bytes(img))
        else:
            import io

            from PIL import Image

            buf = io.BytesIO()
            Image.fromarray(img, "RGB").save(buf, format="PNG")
            atomic_write(path, buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write image {path}: {exc}") from exc
    return path


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while end < len(data) and not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    pos += 1
    if tokens[0] != b"P6" or int(tokens[3]) != 255:
        raise ValueError(f"{path}: not an 8-bit P6 file")
    w, h = int(tokens[1]), int(tokens[2])
    body = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return body.reshape(h, w, 3).copy()


def write_sidecar(image_path, meta: dict) -> Path:
    """``<image>.meta.txt`` with one ``key=value`` line per entry, sorted by key."""
    path = Path(str(image_path) + ".meta.txt")
    text = "".join(f"{k}={meta[k]}\n" for k in sorted(meta))
    atomic_write(path, text.encode())
    return path
