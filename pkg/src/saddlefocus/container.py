"""Binary sweep container (``CSWP``) and run manifests.

Layout, all little-endian::

    magic "CSWP" | version u16 | model u8 | transform u8 | mode u8 | branch u8
    nu u32 | nv u32 | u_lo u_hi v_lo v_hi f64 | i u32 | j u32 | q f64 | dt f64
    [extension: length u32 + UTF-8 JSON, only when model == 255]
    nu*nv f64 values (row-major, index p*nv + q)
    nu*nv u8 classes
    [DCP mode only: nu*nv u32 codes]

Branch is stored as 1 (Gamma1) or 2 (Gamma2). Model id 255 marks a
theory diagram; its extension block carries the code string and the
return-map constants.
"""
from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from ._fileio import atomic_write
from .integrate import Branch, IntegrationConfig
from .models import ModelKind, Transform
from .sweep import SweepConfig, SweepGrid
from .symbolic import KneadingConfig, Mode

__all__ = [
    "MAGIC",
    "VERSION",
    "THEORY_MODEL_ID",
    "ContainerHeader",
    "write_sweep",
    "read_sweep",
    "write_diagram",
    "read_container",
    "config_to_dict",
    "config_from_dict",
    "config_hash",
    "RunManifest",
]

MAGIC = b"CSWP"
VERSION = 1
THEORY_MODEL_ID = 255
_HEADER = struct.Struct("<4sHBBBBII4dIIdd")


@dataclass
class ContainerHeader:
    version: int
    model: int
    transform: int
    mode: int
    branch: int
    nu: int
    nv: int
    u_range: tuple[float, float]
    v_range: tuple[float, float]
    i: int
    j: int
    q: float
    dt: float
    extension: dict | None = None


@dataclass
class Container:
    header: ContainerHeader
    values: np.ndarray
    classes: np.ndarray
    codes: np.ndarray | None = None


def _branch_id(b: Branch) -> int:
    return 1 if Branch.parse(b) is Branch.GAMMA1 else 2


def _pack(h: ContainerHeader, values, classes, codes=None) -> bytes:
    head = _HEADER.pack(MAGIC, h.version, h.model, h.transform, h.mode, h.branch,
                        h.nu, h.nv, h.u_range[0], h.u_range[1], h.v_range[0],
                        h.v_range[1], h.i, h.j, h.q, h.dt)
    parts = [head]
    if h.model == THEORY_MODEL_ID:
        ext = json.dumps(h.extension or {}, sort_keys=True).encode()
        parts.append(struct.pack("<I", len(ext)) + ext)
    parts.append(np.ascontiguousarray(values, dtype="<f8").tobytes())
    parts.append(np.ascontiguousarray(classes, dtype=np.uint8).tobytes())
    if codes is not None:
        parts.append(np.ascontiguousarray(codes, dtype="<u4").tobytes())
    return b"".join(parts)


def write_sweep(grid: SweepGrid, path) -> Path:
    cfg = grid.config
    nu, nv = cfg.resolution
    h = ContainerHeader(VERSION, int(cfg.model), int(cfg.transform), int(cfg.encoding.mode),
                        _branch_id(cfg.branch), nu, nv, cfg.u_range, cfg.v_range,
                        cfg.encoding.i, cfg.encoding.j, cfg.encoding.q, cfg.integration.dt)
    codes = grid.codes if cfg.encoding.mode is Mode.DCP else None
    if codes is None and cfg.encoding.mode is Mode.DCP:
        codes = np.zeros((nu, nv), dtype=np.uint32)
    path = Path(path)
    atomic_write(path, _pack(h, grid.values, grid.classes, codes))
    return path


def write_diagram(diagram, path) -> Path:
    regions = np.asarray(diagram.regions)
    n_mu, n_nu = regions.shape
    p = diagram.params
    ext = {"code": diagram.code_str, "B0": p.B0, "R": p.R, "Omega0": p.Omega0,
           "phi2": p.phi2, "log_mu": bool(diagram.log_mu)}
    h = ContainerHeader(VERSION, THEORY_MODEL_ID, 0, 0, 0, n_mu, n_nu,
                        (float(diagram.mu[0]), float(diagram.mu[-1])),
                        (float(diagram.nu0[0]), float(diagram.nu0[-1])),
                        1, len(diagram.code), 0.5, 0.0, ext)
    path = Path(path)
    atomic_write(path, _pack(h, regions.astype(float), regions.astype(np.uint8)))
    return path


def read_container(path) -> Container:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size or data[:4] != MAGIC:
        raise ValueError(f"{path}: not a CSWP container")
    f = _HEADER.unpack_from(data)
    h = ContainerHeader(f[1], f[2], f[3], f[4], f[5], f[6], f[7], (f[8], f[9]),
                        (f[10], f[11]), f[12], f[13], f[14], f[15])
    if h.version != VERSION:
        raise ValueError(f"{path}: unsupported container version {h.version}")
    pos = _HEADER.size
    if h.model == THEORY_MODEL_ID:
        (n,) = struct.unpack_from("<I", data, pos)
        h.extension = json.loads(data[pos + 4:pos + 4 + n].decode())
        pos += 4 + n
    cells = h.nu * h.nv
    need = pos + cells * 9 + (cells * 4 if h.mode == Mode.DCP and h.model != THEORY_MODEL_ID else 0)
    if len(data) != need:
        raise ValueError(f"{path}: truncated or oversized container ({len(data)} != {need} bytes)")
    values = np.frombuffer(data, "<f8", cells, pos).reshape(h.nu, h.nv).astype(float)
    pos += cells * 8
    classes = np.frombuffer(data, np.uint8, cells, pos).reshape(h.nu, h.nv).copy()
    pos += cells
    codes = None
    if h.mode == Mode.DCP and h.model != THEORY_MODEL_ID:
        codes = np.frombuffer(data, "<u4", cells, pos).reshape(h.nu, h.nv).astype(np.uint32)
    return Container(h, values, classes, codes)


def read_sweep(path, integration: IntegrationConfig | None = None) -> SweepGrid:
    """Load a sweep; settings not stored in the header come from ``integration``."""
    c = read_container(path)
    h = c.header
    if h.model == THEORY_MODEL_ID:
        raise ValueError(f"{path}: holds a theory diagram, not a sweep")
    integ = integration or IntegrationConfig()
    integ = IntegrationConfig(**{**asdict(integ), "dt": h.dt, "max_symbols": max(integ.max_symbols, h.j)})
    cfg = SweepConfig(ModelKind(h.model), Transform(h.transform), h.u_range, h.v_range,
                      (h.nu, h.nv), KneadingConfig(h.i, h.j, h.q, Mode(h.mode)), integ,
                      Branch.GAMMA1 if h.branch == 1 else Branch.GAMMA2)
    lz = None
    if c.codes is not None:
        lz = np.zeros(c.codes.shape)
    return SweepGrid(cfg, c.values, c.classes, c.codes, lz)


# -- configs and manifests --------------------------------------------------------

def config_to_dict(cfg: SweepConfig) -> dict:
    return {
        "model": cfg.model.name.lower(),
        "transform": cfg.transform.name.lower(),
        "u_range": list(cfg.u_range),
        "v_range": list(cfg.v_range),
        "resolution": list(cfg.resolution),
        "encoding": {"i": cfg.encoding.i, "j": cfg.encoding.j, "q": cfg.encoding.q,
                     "mode": cfg.encoding.mode.name.lower()},
        "integration": asdict(cfg.integration),
        "branch": cfg.branch.name.lower(),
    }


def config_from_dict(d: dict) -> SweepConfig:
    enc = d["encoding"]
    return SweepConfig(
        ModelKind.parse(d["model"]),
        {"identity": Transform.IDENTITY, "chua_polar": Transform.CHUA_POLAR,
         "acst_affine": Transform.ACST_AFFINE}[d["transform"]],
        tuple(d["u_range"]), tuple(d["v_range"]), tuple(d["resolution"]),
        KneadingConfig(enc["i"], enc["j"], enc["q"], Mode[enc["mode"].upper()]),
        IntegrationConfig(**d["integration"]),
        Branch[d["branch"].upper()],
    )


def config_hash(cfg: SweepConfig) -> str:
    """64-bit BLAKE2b digest (hex) of the canonical JSON form of ``cfg``."""
    text = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    wall_time: float
    worker_count: int
    config: dict
    created: str = ""

    @classmethod
    def for_grid(cls, grid: SweepGrid) -> "RunManifest":
        return cls(config_hash(grid.config), __version__, round(grid.wall_time, 6),
                   grid.workers, config_to_dict(grid.config),
                   time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()))

    def write(self, path) -> Path:
        path = Path(path)
        atomic_write(path, (json.dumps(asdict(self), indent=2, sort_keys=True) + "\n").encode())
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def manifest_path(data_path) -> Path:
    return Path(str(data_path) + ".manifest.json")
