"""Truncated return maps near a Shilnikov saddle-focus and their (mu, nu0) diagrams.

Only the dominant terms are kept. A pass through the cross-section with
``z > 0`` uses the map ``T``, a pass with ``z < 0`` its mirror ``T'``.
For a homoclinic code ``[1 a1 a2 ... a_{l-1}]`` the separatrix starts at
``z0 = mu`` and ``a_k`` is the side of ``z_{k-1}``; the code's region in
parameter space is where every iterate has the demanded sign, split by the
sign of the last iterate ``z_{l-1}``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ReturnMapParams",
    "OutsideValidityWarning",
    "local_map_T0",
    "map_1d",
    "map_2d",
    "primary_roots",
    "parse_code",
    "iterate_code",
    "IterateResult",
    "DiagramGrid",
    "diagram_sweep",
    "region_intervals",
    "scalability_check",
    "envelope_derivative",
    "tip_curve",
    "INFEASIBLE",
    "FEASIBLE_NEG",
    "FEASIBLE_POS",
]

INFEASIBLE = 0
FEASIBLE_NEG = 1    # all signs as demanded and z_{l-1} < 0
FEASIBLE_POS = 2    # all signs as demanded and z_{l-1} >= 0

SIGN_RULES = ("phase", "alternating", "minus")


class OutsideValidityWarning(UserWarning):
    """A root lies outside the cross-section cylinder (mu >= R)."""


@dataclass(frozen=True)
class ReturnMapParams:
    B0: float
    R: float = 1.0
    Omega0: float = 3.0
    nu0: float = 0.5
    phi2: float = 0.0
    A0: float = 1.0
    phi1: float = 0.0
    a1: float = 0.0

    def __post_init__(self):
        vals = (self.B0, self.R, self.Omega0, self.nu0, self.phi2, self.A0, self.phi1, self.a1)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("return-map parameters must be finite")
        if self.B0 == 0:
            raise ValueError("B0 must be non-zero")
        if not self.R > 0 or not self.Omega0 > 0:
            raise ValueError("R and Omega0 must be positive")
        if not 0.0 < self.nu0 < 1.0:
            raise ValueError("nu0 must lie in (0, 1)")

    def with_nu0(self, nu0) -> "ReturnMapParams":
        return ReturnMapParams(self.B0, self.R, self.Omega0, nu0, self.phi2,
                               self.A0, self.phi1, self.a1)

    @property
    def ratio(self) -> float:
        """Scaling ratio exp(-2 pi / Omega0) between consecutive structures."""
        return math.exp(-2.0 * math.pi / self.Omega0)


def _nonzero(z):
    z = np.asarray(z, dtype=float)
    if np.any(z == 0):
        raise ValueError("on stable manifold (z = 0)")
    return z


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def local_map_T0(phi0, z0, p: ReturnMapParams):
    """Passage near the saddle-focus: (phi0, z0) on the cylinder wall to (r, theta)."""
    z = np.abs(_nonzero(z0))
    if np.any(z > p.R):
        raise ValueError("|z0| must not exceed R")
    r = p.R * (z / p.R) ** p.nu0
    theta = np.asarray(phi0, dtype=float) + p.Omega0 * np.log(p.R / z)
    return _scalar(r), _scalar(theta)


def _sine_term(z, p: ReturnMapParams, phase=0.0):
    # B0 R^(1-nu0) |z|^nu0 sin(Omega0 ln|z| + phi2 - phase)
    az = np.abs(z)
    return p.B0 * p.R ** (1.0 - p.nu0) * az ** p.nu0 * np.sin(p.Omega0 * np.log(az) + p.phi2 - phase)


def map_1d(z, mu, p: ReturnMapParams, b_sign=None, keep_mu: bool = True):
    """One step of the z-only return map.

    For ``z > 0``: ``mu - B0 R^(1-nu0) z^nu0 sin(Omega0 ln z + phi2)``.
    For ``z < 0``: ``-mu + b_sign * B0 R^(1-nu0) (-z)^nu0 sin(Omega0 ln(-z) + phi2)``
    with ``b_sign = +1`` unless given. ``b_sign`` overrides the sign of the
    sine term on both sides; ``keep_mu=False`` drops the shift.
    """
    z = _nonzero(z)
    mu = np.asarray(mu, dtype=float)
    pos = z > 0
    side = np.where(pos, 1.0, -1.0)
    if b_sign is None:
        sgn = np.where(pos, -1.0, 1.0)
    else:
        sgn = np.asarray(b_sign, dtype=float)
    shift = side * mu if keep_mu else 0.0
    return _scalar(shift + sgn * _sine_term(z, p))


def map_2d(phi, z, mu, p: ReturnMapParams):
    """Dominant-term maps T (z > 0) and T' (z < 0) on (phi, z)."""
    z = _nonzero(z)
    phi = np.asarray(phi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    az = np.abs(z)
    amp_a = p.A0 * p.R ** (1.0 - p.nu0) * az ** p.nu0
    lg = p.Omega0 * np.log(az)
    cos_t = amp_a * np.cos(lg + p.phi1 - phi)
    sin_t = _sine_term(z, p, phase=phi)
    pos = z > 0
    phi_new = np.where(pos, p.a1 * mu + cos_t, math.pi + p.a1 * mu - cos_t)
    z_new = np.where(pos, mu - sin_t, -mu - sin_t)
    return _scalar(phi_new), _scalar(z_new)


def primary_roots(n: int, p: ReturnMapParams) -> tuple[float, float]:
    """Ends of the n-th primary interval where the sine factor is zero.

    mu1 = exp(-(2 n pi + phi2)/Omega0), mu2 = mu1 * exp(+-pi/Omega0) with
    the sign of B0.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    base = (-2.0 * n * math.pi - p.phi2) / p.Omega0
    mu1 = math.exp(base)
    mu2 = math.exp(base + math.copysign(math.pi, p.B0) / p.Omega0)
    if max(mu1, mu2) >= p.R:
        warnings.warn(f"primary roots for n={n} are outside local validity (mu >= R)",
                      OutsideValidityWarning, stacklevel=2)
    return mu1, mu2


def tip_curve(mu, p: ReturnMapParams):
    """nu0 = 1 - ln B0 / (ln|mu| - ln R), where bars of [11] terminate for B0 < 1."""
    mu = np.abs(np.asarray(mu, dtype=float))
    return _scalar(1.0 - math.log(abs(p.B0)) / (np.log(mu) - math.log(p.R)))


def envelope_derivative(mu, p: ReturnMapParams):
    """d/dmu of B0 R^(1-nu0) mu^nu0 sin(Omega0 ln mu + phi2) in amplitude-phase form."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("mu must be positive")
    hyp = math.hypot(p.nu0, p.Omega0)
    n2 = p.B0 * p.R ** (1.0 - p.nu0) * hyp
    theta0 = math.acos(p.nu0 / hyp)
    return _scalar(n2 / mu ** (1.0 - p.nu0) * np.sin(p.Omega0 * np.log(mu) + p.phi2 + theta0))


# -- codes ----------------------------------------------------------------------

def parse_code(code) -> tuple[int, ...]:
    if isinstance(code, str):
        s = code.strip().strip("[]")
        if not s or set(s) - {"0", "1"}:
            raise ValueError(f"invalid code {code!r}")
        bits = tuple(int(c) for c in s)
    else:
        bits = tuple(int(c) for c in code)
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"invalid code {code!r}")
    if len(bits) < 2 or bits[0] != 1:
        raise ValueError("a code must start with 1 and have length >= 2")
    return bits


def code_str(code) -> str:
    return "".join(str(b) for b in parse_code(code))


@dataclass
class IterateResult:
    """Iterates of a code's return-map system.

    ``z[k-1]`` is ``z_k`` (NaN once the code has become infeasible);
    ``failed_step`` is 0 for feasible points, otherwise the first ``k`` with
    ``sign(z_{k-1})`` different from the code symbol ``a_k``; ``degenerate``
    marks points where an intermediate iterate is exactly 0.
    """
    code: tuple[int, ...]
    mu: np.ndarray
    z: np.ndarray
    failed_step: np.ndarray
    degenerate: np.ndarray

    @property
    def feasible(self) -> np.ndarray:
        return self.failed_step == 0

    @property
    def last(self) -> np.ndarray:
        return self.z[-1]

    def region(self) -> np.ndarray:
        out = np.full(self.failed_step.shape, INFEASIBLE, dtype=np.uint8)
        ok = self.feasible & ~self.degenerate
        with np.errstate(invalid="ignore"):
            out[ok & (self.last < 0)] = FEASIBLE_NEG
            out[ok & (self.last >= 0)] = FEASIBLE_POS
        return out


def iterate_code(code, mu, p: ReturnMapParams, sign_rule: str = "phase",
                 keep_mu: bool = True, nu0=None) -> IterateResult:
    """Compose the per-pass maps demanded by ``code`` starting from ``z0 = mu``.

    ``sign_rule`` picks the sign of the sine term at each step:

    * ``"phase"``: ``-`` when the previous pass had ``z > 0`` (or is the
      initial loop), ``+`` after a pass with ``z < 0``; this follows the
      ``pi`` shift of the angle produced by ``T'``.
    * ``"alternating"``: ``-`` for every ``z > 0`` pass; for ``z < 0``
      passes the sign alternates ``-, +, -, ...`` over successive ones.
    * ``"minus"``: always ``-``.

    ``nu0`` optionally overrides ``p.nu0`` and may be an array broadcasting
    against ``mu``.
    """
    bits = parse_code(code)
    if sign_rule not in SIGN_RULES:
        raise ValueError(f"sign_rule must be one of {SIGN_RULES}")
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(p.nu0 if nu0 is None else nu0, dtype=float)
    if np.any((nu <= 0) | (nu >= 1)):
        raise ValueError("nu0 must lie in (0, 1)")
    mu, nu = np.broadcast_arrays(mu, nu)
    shape = mu.shape
    amp = p.B0 * p.R ** (1.0 - nu)
    n_steps = len(bits) - 1
    z = np.full((n_steps,) + shape, np.nan)
    failed = np.zeros(shape, dtype=np.int64)
    degenerate = np.zeros(shape, dtype=bool)
    alive = np.ones(shape, dtype=bool)
    cur = mu.copy()
    prev_neg = np.zeros(shape, dtype=bool)   # side of the pass before ``cur``
    n_neg = 0
    for k in range(1, n_steps + 1):
        want = bits[k]
        ok = (cur > 0) if want == 1 else (cur < 0)
        zero = alive & (cur == 0)
        if k > 1:
            degenerate |= zero
        newly = alive & ~ok
        failed[newly] = k
        alive &= ok
        if not alive.any():
            break
        side = 1.0 if want == 1 else -1.0
        if sign_rule == "phase":
            sgn = np.where(prev_neg, 1.0, -1.0)
        elif sign_rule == "alternating":
            if want == 1:
                sgn = -1.0
            else:
                sgn = -1.0 if n_neg % 2 == 0 else 1.0
                n_neg += 1
        else:
            sgn = -1.0
        az = np.where(alive, np.abs(cur), 1.0)
        term = amp * az ** nu * np.sin(p.Omega0 * np.log(az) + p.phi2)
        nxt = (side * mu if keep_mu else 0.0) + sgn * term
        nxt = np.where(alive, nxt, np.nan)
        z[k - 1] = nxt
        prev_neg = np.full(shape, want == 0)
        cur = nxt
    return IterateResult(bits, mu, z, failed, degenerate)


# -- diagrams -----------------------------------------------------------------

@dataclass
class DiagramGrid:
    """Region codes on a (mu, nu0) grid; ``regions[i, j]`` is at ``mu[i], nu0[j]``."""
    code: tuple[int, ...]
    mu: np.ndarray
    nu0: np.ndarray
    regions: np.ndarray
    params: ReturnMapParams
    log_mu: bool = True

    @property
    def code_str(self) -> str:
        return "".join(str(b) for b in self.code)


def mu_axis(mu_range, n: int, log_mu: bool = True) -> np.ndarray:
    lo, hi = (float(x) for x in mu_range)
    if not lo < hi:
        raise ValueError("mu_range needs lo < hi")
    if log_mu and lo * hi > 0:
        sgn = 1.0 if lo > 0 else -1.0
        a, b = sorted((abs(lo), abs(hi)))
        vals = np.exp(np.linspace(math.log(a), math.log(b), n))
        return np.sort(sgn * vals)
    return np.linspace(lo, hi, n)


def diagram_sweep(code, mu_range, nu0_range, resolution, p: ReturnMapParams,
                  log_mu: bool = True, sign_rule: str = "phase",
                  keep_mu: bool = True) -> DiagramGrid:
    """Classify every (mu, nu0) cell by the code's iterate signs."""
    bits = parse_code(code)
    n_mu, n_nu = (int(r) for r in resolution)
    if n_mu < 2 or n_nu < 2:
        raise ValueError("resolution must be >= 2 per axis")
    nlo, nhi = (float(x) for x in nu0_range)
    if not 0.0 < nlo < nhi < 1.0:
        raise ValueError("nu0 range must lie inside (0, 1) with lo < hi")
    log_mu = bool(log_mu and mu_range[0] * mu_range[1] > 0)
    mus = mu_axis(mu_range, n_mu, log_mu)
    nus = np.linspace(nlo, nhi, n_nu)
    with np.errstate(invalid="ignore", divide="ignore"):
        res = iterate_code(bits, mus[:, None], p, sign_rule, keep_mu, nu0=nus[None, :])
    return DiagramGrid(bits, mus, nus, res.region(), p, log_mu)


def _indicator(bits, mu, p, sign_rule, keep_mu):
    with np.errstate(invalid="ignore", divide="ignore"):
        return iterate_code(bits, mu, p, sign_rule, keep_mu).region() == FEASIBLE_NEG


def region_intervals(code, mu_lo: float, mu_hi: float, p: ReturnMapParams,
                     samples: int = 200_000, rtol: float = 1e-12,
                     sign_rule: str = "phase", keep_mu: bool = True):
    """Maximal mu-intervals in [mu_lo, mu_hi] where the code is feasible with z_{l-1} < 0.

    Ends are located by sampling ``samples`` log-spaced points and
    bisecting each indicator change to relative width ``rtol``. Returns an
    array of shape (m, 2) of (left, right) in ascending mu, plus a flag per
    interval marking widths below 1e-14 * mu (sub-resolution).
    """
    bits = parse_code(code)
    if not 0 < mu_lo < mu_hi and not mu_lo < mu_hi < 0:
        raise ValueError("interval search needs a same-sign mu range")
    sgn = 1.0 if mu_lo > 0 else -1.0
    a, b = sorted((abs(mu_lo), abs(mu_hi)))
    mags = np.exp(np.linspace(math.log(a), math.log(b), samples))
    mus = sgn * mags
    ind = _indicator(bits, mus, p, sign_rule, keep_mu)
    edges = np.flatnonzero(ind[1:] != ind[:-1])
    lo = mags[edges].copy()
    hi = mags[edges + 1].copy()
    ind_lo = ind[edges].copy()
    for _ in range(200):
        width = hi - lo
        if np.all(width <= rtol * lo):
            break
        mid = np.sqrt(lo * hi)
        mid = np.where((mid <= lo) | (mid >= hi), 0.5 * (lo + hi), mid)
        im = _indicator(bits, sgn * mid, p, sign_rule, keep_mu)
        same = im == ind_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    cross = 0.5 * (lo + hi)
    # assemble intervals in magnitude order; the magnitude axis is ascending
    ends = []
    start = a if ind[0] else None
    for c, rising in zip(cross, ~ind_lo):
        if rising:
            start = c
        else:
            if start is not None:
                ends.append((start, c))
            start = None
    if start is not None:
        ends.append((start, b))
    arr = np.array(ends, dtype=float).reshape(-1, 2)
    if sgn < 0:
        arr = -arr[::-1, ::-1]
    sub = np.abs(arr[:, 1] - arr[:, 0]) < 1e-14 * np.abs(arr).max(axis=1) if len(arr) else np.zeros(0, bool)
    return arr, sub


@dataclass
class RatioRow:
    n: int
    index: int
    width_ratio: float
    distance_ratio: float


def scalability_check(code, p: ReturnMapParams, n_lo: int, n_hi: int,
                      samples_per_period: int = 4000, sign_rule: str = "phase",
                      keep_mu: bool = True, sign: float = 1.0) -> list[RatioRow]:
    """Width and distance ratios of the code's intervals between consecutive periods.

    The mu-axis is cut into periods ``n`` of the primary sine factor
    (mu from ``exp(-(2(n+1/2) pi + phi2)/Omega0)`` up to
    ``exp(-(2(n-1/2) pi + phi2)/Omega0)``); interval ``k`` of period ``n+1``
    is compared with interval ``k`` of period ``n``. The distance of an
    interval is the gap to its neighbour towards smaller ``|mu|``.
    """
    bits = parse_code(code)
    if n_hi - n_lo < 2:
        raise ValueError("need at least three periods")
    def ln_edge(n):
        return (-2.0 * (n + 0.5) * math.pi - p.phi2) / p.Omega0

    lo_ln, hi_ln = ln_edge(n_hi + 1), ln_edge(n_lo - 1)
    samples = samples_per_period * (n_hi - n_lo + 3)
    rng = (math.exp(lo_ln), math.exp(hi_ln))
    if sign < 0:
        rng = (-rng[1], -rng[0])
    iv, _ = region_intervals(bits, rng[0], rng[1], p, samples=samples,
                             sign_rule=sign_rule, keep_mu=keep_mu)
    if len(iv) == 0:
        raise ValueError("insufficient data: no intervals found")
    mags = np.sort(np.abs(iv), axis=1)
    mags = mags[np.argsort(-mags[:, 1])]           # descending |mu|
    centers = np.sqrt(mags[:, 0] * mags[:, 1])
    period = np.floor(-(p.Omega0 * np.log(centers) + p.phi2) / (2.0 * math.pi) + 0.5).astype(int)
    gaps = np.append(mags[:-1, 0] - mags[1:, 1], np.nan)
    groups: dict[int, list[int]] = {}
    for idx, n in enumerate(period):
        groups.setdefault(int(n), []).append(idx)
    rows = []
    for n in range(n_lo, n_hi):
        g0, g1 = groups.get(n, []), groups.get(n + 1, [])
        if not g0 or len(g0) != len(g1):
            continue
        for k, (i0, i1) in enumerate(zip(g0, g1)):
            w0 = mags[i0, 1] - mags[i0, 0]
            w1 = mags[i1, 1] - mags[i1, 0]
            rows.append(RatioRow(n, k, w1 / w0, gaps[i1] / gaps[i0]))
    rows = [r for r in rows if math.isfinite(r.distance_ratio) and math.isfinite(r.width_ratio)]
    if len(rows) < 2 or len(iv) < 3:
        raise ValueError("insufficient data: fewer than 3 intervals found")
    return rows


def map1d_samples(mu: float, p: ReturnMapParams, z_lo: float = 1e-6, z_hi: float | None = None,
                  n: int = 2000, keep_mu: bool = True):
    """(z, map_1d(z, mu)) on a log grid of z > 0, for plotting the map graph."""
    z_hi = p.R if z_hi is None else z_hi
    if not 0 < z_lo < z_hi:
        raise ValueError("need 0 < z_lo < z_hi")
    z = np.exp(np.linspace(math.log(z_lo), math.log(z_hi), n))
    return z, np.asarray(map_1d(z, mu, p, keep_mu=keep_mu))
