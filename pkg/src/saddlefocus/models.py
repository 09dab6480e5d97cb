"""The two Z2-symmetric 3D models, their equilibria and spectra.

Two systems are supported:

* ``ModelKind.CHUA``: smooth Chua circuit with cubic nonlinearity,
  ``x' = a (y + x/6 - x^3/6), y' = x - y + z, z' = -b y``.
* ``ModelKind.ACST``: cubic Arneodo-Coullet-Spiegel-Tresser normal form,
  ``x' = y, y' = z, z' = -b z - y + a x (1 - x^2)``.

Both are odd in the state, so every trajectory has a mirror image under
``s -> -s``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k

__all__ = [
    "ModelKind",
    "ModelSpec",
    "TopoClass",
    "EquilibriumReport",
    "Transform",
    "Curve",
    "VerticalLine",
    "vector_field",
    "jacobian",
    "equilibria",
    "spectrum",
    "classify_equilibrium",
    "analytic_curve",
    "param_transform",
    "inverse_param_transform",
]

ZERO_TOL = 1e-9


class ModelKind(enum.IntEnum):
    CHUA = _k.CHUA
    ACST = _k.ACST

    @classmethod
    def parse(cls, name: "str | ModelKind") -> "ModelKind":
        if isinstance(name, ModelKind):
            return name
        try:
            return {"chua": cls.CHUA, "acst": cls.ACST}[str(name).lower()]
        except KeyError:
            raise ValueError(f"unknown model {name!r}; expected 'chua' or 'acst'") from None


class Transform(enum.IntEnum):
    IDENTITY = _k.IDENTITY
    CHUA_POLAR = _k.CHUA_POLAR
    ACST_AFFINE = _k.ACST_AFFINE

    @classmethod
    def parse(cls, name: "str | Transform") -> "Transform":
        if isinstance(name, Transform):
            return name
        table = {"identity": cls.IDENTITY, "polar": cls.CHUA_POLAR,
                 "chua-polar": cls.CHUA_POLAR, "affine": cls.ACST_AFFINE,
                 "acst-affine": cls.ACST_AFFINE}
        try:
            return table[str(name).lower()]
        except KeyError:
            raise ValueError(f"unknown transform {name!r}") from None


class TopoClass(enum.Enum):
    STABLE_FOCUS_NODE = "stable-focus-node"
    SADDLE_FOCUS_21 = "saddle-focus-(2,1)"
    SADDLE_FOCUS_12 = "saddle-focus-(1,2)"
    SADDLE_21 = "saddle-(2,1)"
    OTHER = "other"


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("model parameters must be finite")

    def check_positive(self) -> "ModelSpec":
        """Raise unless both parameters are positive (required for sweeps)."""
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"parameters must be positive, got a={self.a}, b={self.b}")
        return self


@dataclass
class EquilibriumReport:
    """Spectrum and saddle quantities of one equilibrium.

    ``nu``, ``sigma1`` and ``sigma2`` are filled for a (2,1) saddle-focus
    (one positive real exponent ``lam``, pair ``-rho +- i omega`` with
    ``rho > 0``) and for a real (2,1) saddle, where the leading stable
    exponent takes the place of ``-rho`` in ``nu`` and ``sigma1`` and
    ``sigma2`` is the divergence. Otherwise they are ``None``.
    """
    location: np.ndarray
    eigenvalues: np.ndarray
    topo_class: TopoClass
    lam: float | None = None
    rho: float | None = None
    omega: float | None = None
    nu: float | None = None
    sigma1: float | None = None
    sigma2: float | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "location": [float(v) for v in self.location],
            "eigenvalues": [[float(e.real), float(e.imag)] for e in self.eigenvalues],
            "topo_class": self.topo_class.value,
            "lambda": self.lam,
            "rho": self.rho,
            "omega": self.omega,
            "nu": self.nu,
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
        }


def _state(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (3,):
        raise ValueError(f"state must be a 3-vector, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("non-finite state")
    return s


def vector_field(m: ModelSpec, s) -> np.ndarray:
    x, y, z = _state(s)
    return np.array(_k.rhs(int(m.kind), m.a, m.b, x, y, z))


def jacobian(m: ModelSpec, s) -> np.ndarray:
    x, y, z = _state(s)
    return _k.jac(int(m.kind), m.a, m.b, x, y, z)


def equilibria(m: ModelSpec) -> list[np.ndarray]:
    """The origin and the symmetric pair.

    For Chua the pair is (-1, 0, 1), (1, 0, -1); for ACST it is (+-1, 0, 0).
    """
    if m.kind == ModelKind.CHUA:
        pts = [(0.0, 0.0, 0.0), (-1.0, 0.0, 1.0), (1.0, 0.0, -1.0)]
    else:
        pts = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (-1.0, 0.0, 0.0)]
    return [np.array(p) for p in pts]


def spectrum(mat) -> np.ndarray:
    """Eigenvalues of a 3x3 real matrix through its characteristic cubic."""
    mat = np.asarray(mat, dtype=float)
    c1, c2, c3 = _k.char_poly(mat)
    re, im = _k.cubic_roots(c1, c2, c3)
    return re + 1j * im


def _classify(ev: np.ndarray) -> TopoClass:
    re = np.where(np.abs(ev.real) < ZERO_TOL, 0.0, ev.real)
    complex_pair = np.abs(ev.imag) > ZERO_TOL
    if np.any(re == 0.0):
        return TopoClass.OTHER
    if np.all(re < 0):
        return TopoClass.STABLE_FOCUS_NODE
    n_pos = int(np.sum(re > 0))
    if complex_pair.any():
        real_idx = int(np.flatnonzero(~complex_pair)[0])
        if n_pos == 1 and re[real_idx] > 0:
            return TopoClass.SADDLE_FOCUS_21
        if n_pos == 2 and re[real_idx] < 0:
            return TopoClass.SADDLE_FOCUS_12
        return TopoClass.OTHER
    if n_pos == 1:
        return TopoClass.SADDLE_21
    return TopoClass.OTHER


def classify_equilibrium(m: ModelSpec, p, residual_tol: float = 1e-8) -> EquilibriumReport:
    p = _state(p)
    res = np.max(np.abs(vector_field(m, p)))
    if res >= residual_tol:
        raise ValueError(f"not an equilibrium (residual {res:.3e})")
    ev = spectrum(jacobian(m, p))
    topo = _classify(ev)
    report = EquilibriumReport(location=p, eigenvalues=ev, topo_class=topo)
    if topo is TopoClass.SADDLE_FOCUS_21:
        real_idx = int(np.flatnonzero(np.abs(ev.imag) <= ZERO_TOL)[0])
        pair = ev[[k for k in range(3) if k != real_idx]]
        lam = float(ev[real_idx].real)
        rho = float(-pair[0].real)
        report.lam = lam
        report.rho = rho
        report.omega = float(abs(pair[0].imag))
        report.nu = rho / lam
        report.sigma1 = lam - rho
        report.sigma2 = lam - 2.0 * rho
    elif topo is TopoClass.SADDLE_21:
        # real saddle: saddle value uses the leading stable exponent,
        # sigma2 stays the divergence
        ev_r = np.sort(ev.real)[::-1]
        lam, lead, other = float(ev_r[0]), float(ev_r[1]), float(ev_r[2])
        report.lam = lam
        report.nu = -lead / lam
        report.sigma1 = lam + lead
        report.sigma2 = lam + lead + other
    return report


# -- analytic bifurcation curves of the Chua origin -------------------------

class Curve(enum.Enum):
    NSF = "nsf"
    NDSF = "ndsf"
    NU_EQUALS_XI = "nu-xi"


@dataclass(frozen=True)
class VerticalLine:
    """A curve that is the line ``a = const`` in the (a, b) plane."""
    a: float


def analytic_curve(kind, which: "Curve | str", a: float | None = None, xi: float | None = None):
    """b-value of a Chua origin bifurcation curve at ``a``.

    ``NSF`` is the neutral saddle-focus (saddle value zero, nu = 1),
    ``NDSF`` the zero-divergence line ``a = 6`` (nu = 1/2, returned as a
    :class:`VerticalLine`), and ``NU_EQUALS_XI`` the level set nu = xi.
    """
    if ModelKind.parse(kind) != ModelKind.CHUA:
        raise ValueError("analytic curves are only available for the Chua model")
    which = Curve(which)
    if which is Curve.NDSF:
        return VerticalLine(6.0)
    if a is None:
        raise ValueError("a is required")
    if which is Curve.NSF:
        if a == 3.0:
            raise ValueError("curve undefined here (pole at a = 3)")
        return (a * a - 33.0 * a + 36.0) * (a - 6.0) / (36.0 * (3.0 - a))
    if xi is None or not 0.0 < xi < 1.0 or xi == 0.5:
        raise ValueError("xi must lie in (0, 1) and differ from 1/2")
    if a == 3.0 or a * xi == 3.0:
        raise ValueError(f"curve undefined here (asymptote a = {3.0 / xi:g})")
    num = 7.0 * a * (a - 6.0) / 12.0 - xi * (a - 6.0) ** 3 / (36.0 * (1.0 - 2.0 * xi) ** 2)
    return num / (a * xi - 3.0)


def nu_xi_asymptote(xi: float) -> VerticalLine:
    return VerticalLine(3.0 / xi)


# -- parameter transforms ----------------------------------------------------

def param_transform(t: "Transform | str", u, v):
    """Map sweep coordinates (u, v) to model parameters (a, b).

    ``CHUA_POLAR`` takes (alpha, L) about the tip (1.8623, 1.8743);
    ``ACST_AFFINE`` takes (c, d). Accepts scalars or arrays.
    """
    t = Transform.parse(t)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if t is Transform.CHUA_POLAR:
        a, b = _k.POLAR_TIP_A + v * np.cos(u), _k.POLAR_TIP_B + v * np.sin(u)
    elif t is Transform.ACST_AFFINE:
        a, b = 0.24 + 1.76 * u + 0.55 * v, 1.24 * u + 0.81 * v
    else:
        a, b = u, v
    if a.ndim == 0:
        return float(a), float(b)
    return a, b


def inverse_param_transform(t: "Transform | str", a, b):
    t = Transform.parse(t)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if t is Transform.CHUA_POLAR:
        da, db = a - _k.POLAR_TIP_A, b - _k.POLAR_TIP_B
        u, v = np.arctan2(db, da), np.hypot(da, db)
    elif t is Transform.ACST_AFFINE:
        det = 1.76 * 0.81 - 0.55 * 1.24
        da = a - 0.24
        u = (0.81 * da - 0.55 * b) / det
        v = (-1.24 * da + 1.76 * b) / det
    else:
        u, v = a, b
    if u.ndim == 0:
        return float(u), float(v)
    return u, v
