"""Nopython kernels shared by the models, integration and sweep layers.

Everything here works on plain floats and integer ids so that it can be
called from inside numba loops. The Python-facing wrappers live in
:mod:`saddlefocus.models` and :mod:`saddlefocus.integrate`.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

CHUA = 0
ACST = 1

IDENTITY = 0
CHUA_POLAR = 1
ACST_AFFINE = 2

# termination codes written by ``integrate_kernel``
COMPLETED = 0
ESCAPED = 1
TIMED_OUT = 2
NO_UNSTABLE = 3

POLAR_TIP_A = 1.8623
POLAR_TIP_B = 1.8743


@njit(cache=True)
def rhs(model, a, b, x, y, z):
    if model == CHUA:
        return a * (y + x / 6.0 - x * x * x / 6.0), x - y + z, -b * y
    return y, z, -b * z - y + a * x * (1.0 - x * x)


@njit(cache=True)
def jac(model, a, b, x, y, z):
    out = np.zeros((3, 3))
    if model == CHUA:
        out[0, 0] = a * (1.0 / 6.0 - 0.5 * x * x)
        out[0, 1] = a
        out[1, 0] = 1.0
        out[1, 1] = -1.0
        out[1, 2] = 1.0
        out[2, 1] = -b
    else:
        out[0, 1] = 1.0
        out[1, 2] = 1.0
        out[2, 0] = a * (1.0 - 3.0 * x * x)
        out[2, 1] = -1.0
        out[2, 2] = -b
    return out


@njit(cache=True)
def transform_params(kind, u, v):
    if kind == CHUA_POLAR:
        return POLAR_TIP_A + v * math.cos(u), POLAR_TIP_B + v * math.sin(u)
    if kind == ACST_AFFINE:
        return 0.24 + 1.76 * u + 0.55 * v, 1.24 * u + 0.81 * v
    return u, v


@njit(cache=True)
def char_poly(m):
    """Coefficients (c1, c2, c3) of s^3 + c1 s^2 + c2 s + c3 = det(sI - m)."""
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    minors = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
              + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
              + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
    det = (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
           - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
           + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
    return -tr, minors, -det


@njit(cache=True)
def _polish(c1, c2, c3, r):
    # Newton on the monic cubic; stops when the step no longer shrinks
    for _ in range(8):
        p = ((r + c1) * r + c2) * r + c3
        dp = (3.0 * r + 2.0 * c1) * r + c2
        if dp == 0.0:
            break
        step = p / dp
        r -= step
        if abs(step) <= 1e-16 * max(1.0, abs(r)):
            break
    return r


@njit(cache=True)
def cubic_roots(c1, c2, c3):
    """Roots of s^3 + c1 s^2 + c2 s + c3 as (re[3], im[3]).

    One real root is found in closed form (Cardano or the trigonometric
    form), Newton-polished, then deflated; the remaining quadratic is
    solved directly. Real roots come first, sorted descending; a complex
    pair is returned as (re, +im), (re, -im) in slots 1 and 2.
    """
    re = np.zeros(3)
    im = np.zeros(3)
    shift = c1 / 3.0
    p = c2 - c1 * c1 / 3.0
    q = 2.0 * c1 * c1 * c1 / 27.0 - c1 * c2 / 3.0 + c3
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc >= 0.0:
        sq = math.sqrt(disc)
        u = np.cbrt(-q / 2.0 + sq)
        w = np.cbrt(-q / 2.0 - sq)
        r = u + w - shift
    else:
        rad = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * rad)
        arg = min(1.0, max(-1.0, arg))
        r = rad * math.cos(math.acos(arg) / 3.0) - shift
    r = _polish(c1, c2, c3, r)
    # deflate: s^2 + e1 s + e0
    e1 = c1 + r
    e0 = c2 + r * e1
    d = e1 * e1 - 4.0 * e0
    if d >= 0.0:
        sd = math.sqrt(d)
        # stable quadratic formula
        if e1 >= 0.0:
            t = -0.5 * (e1 + sd)
        else:
            t = -0.5 * (e1 - sd)
        if t != 0.0:
            r1 = t
            r2 = e0 / t
        else:
            r1 = 0.0
            r2 = -e1
        r1 = _polish(c1, c2, c3, r1)
        r2 = _polish(c1, c2, c3, r2)
        vals = np.array([r, r1, r2])
        vals = -np.sort(-vals)
        re[:] = vals
    else:
        re[0] = r
        re[1] = -0.5 * e1
        re[2] = -0.5 * e1
        im[1] = 0.5 * math.sqrt(-d)
        im[2] = -im[1]
    return re, im


@njit(cache=True)
def unstable_direction(model, a, b):
    """Unit eigenvector of the single positive real eigenvalue at the origin.

    Returns (ok, vx, vy, vz) with vx >= 0. ``ok`` is False when the
    spectrum does not have exactly one eigenvalue with positive real part
    that is real.
    """
    m = jac(model, a, b, 0.0, 0.0, 0.0)
    c1, c2, c3 = char_poly(m)
    re, im = cubic_roots(c1, c2, c3)
    npos = 0
    lam = 0.0
    for k in range(3):
        if re[k] > 1e-9:
            npos += 1
            if abs(im[k]) <= 1e-9:
                lam = re[k]
            else:
                npos += 10
    if npos != 1:
        return False, 0.0, 0.0, 0.0
    # null vector of (m - lam I) from the largest cross product of its rows
    r0 = m[0].copy()
    r1 = m[1].copy()
    r2 = m[2].copy()
    r0[0] -= lam
    r1[1] -= lam
    r2[2] -= lam
    best = -1.0
    vx = 0.0
    vy = 0.0
    vz = 0.0
    for pair in range(3):
        if pair == 0:
            p, s = r0, r1
        elif pair == 1:
            p, s = r0, r2
        else:
            p, s = r1, r2
        cx = p[1] * s[2] - p[2] * s[1]
        cy = p[2] * s[0] - p[0] * s[2]
        cz = p[0] * s[1] - p[1] * s[0]
        nrm = cx * cx + cy * cy + cz * cz
        if nrm > best:
            best = nrm
            vx, vy, vz = cx, cy, cz
    nrm = math.sqrt(best)
    if nrm == 0.0:
        return False, 0.0, 0.0, 0.0
    vx /= nrm
    vy /= nrm
    vz /= nrm
    if vx < 0.0 or (vx == 0.0 and (vy < 0.0 or (vy == 0.0 and vz < 0.0))):
        vx, vy, vz = -vx, -vy, -vz
    return True, vx, vy, vz


@njit(cache=True)
def rk4(model, a, b, x, y, z, dt):
    k1x, k1y, k1z = rhs(model, a, b, x, y, z)
    h = 0.5 * dt
    k2x, k2y, k2z = rhs(model, a, b, x + h * k1x, y + h * k1y, z + h * k1z)
    k3x, k3y, k3z = rhs(model, a, b, x + h * k2x, y + h * k2y, z + h * k2z)
    k4x, k4y, k4z = rhs(model, a, b, x + dt * k3x, y + dt * k3y, z + dt * k3z)
    s = dt / 6.0
    return (x + s * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            y + s * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
            z + s * (k1z + 2.0 * k2z + 2.0 * k3z + k4z))


@njit(cache=True)
def integrate_kernel(model, a, b, x, y, z, dt, max_steps, max_symbols,
                     esc_bound, threshold, refine, stall_tol, settle_fill,
                     stop_bit, out):
    """Step RK4 and write extremum symbols into ``out``.

    The run completes after ``max_symbols`` symbols, or right after the
    first symbol equal to ``stop_bit`` (pass -1 to disable).
    Returns (n_symbols, status, steps_taken).
    """
    n = 0
    x_prev2 = x
    x_prev = x
    have = 1
    for step in range(max_steps):
        k1x, k1y, k1z = rhs(model, a, b, x, y, z)
        if stall_tol > 0.0 and max(abs(k1x), abs(k1y), abs(k1z)) < stall_tol:
            # settled on an equilibrium: no further extrema can appear
            if settle_fill and abs(x) >= 0.5 * threshold:
                bit = 1 if x > 0.0 else 0
                while n < max_symbols:
                    out[n] = bit
                    n += 1
                return n, COMPLETED, step
            return n, TIMED_OUT, step
        h = 0.5 * dt
        k2x, k2y, k2z = rhs(model, a, b, x + h * k1x, y + h * k1y, z + h * k1z)
        k3x, k3y, k3z = rhs(model, a, b, x + h * k2x, y + h * k2y, z + h * k2z)
        k4x, k4y, k4z = rhs(model, a, b, x + dt * k3x, y + dt * k3y,
                            z + dt * k3z)
        s6 = dt / 6.0
        x = x + s6 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + s6 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        z = z + s6 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        nrm = max(abs(x), abs(y), abs(z))
        if not (nrm <= esc_bound):
            # also catches NaN
            return n, ESCAPED, step + 1
        if have == 1:
            have = 2
            x_prev2 = x_prev
            x_prev = x
            continue
        # triple (x_prev2, x_prev, x): test x_prev for an extremum
        is_max = x_prev > x_prev2 and x_prev >= x
        is_min = x_prev < x_prev2 and x_prev <= x
        if is_max or is_min:
            peak = x_prev
            if refine:
                curv = x - 2.0 * x_prev + x_prev2
                if curv != 0.0:
                    slope = x - x_prev2
                    peak = x_prev - slope * slope / (8.0 * curv)
            bit = -1
            if is_max and peak > threshold:
                bit = 1
            elif is_min and peak < -threshold:
                bit = 0
            if bit >= 0:
                out[n] = bit
                n += 1
                if n >= max_symbols or bit == stop_bit:
                    return n, COMPLETED, step + 1
        x_prev2 = x_prev
        x_prev = x
    return n, TIMED_OUT, max_steps


@njit(cache=True)
def cells_kernel(model, tkind, us, vs, sign, delta, dt, max_steps,
                 max_symbols, esc_bound, threshold, refine, stall_tol,
                 settle_fill, stop_bit, out_syms, out_n, out_status):
    """Run one separatrix per (u, v) cell; rows of ``out_syms`` get symbols."""
    for c in range(us.shape[0]):
        a, b = transform_params(tkind, us[c], vs[c])
        vx = 0.0
        vy = 0.0
        vz = 0.0
        ok = math.isfinite(a) and math.isfinite(b)
        if ok:
            ok, vx, vy, vz = unstable_direction(model, a, b)
        if not ok:
            out_n[c] = 0
            out_status[c] = NO_UNSTABLE
            continue
        sd = sign * delta
        n, st, _ = integrate_kernel(model, a, b, sd * vx, sd * vy, sd * vz,
                                    dt, max_steps, max_symbols, esc_bound,
                                    threshold, refine, stall_tol, settle_fill,
                                    stop_bit, out_syms[c])
        out_n[c] = n
        out_status[c] = st
