"""Small 1-D search and information-measure helpers.

Everything here works in natural units unless a function name says ``bits``.
"""

import math

import numpy as np

LN2 = math.log(2.0)
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, lo, hi, tol=1e-9, max_iter=200):
    """Maximize a unimodal function on ``[lo, hi]`` by golden-section search.

    The endpoints are evaluated explicitly so boundary optima come back
    exactly rather than as an interior point within ``tol`` of the edge.

    Returns
    -------
    (x, fx) : tuple of float
    """
    a, b = float(lo), float(hi)
    if b < a:
        raise ValueError("empty interval")
    fa, fb = f(a), f(b)
    if b - a <= tol:
        return (a, fa) if fa >= fb else (b, fb)
    x1 = b - INVPHI * (b - a)
    x2 = a + INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + INVPHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - INVPHI * (b - a)
            f1 = f(x1)
    xm, fm = (x1, f1) if f1 >= f2 else (x2, f2)
    best = max((fa, lo), (fb, hi), (fm, xm), key=lambda t: t[0])
    return best[1], best[0]


def grid_refine_max(f, lo, hi, points=200, tol=1e-9, log=False):
    """Maximize a possibly multimodal function: coarse grid, then golden search.

    The golden search is confined to the two grid cells around the best grid
    point, so the result is never worse than the best grid value.
    """
    if log:
        u = np.linspace(math.log(lo), math.log(hi), points)
        xs = np.exp(u)
        xs[0], xs[-1] = lo, hi
    else:
        xs = np.linspace(lo, hi, points)
    vals = [f(float(x)) for x in xs]
    i = int(np.argmax(vals))
    best_x, best_f = float(xs[i]), vals[i]
    j0, j1 = max(i - 1, 0), min(i + 1, points - 1)
    if j1 > j0:
        if log:
            ul, uh = math.log(xs[j0]), math.log(xs[j1])
            t, ft = golden_max(lambda v: f(math.exp(v)), ul, uh, tol=tol)
            x = min(max(math.exp(t), xs[j0]), xs[j1])
        else:
            x, ft = golden_max(f, float(xs[j0]), float(xs[j1]), tol=tol)
        if ft > best_f:
            best_x, best_f = float(x), ft
    return best_x, best_f


def bisect_decreasing(g, lo, hi, tol=1e-12, max_iter=200):
    """Root of a nonincreasing function ``g`` on ``[lo, hi]``.

    Assumes ``g(lo) >= 0 >= g(hi)``.
    """
    a, b = float(lo), float(hi)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        m = 0.5 * (a + b)
        if g(m) > 0.0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def xlogx(p):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def entropy(p):
    """Shannon entropy in nats of a probability array (any shape)."""
    return float(-xlogx(p).sum())


def _h_scalar(p):
    h = 0.0
    if p > 0:
        h -= p * math.log(p)
    if p < 1:
        h -= (1.0 - p) * math.log1p(-p)
    return h


def binary_entropy(p):
    """H_B(p) in nats; accepts scalars or arrays."""
    if isinstance(p, (float, int)):
        return _h_scalar(float(p))
    p = np.asarray(p, dtype=float)
    h = -(xlogx(p) + xlogx(1.0 - p))
    return float(h) if h.ndim == 0 else h


def binary_entropy_bits(p):
    return binary_entropy(p) / LN2


def inverse_binary_entropy_bits(y, iterations=80):
    """Branch of H_B^{-1} on ``[0, 1/2]`` for ``y`` in bits."""
    if y < 0.0 or y > 1.0:
        raise ValueError(f"binary entropy value {y} outside [0, 1]")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if binary_entropy_bits(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def inverse_binary_entropy_bits_array(y, iterations=80):
    """Vectorized :func:`inverse_binary_entropy_bits`."""
    y = np.asarray(y, dtype=float)
    lo = np.zeros_like(y)
    hi = np.full_like(y, 0.5)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = binary_entropy_bits(mid) < y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out = np.where(y <= 0.0, 0.0, out)
    return np.where(y >= 1.0, 0.5, out)


def nats_to_bits(x):
    return x / LN2


def bits_to_nats(x):
    return x * LN2
