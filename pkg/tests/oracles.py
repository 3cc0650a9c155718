"""Independent reference computations used by the tests.

Nothing here imports the geometry under test: boxes are turned into
half-plane systems directly from (cx, cy, w, h, theta).
"""

import math

import numpy as np


def halfplanes(cx, cy, w, h, theta):
    """Box as ``|(p - c) . u| <= w/2`` and ``|(p - c) . v| <= h/2``."""
    u = (math.cos(theta), math.sin(theta))
    v = (-math.sin(theta), math.cos(theta))
    return (cx, cy, u, v, w / 2.0, h / 2.0)


def inside(box, x, y):
    cx, cy, u, v, hw, hh = box
    dx, dy = x - cx, y - cy
    return (np.abs(dx * u[0] + dy * u[1]) <= hw) & (np.abs(dx * v[0] + dy * v[1]) <= hh)


def _extent(box):
    cx, cy, u, v, hw, hh = box
    ex = abs(u[0]) * hw + abs(v[0]) * hh
    ey = abs(u[1]) * hw + abs(v[1]) * hh
    return cx - ex, cy - ey, cx + ex, cy + ey


def _row_interval(box, y):
    """x-interval where the horizontal line at each ``y`` is inside ``box`` (vectorised)."""
    cx, cy, u, v, hw, hh = box
    lo = np.full_like(y, -np.inf)
    hi = np.full_like(y, np.inf)
    for (ax, ay), half in ((u, hw), (v, hh)):
        # |(x - cx) ax + (y - cy) ay| <= half
        off = (y - cy) * ay
        if abs(ax) < 1e-15:
            bad = np.abs(off) > half
            lo = np.where(bad, np.inf, lo)
            hi = np.where(bad, -np.inf, hi)
            continue
        a = (-half - off) / ax + cx
        b = (half - off) / ax + cx
        lo = np.maximum(lo, np.minimum(a, b))
        hi = np.minimum(hi, np.maximum(a, b))
    return lo, hi


def grid_areas(a, b, n=1000):
    """Intersection and union areas from the n x n cell-centre samples
    of the joint bounding rectangle."""
    n_i, n_u, cell = grid_counts(a, b, n)
    return n_i * cell, n_u * cell


def grid_counts(a, b, n):
    """``(samples in both, samples in either, cell area)``.

    Each sample row is counted exactly through its inside-interval, which
    gives the same count as testing all n*n points individually.
    """
    ea, eb = _extent(a), _extent(b)
    x0, y0 = min(ea[0], eb[0]), min(ea[1], eb[1])
    x1, y1 = max(ea[2], eb[2]), max(ea[3], eb[3])
    dx, dy = (x1 - x0) / n, (y1 - y0) / n
    ys = y0 + (np.arange(n) + 0.5) * dy

    def count(lo, hi):
        # sample k sits at x0 + (k + 0.5) dx, k in [0, n)
        k_lo = np.clip(np.ceil((lo - x0) / dx - 0.5), 0, n)
        k_hi = np.clip(np.floor((hi - x0) / dx - 0.5), -1, n - 1)
        return np.maximum(k_hi - k_lo + 1, 0)

    la, ha = _row_interval(a, ys)
    lb, hb = _row_interval(b, ys)
    n_a = count(la, ha).sum()
    n_b = count(lb, hb).sum()
    n_i = count(np.maximum(la, lb), np.minimum(ha, hb)).sum()
    return int(n_i), int(n_a + n_b - n_i), dx * dy


def grid_iou(a, b, n=1000):
    inter, union = grid_areas(a, b, n)
    return inter / union if union > 0 else 0.0


def brute_grid_counts(a, b, n):
    """Point-by-point version of ``grid_areas`` (small n only)."""
    ea, eb = _extent(a), _extent(b)
    x0, y0 = min(ea[0], eb[0]), min(ea[1], eb[1])
    x1, y1 = max(ea[2], eb[2]), max(ea[3], eb[3])
    xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
    X, Y = np.meshgrid(xs, ys)
    ia, ib = inside(a, X, Y), inside(b, X, Y)
    return int((ia & ib).sum()), int((ia | ib).sum())
