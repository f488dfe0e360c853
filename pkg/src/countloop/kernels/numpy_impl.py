"""Pure-numpy geometry kernels.

Reference implementations of the hot inner loops: box-gap relaxation,
pairwise gap/IoU queries, and nearest-neighbor distances. The numba
backend in numba_impl.py mirrors these signatures exactly; agreement is
enforced by tests/test_kernels.py.

Boxes are given as centers (cx, cy) plus half extents (hw, hh), so a box
spans [cx-hw, cx+hw] x [cy-hh, cy+hh]. The gap between two boxes is the
larger of the per-axis edge separations and is negative when they overlap.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def relax_boxes(cx, cy, hw, hh, min_sep, damping, tol, max_steps, lo, hi):
    """Push box centers apart until every pairwise gap >= min_sep.

    Damped pairwise repulsion along center lines, force proportional to
    penetration depth. Half extents never change; centers are clamped so
    boxes stay inside [lo, hi] per axis. Returns (cx, cy, steps, satisfied).
    """
    cx = np.asarray(cx, dtype=np.float64).copy()
    cy = np.asarray(cy, dtype=np.float64).copy()
    hw = np.asarray(hw, dtype=np.float64)
    hh = np.asarray(hh, dtype=np.float64)
    n = cx.shape[0]
    if n < 2:
        return cx, cy, 0, True

    idx = np.arange(n)
    tie_sign = np.sign(idx[None, :] - idx[:, None]).astype(np.float64)
    steps = 0
    for steps in range(1, max_steps + 1):
        dx = cx[None, :] - cx[:, None]
        dy = cy[None, :] - cy[:, None]
        gapx = np.abs(dx) - (hw[:, None] + hw[None, :])
        gapy = np.abs(dy) - (hh[:, None] + hh[None, :])
        pen = min_sep - np.maximum(gapx, gapy)
        np.fill_diagonal(pen, -1.0)
        violated = pen > 0.0
        if not violated.any():
            return cx, cy, steps - 1, True

        dist = np.hypot(dx, dy)
        coincident = dist < _EPS
        safe = np.where(coincident, 1.0, dist)
        ux = np.where(coincident, tie_sign, dx / safe)
        uy = np.where(coincident, 0.0, dy / safe)
        # pushes are floored at 4*tol so pairs close the final gap instead
        # of approaching it asymptotically and stalling on the tol check
        force = np.where(violated, 0.5 * np.maximum(damping * pen, 4.0 * tol), 0.0)
        # each row i accumulates pushes away from all violating partners j
        mx = -(ux * force).sum(axis=1)
        my = -(uy * force).sum(axis=1)
        nx = np.clip(cx + mx, np.minimum(lo + hw, hi - hw), np.maximum(lo + hw, hi - hw))
        ny = np.clip(cy + my, np.minimum(lo + hh, hi - hh), np.maximum(lo + hh, hi - hh))
        moved = max(np.abs(nx - cx).max(), np.abs(ny - cy).max())
        cx, cy = nx, ny
        if moved < tol:
            break

    return cx, cy, steps, not _any_violation(cx, cy, hw, hh, min_sep)


def _any_violation(cx, cy, hw, hh, min_sep):
    dx = cx[None, :] - cx[:, None]
    dy = cy[None, :] - cy[:, None]
    gapx = np.abs(dx) - (hw[:, None] + hw[None, :])
    gapy = np.abs(dy) - (hh[:, None] + hh[None, :])
    gap = np.maximum(gapx, gapy)
    np.fill_diagonal(gap, np.inf)
    return bool((gap < min_sep).any())


def violating_pairs(cx, cy, hw, hh, min_sep):
    """Index pairs (i, j), i < j, whose box gap is below min_sep."""
    cx = np.asarray(cx, dtype=np.float64)
    cy = np.asarray(cy, dtype=np.float64)
    hw = np.asarray(hw, dtype=np.float64)
    hh = np.asarray(hh, dtype=np.float64)
    n = cx.shape[0]
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    dx = np.abs(cx[None, :] - cx[:, None]) - (hw[:, None] + hw[None, :])
    dy = np.abs(cy[None, :] - cy[:, None]) - (hh[:, None] + hh[None, :])
    gap = np.maximum(dx, dy)
    ii, jj = np.nonzero(np.triu(gap < min_sep, k=1))
    return np.stack([ii, jj], axis=1).astype(np.int64)


def nn_distances(cx, cy):
    """Nearest-neighbor center distance for each point (n >= 2)."""
    cx = np.asarray(cx, dtype=np.float64)
    cy = np.asarray(cy, dtype=np.float64)
    dx = cx[None, :] - cx[:, None]
    dy = cy[None, :] - cy[:, None]
    d = np.hypot(dx, dy)
    np.fill_diagonal(d, np.inf)
    return d.min(axis=1)


def iou_matrix(x0, y0, x1, y1):
    """Pairwise IoU of axis-aligned boxes; diagonal is zeroed."""
    x0 = np.asarray(x0, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    y1 = np.asarray(y1, dtype=np.float64)
    ix0 = np.maximum(x0[:, None], x0[None, :])
    iy0 = np.maximum(y0[:, None], y0[None, :])
    ix1 = np.minimum(x1[:, None], x1[None, :])
    iy1 = np.minimum(y1[:, None], y1[None, :])
    inter = np.clip(ix1 - ix0, 0.0, None) * np.clip(iy1 - iy0, 0.0, None)
    area = (x1 - x0) * (y1 - y0)
    union = area[:, None] + area[None, :] - inter
    iou = np.where(union > 0.0, inter / np.where(union > 0.0, union, 1.0), 0.0)
    np.fill_diagonal(iou, 0.0)
    return iou
