"""Numba-jitted geometry kernels, mirroring numpy_impl signatures.

Explicit O(n^2) loops; numba turns these into tight machine code without
the temporary (n, n) matrices the numpy path allocates per step.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_EPS = 1e-12


@njit(cache=True)
def _relax_loop(cx, cy, hw, hh, min_sep, damping, tol, max_steps, lo, hi):
    n = cx.shape[0]
    mx = np.zeros(n, dtype=np.float64)
    my = np.zeros(n, dtype=np.float64)
    steps = 0
    for step in range(1, max_steps + 1):
        steps = step
        for i in range(n):
            mx[i] = 0.0
            my[i] = 0.0
        violated = False
        for i in range(n):
            for j in range(i + 1, n):
                dx = cx[j] - cx[i]
                dy = cy[j] - cy[i]
                gapx = abs(dx) - (hw[i] + hw[j])
                gapy = abs(dy) - (hh[i] + hh[j])
                gap = gapx if gapx > gapy else gapy
                pen = min_sep - gap
                if pen <= 0.0:
                    continue
                violated = True
                dist = (dx * dx + dy * dy) ** 0.5
                if dist < _EPS:
                    ux, uy = 1.0, 0.0
                else:
                    ux, uy = dx / dist, dy / dist
                # push floored at 4*tol, mirroring numpy_impl: pairs close
                # the final gap instead of stalling on the tol check
                push = damping * pen
                if push < 4.0 * tol:
                    push = 4.0 * tol
                f = 0.5 * push
                mx[i] -= ux * f
                my[i] -= uy * f
                mx[j] += ux * f
                my[j] += uy * f
        if not violated:
            return steps - 1, True
        moved = 0.0
        for i in range(n):
            ox, oy = cx[i], cy[i]
            cx[i] += mx[i]
            cy[i] += my[i]
            xlo, xhi = lo + hw[i], hi - hw[i]
            if xlo > xhi:
                xlo = xhi = 0.5 * (xlo + xhi)
            ylo, yhi = lo + hh[i], hi - hh[i]
            if ylo > yhi:
                ylo = yhi = 0.5 * (ylo + yhi)
            if cx[i] < xlo:
                cx[i] = xlo
            elif cx[i] > xhi:
                cx[i] = xhi
            if cy[i] < ylo:
                cy[i] = ylo
            elif cy[i] > yhi:
                cy[i] = yhi
            m = abs(cx[i] - ox)
            if abs(cy[i] - oy) > m:
                m = abs(cy[i] - oy)
            if m > moved:
                moved = m
        if moved < tol:
            break
    ok = True
    for i in range(n):
        for j in range(i + 1, n):
            gapx = abs(cx[j] - cx[i]) - (hw[i] + hw[j])
            gapy = abs(cy[j] - cy[i]) - (hh[i] + hh[j])
            gap = gapx if gapx > gapy else gapy
            if gap < min_sep:
                ok = False
                break
        if not ok:
            break
    return steps, ok


def relax_boxes(cx, cy, hw, hh, min_sep, damping, tol, max_steps, lo, hi):
    """See numpy_impl.relax_boxes."""
    cx = np.ascontiguousarray(cx, dtype=np.float64).copy()
    cy = np.ascontiguousarray(cy, dtype=np.float64).copy()
    hw = np.ascontiguousarray(hw, dtype=np.float64)
    hh = np.ascontiguousarray(hh, dtype=np.float64)
    if cx.shape[0] < 2:
        return cx, cy, 0, True
    steps, ok = _relax_loop(
        cx, cy, hw, hh, float(min_sep), float(damping), float(tol),
        int(max_steps), float(lo), float(hi),
    )
    return cx, cy, int(steps), bool(ok)


@njit(cache=True)
def _violating_pairs(cx, cy, hw, hh, min_sep):
    n = cx.shape[0]
    out = np.empty((n * (n - 1) // 2, 2), dtype=np.int64)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            gapx = abs(cx[j] - cx[i]) - (hw[i] + hw[j])
            gapy = abs(cy[j] - cy[i]) - (hh[i] + hh[j])
            gap = gapx if gapx > gapy else gapy
            if gap < min_sep:
                out[k, 0] = i
                out[k, 1] = j
                k += 1
    return out[:k]


def violating_pairs(cx, cy, hw, hh, min_sep):
    """See numpy_impl.violating_pairs."""
    cx = np.ascontiguousarray(cx, dtype=np.float64)
    cy = np.ascontiguousarray(cy, dtype=np.float64)
    hw = np.ascontiguousarray(hw, dtype=np.float64)
    hh = np.ascontiguousarray(hh, dtype=np.float64)
    if cx.shape[0] < 2:
        return np.empty((0, 2), dtype=np.int64)
    return _violating_pairs(cx, cy, hw, hh, float(min_sep)).copy()


@njit(cache=True)
def _nn_distances(cx, cy):
    n = cx.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        best = np.inf
        for j in range(n):
            if i == j:
                continue
            dx = cx[j] - cx[i]
            dy = cy[j] - cy[i]
            d = (dx * dx + dy * dy) ** 0.5
            if d < best:
                best = d
        out[i] = best
    return out


def nn_distances(cx, cy):
    """See numpy_impl.nn_distances."""
    cx = np.ascontiguousarray(cx, dtype=np.float64)
    cy = np.ascontiguousarray(cy, dtype=np.float64)
    return _nn_distances(cx, cy)


@njit(cache=True)
def _iou_matrix(x0, y0, x1, y1):
    n = x0.shape[0]
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        ai = (x1[i] - x0[i]) * (y1[i] - y0[i])
        for j in range(i + 1, n):
            ix0 = max(x0[i], x0[j])
            iy0 = max(y0[i], y0[j])
            ix1 = min(x1[i], x1[j])
            iy1 = min(y1[i], y1[j])
            iw = ix1 - ix0
            ih = iy1 - iy0
            if iw <= 0.0 or ih <= 0.0:
                continue
            inter = iw * ih
            aj = (x1[j] - x0[j]) * (y1[j] - y0[j])
            union = ai + aj - inter
            if union > 0.0:
                out[i, j] = inter / union
                out[j, i] = out[i, j]
    return out


def iou_matrix(x0, y0, x1, y1):
    """See numpy_impl.iou_matrix."""
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    x1 = np.ascontiguousarray(x1, dtype=np.float64)
    y1 = np.ascontiguousarray(y1, dtype=np.float64)
    return _iou_matrix(x0, y0, x1, y1)
