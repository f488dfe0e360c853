"""Numeric composition kernels on abstract feature maps.

Feature maps are float64 arrays of shape (H, W, D), binary masks uint8
arrays of shape (H, W) with values exactly 0 or 1, and token matrices
float64 arrays of shape (rows, d). Box coordinates follow the half-open
pixel convention: a box (x0, y0, x1, y1) covers columns [x0, x1) and rows
[y0, y1).
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DimError
from .layout import InstanceBox


def box_mask(box: InstanceBox, height: int, width: int) -> np.ndarray:
    """Binary mask that is 1 inside the box and 0 elsewhere."""
    x0, y0, x1, y1 = box.bbox
    if not (0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height):
        raise DimError(
            f"box {box.bbox} does not fit a {width}x{height} canvas"
        )
    mask = np.zeros((height, width), dtype=np.uint8)
    mask[y0:y1, x0:x1] = 1
    return mask


def mask_attention(a: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Confine a feature map to a mask: in-mask values are copied exactly,
    out-of-mask values are exactly zero."""
    a = np.asarray(a, dtype=np.float64)
    m = np.asarray(m)
    if a.ndim != 3:
        raise DimError(f"feature map must be (H, W, D), got shape {a.shape}")
    if m.shape != a.shape[:2]:
        raise DimError(f"mask shape {m.shape} != spatial dims {a.shape[:2]}")
    return np.where(m.astype(bool)[:, :, None], a, 0.0)


def cumulative_compose(items: list[tuple[InstanceBox, np.ndarray]],
                       canvas: tuple[int, int], depth: int) -> list[np.ndarray]:
    """Paste per-instance patches far-to-near onto a zero canvas.

    items must be sorted by z; each patch must match its box dims and the
    shared channel depth. Returns every prefix F_1 .. F_N, where F_{i+1}
    equals F_i except inside box i+1, whose pixels are overwritten by the
    incoming patch (near occludes far).
    """
    height, width = canvas
    last_z = None
    for box, _ in items:
        if last_z is not None and box.z < last_z:
            raise ValueError("items must be sorted by z (far to near)")
        last_z = box.z
    canvas_map = np.zeros((height, width, depth), dtype=np.float64)
    prefixes: list[np.ndarray] = []
    for box, patch in items:
        patch = np.asarray(patch, dtype=np.float64)
        x0, y0, x1, y1 = box.bbox
        expected = (y1 - y0, x1 - x0, depth)
        if patch.shape != expected:
            raise DimError(
                f"patch shape {patch.shape} != box dims {expected} for {box.id}"
            )
        if not (0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height):
            raise DimError(f"box {box.bbox} outside {width}x{height} canvas")
        canvas_map[y0:y1, x0:x1, :] = patch
        prefixes.append(canvas_map.copy())
    return prefixes


def attention(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Scaled dot-product attention: row_softmax(q k^T / sqrt(d)) v.

    Softmax uses max-subtraction for stability; each output row is a convex
    combination of v's rows.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise DimError("q, k, v must be 2-D token matrices")
    if q.shape[1] != k.shape[1]:
        raise DimError(f"query depth {q.shape[1]} != key depth {k.shape[1]}")
    if k.shape[0] != v.shape[0]:
        raise DimError(f"key rows {k.shape[0]} != value rows {v.shape[0]}")
    scores = q @ k.T / np.sqrt(q.shape[1])
    scores -= scores.max(axis=1, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=1, keepdims=True)
    return weights @ v


def expanded_attention(queries: list[np.ndarray], k: np.ndarray,
                       v: np.ndarray) -> list[np.ndarray]:
    """Per-instance attention against one shared key/value set.

    Each query block attends independently; the result is exactly (bit for
    bit) what independent attention(q_i, k, v) calls produce, which is the
    mechanism that keeps instances decoupled while sharing global context.
    """
    return [attention(q, k, v) for q in queries]


# --- fixture io ----------------------------------------------------------------

_HEADER = struct.Struct("<iii")


def save_feature_map(path, fm: np.ndarray) -> None:
    """Write (H, W, D) float64 map as a 3-int32 LE header + raw LE floats."""
    fm = np.asarray(fm, dtype=np.float64)
    if fm.ndim != 3:
        raise DimError(f"feature map must be (H, W, D), got {fm.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*fm.shape))
        fh.write(np.ascontiguousarray(fm, dtype="<f8").tobytes())


def load_feature_map(path) -> np.ndarray:
    with open(path, "rb") as fh:
        h, w, d = _HEADER.unpack(fh.read(_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != h * w * d:
        raise DimError(f"fixture payload {data.size} != {h}x{w}x{d}")
    return data.reshape(h, w, d).astype(np.float64)
