"""Deterministic simulated generator/detector/aesthetic backend.

Rendering model: every layout box becomes a filled ellipse inscribed in its
bbox, painted far-to-near in a per-category color. Two controllable failure
modes make the feedback loop testable:

  * merge (semantic leakage): boxes whose pairwise IoU >= merge_iou fuse
    into a single blob counted as ONE instance;
  * drop noise: each surviving instance disappears with drop_prob,
    seeded per (noise seed, instance id).

Each rendered blob carries a 1 px outline ring so that pixel-mode counting
(connected components per color) matches the manifest even when instances
of the same category sit close together. Agreement is guaranteed as long
as no blob is fully hidden or bisected by nearer blobs, which holds for
pipeline layouts (comparable box sizes, bounded aspect ratios).
"""

from __future__ import annotations

import colorsys
import io
import zlib
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PilImage
from scipy import ndimage

from ..layout import Layout, grid_score, iou_pairs
from ..scoring import DetectionReport

PALETTE_SIZE = 32
BACKGROUND = (0, 0, 0)
OUTLINE = (255, 255, 255)

AESTHETIC_WEIGHTS = (0.5, 0.3, 0.2)   # overlap, grid, out-of-bounds penalties


def _palette_colors() -> list[tuple[int, int, int]]:
    colors = []
    for i in range(PALETTE_SIZE):
        r, g, b = colorsys.hsv_to_rgb(i / PALETTE_SIZE, 0.75, 0.85)
        colors.append((int(r * 255), int(g * 255), int(b * 255)))
    return colors


_PALETTE = _palette_colors()


def palette_for(categories: list[str]) -> dict[str, tuple[int, int, int]]:
    """Stable category -> color map: crc32 hash into the 32-entry palette,
    collisions resolved by open addressing in sorted-category order."""
    taken: set[int] = set()
    out: dict[str, tuple[int, int, int]] = {}
    for cat in sorted(set(categories)):
        slot = zlib.crc32(cat.encode("utf-8")) % PALETTE_SIZE
        while slot in taken:
            slot = (slot + 1) % PALETTE_SIZE
        taken.add(slot)
        out[cat] = _PALETTE[slot]
    return out


@dataclass(frozen=True)
class Image:
    pixels: np.ndarray  # uint8 (H, W, 3)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def to_png(self) -> bytes:
        buf = io.BytesIO()
        PilImage.fromarray(self.pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_png(cls, data: bytes) -> "Image":
        with PilImage.open(io.BytesIO(data)) as pil:
            arr = np.asarray(pil.convert("RGB"), dtype=np.uint8)
        return cls(pixels=arr)

    @classmethod
    def blank(cls, resolution: int) -> "Image":
        arr = np.zeros((resolution, resolution, 3), dtype=np.uint8)
        arr[:, :] = BACKGROUND
        return cls(pixels=arr)


@dataclass
class SimConfig:
    merge_iou: float = 0.10
    drop_prob: float = 0.0
    noise_seed: int = 0
    palette: dict[str, tuple[int, int, int]] | None = None

    def __post_init__(self):
        if not 0.0 <= self.merge_iou <= 1.0:
            raise ValueError(f"merge_iou {self.merge_iou} outside [0, 1]")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError(f"drop_prob {self.drop_prob} outside [0, 1]")


@dataclass(frozen=True)
class RenderedInstance:
    instance_id: str          # representative member (nearest by z)
    category: str
    member_ids: tuple[str, ...]
    bbox: tuple[int, int, int, int]


@dataclass
class RenderManifest:
    resolution: int
    instances: list[RenderedInstance]
    dropped: list[str] = field(default_factory=list)
    palette: dict[str, tuple[int, int, int]] = field(default_factory=dict)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for inst in self.instances:
            out[inst.category] = out.get(inst.category, 0) + 1
        return out

    def to_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "instances": [
                {"id": i.instance_id, "category": i.category,
                 "members": list(i.member_ids), "bbox": list(i.bbox)}
                for i in self.instances
            ],
            "dropped": list(self.dropped),
            "palette": {k: list(v) for k, v in self.palette.items()},
        }


def _merge_components(layout: Layout, merge_iou: float) -> list[list[int]]:
    n = len(layout.boxes)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in iou_pairs(layout, merge_iou):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _drop_uniform(noise_seed: int, instance_id: str) -> float:
    h = zlib.crc32(f"{noise_seed}:{instance_id}".encode("utf-8"))
    return h / 2**32


def _ellipse_mask(shape: tuple[int, int], offset: tuple[int, int],
                  bbox: tuple[int, int, int, int]) -> np.ndarray:
    """Ellipse interior inset ~1 px from the box walls, rasterized into a
    local patch; never empty."""
    oy, ox = offset
    x0, y0, x1, y1 = bbox
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    rx = max((x1 - x0) / 2.0 - 1.0, 0.6)
    ry = max((y1 - y0) / 2.0 - 1.0, 0.6)
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    norm = ((xx + ox - cx) / rx) ** 2 + ((yy + oy - cy) / ry) ** 2
    mask = norm <= 1.0
    if not mask.any():
        py = min(max(round(cy) - oy, 0), shape[0] - 1)
        px = min(max(round(cx) - ox, 0), shape[1] - 1)
        mask[py, px] = True
    return mask


def _segment_mask(shape: tuple[int, int], offset: tuple[int, int],
                  p0: tuple[float, float], p1: tuple[float, float],
                  thickness: float = 1.5) -> np.ndarray:
    oy, ox = offset
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    px = xx + ox
    py = yy + oy
    vx, vy = p1[0] - p0[0], p1[1] - p0[1]
    seg_len2 = vx * vx + vy * vy
    if seg_len2 < 1e-12:
        return np.hypot(px - p0[0], py - p0[1]) <= thickness
    t = np.clip(((px - p0[0]) * vx + (py - p0[1]) * vy) / seg_len2, 0.0, 1.0)
    dx = px - (p0[0] + t * vx)
    dy = py - (p0[1] + t * vy)
    return np.hypot(dx, dy) <= thickness


def sim_generate(layout: Layout, cfg: SimConfig) -> tuple[Image, RenderManifest]:
    """Render a layout; returns the image and a manifest of the instances
    actually drawn (after merge fusion and drop noise)."""
    res = layout.resolution
    palette = cfg.palette or palette_for([b.category for b in layout.boxes])
    groups = _merge_components(layout, cfg.merge_iou)

    comps = []
    for members in groups:
        boxes = [layout.boxes[i] for i in members]
        rep = max(boxes, key=lambda b: b.z)
        comps.append((rep, sorted(boxes, key=lambda b: b.id)))
    comps.sort(key=lambda c: c[0].z)

    label = np.full((res, res), -1, dtype=np.int32)
    instances: list[RenderedInstance] = []
    dropped: list[str] = []
    comp_colors: list[tuple[int, int, int]] = []
    for rep, boxes in comps:
        if cfg.drop_prob > 0.0 and _drop_uniform(cfg.noise_seed, rep.id) < cfg.drop_prob:
            dropped.append(rep.id)
            continue
        bx0 = min(b.bbox[0] for b in boxes)
        by0 = min(b.bbox[1] for b in boxes)
        bx1 = max(b.bbox[2] for b in boxes)
        by1 = max(b.bbox[3] for b in boxes)
        px0, py0 = max(bx0 - 2, 0), max(by0 - 2, 0)
        px1, py1 = min(bx1 + 3, res), min(by1 + 3, res)
        shape = (py1 - py0, px1 - px0)
        blob = np.zeros(shape, dtype=bool)
        for b in boxes:
            blob |= _ellipse_mask(shape, (py0, px0), b.bbox)
        for a, b in zip(boxes, boxes[1:]):
            blob |= _segment_mask(shape, (py0, px0), a.center, b.center)
        ring = ndimage.binary_dilation(blob, structure=np.ones((3, 3), bool)) & ~blob
        idx = len(instances)
        patch = label[py0:py1, px0:px1]
        patch[ring] = -2
        patch[blob] = idx
        cat = rep.category
        palette.setdefault(cat, palette_for([cat])[cat])
        comp_colors.append(palette[cat])
        instances.append(RenderedInstance(
            instance_id=rep.id, category=cat,
            member_ids=tuple(b.id for b in boxes),
            bbox=(bx0, by0, bx1, by1),
        ))

    lut = np.zeros((len(instances) + 2, 3), dtype=np.uint8)
    lut[0] = BACKGROUND
    lut[1] = OUTLINE
    for i, color in enumerate(comp_colors):
        lut[i + 2] = color
    image = Image(pixels=lut[label + 2])
    manifest = RenderManifest(
        resolution=res, instances=instances, dropped=dropped, palette=dict(palette),
    )
    return image, manifest


def sim_detect(image: Image, manifest: RenderManifest, categories: list[str],
               mode: str = "manifest") -> DetectionReport:
    """Count instances: manifest mode reads the render manifest (oracle);
    pixel mode counts per-color connected components in the image and must
    agree on noise-free renders."""
    if mode == "manifest":
        counts = {c: 0 for c in categories}
        boxes = []
        for inst in manifest.instances:
            counts[inst.category] = counts.get(inst.category, 0) + 1
            boxes.append((inst.category, inst.bbox, 1.0))
        return DetectionReport(counts=counts, boxes=boxes)
    if mode != "pixel":
        raise ValueError(f"unknown detection mode {mode!r}")

    counts = {c: 0 for c in categories}
    boxes = []
    pixels = image.pixels
    for cat, color in sorted(manifest.palette.items()):
        mask = (pixels == np.array(color, dtype=np.uint8)).all(axis=2)
        labeled, n = ndimage.label(mask)
        counts[cat] = counts.get(cat, 0) + int(n)
        for sl in ndimage.find_objects(labeled):
            if sl is None:
                continue
            boxes.append((cat, (sl[1].start, sl[0].start, sl[1].stop - 1, sl[0].stop - 1), 1.0))
    return DetectionReport(counts=counts, boxes=boxes)


def _coverage_fractions(layout: Layout) -> tuple[float, float]:
    """(overlap fraction, out-of-bounds fraction) of the layout's boxes.

    Overlap fraction is the area covered by two or more boxes over the area
    covered by at least one; out-of-bounds is box area outside the canvas
    over total box area.
    """
    res = layout.resolution
    if not layout.boxes:
        return 0.0, 0.0
    cover = np.zeros((res, res), dtype=np.uint16)
    oob_area = 0
    total_area = 0
    for b in layout.boxes:
        x0, y0, x1, y1 = b.bbox
        area = max(x1 - x0, 0) * max(y1 - y0, 0)
        total_area += area
        cx0, cy0 = max(x0, 0), max(y0, 0)
        cx1, cy1 = min(x1, res), min(y1, res)
        inside = max(cx1 - cx0, 0) * max(cy1 - cy0, 0)
        oob_area += area - inside
        if inside > 0:
            cover[cy0:cy1, cx0:cx1] += 1
    covered = int((cover >= 1).sum())
    if covered == 0:
        return 0.0, (1.0 if total_area else 0.0)
    overlap = int((cover >= 2).sum()) / covered
    oob = oob_area / total_area if total_area else 0.0
    return overlap, oob


def sim_aesthetic(layout: Layout, image: Image | None = None) -> float:
    """Geometry-driven stand-in for an aesthetic scorer: penalizes overlap,
    grid regularity, and out-of-bounds area."""
    w_ov, w_gr, w_ob = AESTHETIC_WEIGHTS
    overlap, oob = _coverage_fractions(layout)
    score = 1.0 - w_ov * overlap - w_gr * grid_score(layout) - w_ob * oob
    return float(min(max(score, 0.0), 1.0))


class SimBackend:
    """Bundles the simulated operations behind the orchestrator's backend
    contract. Pure and thread-safe; drop noise is reseeded per call via the
    seed argument so reruns reproduce exactly."""

    name = "sim"

    def __init__(self, cfg: SimConfig | None = None, detect_mode: str = "manifest"):
        self.cfg = cfg or SimConfig()
        self.detect_mode = detect_mode

    def generate(self, layout: Layout, prompt_d: str, prompt_bg: str,
                 seed: int) -> tuple[Image, RenderManifest]:
        cfg = SimConfig(
            merge_iou=self.cfg.merge_iou,
            drop_prob=self.cfg.drop_prob,
            noise_seed=seed ^ self.cfg.noise_seed,
            palette=self.cfg.palette,
        )
        return sim_generate(layout, cfg)

    def detect(self, image: Image, manifest: RenderManifest | None,
               categories: list[str], confidence: float = 0.3) -> DetectionReport:
        if manifest is None:
            raise ValueError("sim detector needs the render manifest")
        return sim_detect(image, manifest, categories, mode=self.detect_mode)

    def aesthetic(self, layout: Layout, image: Image | None = None) -> float:
        return sim_aesthetic(layout, image)
