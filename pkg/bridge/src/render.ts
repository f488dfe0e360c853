/**
 * Conformance renderer: replays the simulated backend behind the wire.
 * Boxes become inset ellipses painted far-to-near in category colors; boxes
 * whose IoU >= 0.1 fuse into a single outlined blob. Detecting on this
 * render therefore reproduces the layout's per-category counts.
 */

import { BACKGROUND, OUTLINE, paletteFor, Rgb } from "./palette.js";
import { LayoutPayload } from "./schema.js";

const MERGE_IOU = 0.1;

interface Box {
  id: string;
  category: string;
  bbox: [number, number, number, number];
  z: number;
}

export interface RenderedInstance {
  id: string;
  category: string;
  members: string[];
  bbox: [number, number, number, number];
}

function iou(a: Box, b: Box): number {
  const ix0 = Math.max(a.bbox[0], b.bbox[0]);
  const iy0 = Math.max(a.bbox[1], b.bbox[1]);
  const ix1 = Math.min(a.bbox[2], b.bbox[2]);
  const iy1 = Math.min(a.bbox[3], b.bbox[3]);
  const inter = Math.max(ix1 - ix0, 0) * Math.max(iy1 - iy0, 0);
  if (inter === 0) return 0;
  const areaA = (a.bbox[2] - a.bbox[0]) * (a.bbox[3] - a.bbox[1]);
  const areaB = (b.bbox[2] - b.bbox[0]) * (b.bbox[3] - b.bbox[1]);
  return inter / (areaA + areaB - inter);
}

function mergeComponents(boxes: Box[]): Box[][] {
  const parent = boxes.map((_, i) => i);
  const find = (i: number): number => {
    while (parent[i] !== i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (let i = 0; i < boxes.length; i++) {
    for (let j = i + 1; j < boxes.length; j++) {
      if (iou(boxes[i], boxes[j]) >= MERGE_IOU) {
        const ri = find(i);
        const rj = find(j);
        if (ri !== rj) parent[Math.max(ri, rj)] = Math.min(ri, rj);
      }
    }
  }
  const groups = new Map<number, Box[]>();
  boxes.forEach((box, i) => {
    const root = find(i);
    const group = groups.get(root) ?? [];
    group.push(box);
    groups.set(root, group);
  });
  return [...groups.values()];
}

/** Ellipse interior inset ~1px from the box walls; never empty. */
function paintEllipse(
  mask: Uint8Array, pw: number, ph: number, ox: number, oy: number,
  bbox: [number, number, number, number],
): void {
  const [x0, y0, x1, y1] = bbox;
  const cx = (x0 + x1) / 2;
  const cy = (y0 + y1) / 2;
  const rx = Math.max((x1 - x0) / 2 - 1, 0.6);
  const ry = Math.max((y1 - y0) / 2 - 1, 0.6);
  let any = false;
  for (let y = 0; y < ph; y++) {
    for (let x = 0; x < pw; x++) {
      const nx = (x + ox - cx) / rx;
      const ny = (y + oy - cy) / ry;
      if (nx * nx + ny * ny <= 1.0) {
        mask[y * pw + x] = 1;
        any = true;
      }
    }
  }
  if (!any) {
    const px = Math.min(Math.max(Math.round(cx) - ox, 0), pw - 1);
    const py = Math.min(Math.max(Math.round(cy) - oy, 0), ph - 1);
    mask[py * pw + px] = 1;
  }
}

function paintSegment(
  mask: Uint8Array, pw: number, ph: number, ox: number, oy: number,
  p0: [number, number], p1: [number, number], thickness = 1.5,
): void {
  const vx = p1[0] - p0[0];
  const vy = p1[1] - p0[1];
  const len2 = vx * vx + vy * vy;
  for (let y = 0; y < ph; y++) {
    for (let x = 0; x < pw; x++) {
      const px = x + ox;
      const py = y + oy;
      let dx: number;
      let dy: number;
      if (len2 < 1e-12) {
        dx = px - p0[0];
        dy = py - p0[1];
      } else {
        const t = Math.min(Math.max(((px - p0[0]) * vx + (py - p0[1]) * vy) / len2, 0), 1);
        dx = px - (p0[0] + t * vx);
        dy = py - (p0[1] + t * vy);
      }
      if (Math.hypot(dx, dy) <= thickness) mask[y * pw + x] = 1;
    }
  }
}

function dilateRing(mask: Uint8Array, pw: number, ph: number): Uint8Array {
  const ring = new Uint8Array(pw * ph);
  for (let y = 0; y < ph; y++) {
    for (let x = 0; x < pw; x++) {
      if (mask[y * pw + x]) continue;
      let neighbor = false;
      for (let dy = -1; dy <= 1 && !neighbor; dy++) {
        for (let dx = -1; dx <= 1; dx++) {
          const nx = x + dx;
          const ny = y + dy;
          if (nx >= 0 && nx < pw && ny >= 0 && ny < ph && mask[ny * pw + nx]) {
            neighbor = true;
            break;
          }
        }
      }
      if (neighbor) ring[y * pw + x] = 1;
    }
  }
  return ring;
}

export interface RenderResult {
  pixels: Buffer; // RGB, resolution * resolution * 3
  resolution: number;
  instances: RenderedInstance[];
}

export function renderLayout(layout: LayoutPayload): RenderResult {
  const res = layout.resolution;
  const boxes: Box[] = layout.boxes.map((b) => ({
    id: b.id, category: b.category,
    bbox: b.bbox as [number, number, number, number], z: b.z,
  }));
  const palette = paletteFor(boxes.map((b) => b.category));

  const comps = mergeComponents(boxes)
    .map((members) => {
      const rep = members.reduce((a, b) => (b.z > a.z ? b : a));
      return { rep, members: [...members].sort((a, b) => a.id.localeCompare(b.id)) };
    })
    .sort((a, b) => a.rep.z - b.rep.z);

  const label = new Int32Array(res * res).fill(-1);
  const instances: RenderedInstance[] = [];
  const colors: Rgb[] = [];
  for (const { rep, members } of comps) {
    const bx0 = Math.min(...members.map((m) => m.bbox[0]));
    const by0 = Math.min(...members.map((m) => m.bbox[1]));
    const bx1 = Math.max(...members.map((m) => m.bbox[2]));
    const by1 = Math.max(...members.map((m) => m.bbox[3]));
    const px0 = Math.max(bx0 - 2, 0);
    const py0 = Math.max(by0 - 2, 0);
    const px1 = Math.min(bx1 + 3, res);
    const py1 = Math.min(by1 + 3, res);
    const pw = px1 - px0;
    const ph = py1 - py0;
    const blob = new Uint8Array(pw * ph);
    for (const m of members) {
      paintEllipse(blob, pw, ph, px0, py0, m.bbox);
    }
    for (let i = 0; i + 1 < members.length; i++) {
      const a = members[i].bbox;
      const b = members[i + 1].bbox;
      paintSegment(blob, pw, ph, px0, py0,
        [(a[0] + a[2]) / 2, (a[1] + a[3]) / 2],
        [(b[0] + b[2]) / 2, (b[1] + b[3]) / 2]);
    }
    const ring = dilateRing(blob, pw, ph);
    const idx = instances.length;
    for (let y = 0; y < ph; y++) {
      for (let x = 0; x < pw; x++) {
        const target = (py0 + y) * res + (px0 + x);
        if (ring[y * pw + x]) label[target] = -2;
        if (blob[y * pw + x]) label[target] = idx;
      }
    }
    colors.push(palette.get(rep.category)!);
    instances.push({
      id: rep.id, category: rep.category,
      members: members.map((m) => m.id),
      bbox: [bx0, by0, bx1, by1],
    });
  }

  const pixels = Buffer.alloc(res * res * 3);
  for (let i = 0; i < res * res; i++) {
    const value = label[i];
    const color = value === -1 ? BACKGROUND : value === -2 ? OUTLINE : colors[value];
    pixels[i * 3] = color[0];
    pixels[i * 3 + 1] = color[1];
    pixels[i * 3 + 2] = color[2];
  }
  return { pixels, resolution: res, instances };
}
