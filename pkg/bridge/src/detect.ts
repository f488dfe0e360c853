/**
 * Conformance detector: per-category instance counting on simulator-style
 * renders via 4-connected component labeling of exact palette colors. The
 * palette is derived from the requested category list with the shared hash
 * scheme, so counts line up with renders produced either by this bridge or
 * by the in-process simulated backend.
 */

import { paletteFor } from "./palette.js";

export interface DetectionBox {
  category: string;
  bbox: [number, number, number, number];
  confidence: number;
}

export interface Detection {
  counts: Record<string, number>;
  boxes: DetectionBox[];
}

export function detectInstances(
  pixels: Buffer, width: number, height: number, categories: string[],
): Detection {
  const palette = paletteFor(categories);
  const counts: Record<string, number> = {};
  const boxes: DetectionBox[] = [];
  for (const cat of categories) counts[cat] = 0;

  const visited = new Uint8Array(width * height);
  const stackX = new Int32Array(width * height);
  const stackY = new Int32Array(width * height);

  for (const cat of [...categories].sort()) {
    const [r, g, b] = palette.get(cat)!;
    visited.fill(0);
    for (let sy = 0; sy < height; sy++) {
      for (let sx = 0; sx < width; sx++) {
        const start = sy * width + sx;
        if (visited[start]) continue;
        const offset = start * 3;
        if (pixels[offset] !== r || pixels[offset + 1] !== g || pixels[offset + 2] !== b) {
          continue;
        }
        // flood fill one 4-connected component
        let top = 0;
        stackX[top] = sx;
        stackY[top] = sy;
        top++;
        visited[start] = 1;
        let minX = sx, maxX = sx, minY = sy, maxY = sy;
        while (top > 0) {
          top--;
          const x = stackX[top];
          const y = stackY[top];
          if (x < minX) minX = x;
          if (x > maxX) maxX = x;
          if (y < minY) minY = y;
          if (y > maxY) maxY = y;
          const neighbors: Array<[number, number]> = [
            [x - 1, y], [x + 1, y], [x, y - 1], [x, y + 1],
          ];
          for (const [nx, ny] of neighbors) {
            if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
            const ni = ny * width + nx;
            if (visited[ni]) continue;
            const no = ni * 3;
            if (pixels[no] === r && pixels[no + 1] === g && pixels[no + 2] === b) {
              visited[ni] = 1;
              stackX[top] = nx;
              stackY[top] = ny;
              top++;
            }
          }
        }
        counts[cat] += 1;
        boxes.push({ category: cat, bbox: [minX, minY, maxX, maxY], confidence: 1.0 });
      }
    }
  }
  return { counts, boxes };
}
