/**
 * Category color assignment shared with the simulated backend: crc32 hash
 * into a 32-entry HSV wheel, collisions resolved by open addressing over
 * the categories in sorted order. Counting on simulator renders only works
 * if these colors match the renderer byte for byte, so the math below
 * mirrors the reference implementation exactly (including float-to-byte
 * truncation).
 */

export type Rgb = [number, number, number];

export const PALETTE_SIZE = 32;
export const BACKGROUND: Rgb = [0, 0, 0];
export const OUTLINE: Rgb = [255, 255, 255];

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(text: string): number {
  const bytes = Buffer.from(text, "utf-8");
  let crc = 0xffffffff;
  for (const byte of bytes) {
    crc = CRC_TABLE[(crc ^ byte) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

/** hsv -> rgb with hue in [0, 1); same branch structure as CPython's colorsys. */
function hsvToRgb(h: number, s: number, v: number): [number, number, number] {
  if (s === 0) return [v, v, v];
  let i = Math.floor(h * 6.0);
  const f = h * 6.0 - i;
  const p = v * (1.0 - s);
  const q = v * (1.0 - s * f);
  const t = v * (1.0 - s * (1.0 - f));
  i = i % 6;
  switch (i) {
    case 0: return [v, t, p];
    case 1: return [q, v, p];
    case 2: return [p, v, t];
    case 3: return [p, q, v];
    case 4: return [t, p, v];
    default: return [v, p, q];
  }
}

const WHEEL: Rgb[] = Array.from({ length: PALETTE_SIZE }, (_, i) => {
  const [r, g, b] = hsvToRgb(i / PALETTE_SIZE, 0.75, 0.85);
  return [Math.trunc(r * 255), Math.trunc(g * 255), Math.trunc(b * 255)] as Rgb;
});

export function paletteFor(categories: string[]): Map<string, Rgb> {
  const taken = new Set<number>();
  const out = new Map<string, Rgb>();
  for (const cat of [...new Set(categories)].sort()) {
    let slot = crc32(cat) % PALETTE_SIZE;
    while (taken.has(slot)) {
      slot = (slot + 1) % PALETTE_SIZE;
    }
    taken.add(slot);
    out.set(cat, WHEEL[slot]);
  }
  return out;
}
