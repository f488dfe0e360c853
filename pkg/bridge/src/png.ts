/** PNG (RGB8) encode/decode on top of pngjs. */

import { PNG } from "pngjs";

export function encodePng(pixels: Buffer, width: number, height: number): Buffer {
  const png = new PNG({ width, height });
  for (let i = 0; i < width * height; i++) {
    png.data[i * 4] = pixels[i * 3];
    png.data[i * 4 + 1] = pixels[i * 3 + 1];
    png.data[i * 4 + 2] = pixels[i * 3 + 2];
    png.data[i * 4 + 3] = 255;
  }
  return PNG.sync.write(png);
}

export interface DecodedImage {
  pixels: Buffer; // RGB
  width: number;
  height: number;
}

export function decodePng(data: Buffer): DecodedImage {
  const png = PNG.sync.read(data);
  const pixels = Buffer.alloc(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    pixels[i * 3] = png.data[i * 4];
    pixels[i * 3 + 1] = png.data[i * 4 + 1];
    pixels[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { pixels, width: png.width, height: png.height };
}
