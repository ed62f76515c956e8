/** Software RGB raster with the primitives the figure kinds need. */

import { FONT, GLYPH_H, GLYPH_W } from "./font";

export type Color = [number, number, number];

export class Raster {
  readonly width: number;
  readonly height: number;
  readonly pixels: Uint8Array;

  constructor(width: number, height: number, background: Color) {
    this.width = width;
    this.height = height;
    this.pixels = new Uint8Array(width * height * 3);
    this.fill(background);
  }

  fill(color: Color): void {
    for (let i = 0; i < this.pixels.length; i += 3) {
      this.pixels[i] = color[0];
      this.pixels[i + 1] = color[1];
      this.pixels[i + 2] = color[2];
    }
  }

  set(x: number, y: number, color: Color): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 3;
    this.pixels[i] = color[0];
    this.pixels[i + 1] = color[1];
    this.pixels[i + 2] = color[2];
  }

  fillRect(x0: number, y0: number, w: number, h: number, color: Color): void {
    for (let y = y0; y < y0 + h; y++) {
      for (let x = x0; x < x0 + w; x++) {
        this.set(x, y, color);
      }
    }
  }

  line(x0: number, y0: number, x1: number, y1: number, color: Color): void {
    // Bresenham
    let [ax, ay] = [Math.round(x0), Math.round(y0)];
    const [bx, by] = [Math.round(x1), Math.round(y1)];
    const dx = Math.abs(bx - ax);
    const dy = -Math.abs(by - ay);
    const sx = ax < bx ? 1 : -1;
    const sy = ay < by ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.set(ax, ay, color);
      if (ax === bx && ay === by) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        ax += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ay += sy;
      }
    }
  }

  marker(x: number, y: number, r: number, color: Color): void {
    for (let dy = -r; dy <= r; dy++) {
      for (let dx = -r; dx <= r; dx++) {
        if (dx * dx + dy * dy <= r * r) {
          this.set(Math.round(x + dx), Math.round(y + dy), color);
        }
      }
    }
  }

  text(x: number, y: number, s: string, color: Color, scale = 1): void {
    let cx = x;
    for (const raw of s) {
      const glyph = FONT[raw.toUpperCase()] ?? FONT[" "];
      for (let row = 0; row < GLYPH_H; row++) {
        for (let col = 0; col < GLYPH_W; col++) {
          if ((glyph[row] >> (GLYPH_W - 1 - col)) & 1) {
            this.fillRect(cx + col * scale, y + row * scale, scale, scale, color);
          }
        }
      }
      cx += (GLYPH_W + 1) * scale;
    }
  }
}

/** Affine map from data coordinates to pixel coordinates. */
export class Axes {
  constructor(
    readonly x0: number,
    readonly y0: number,
    readonly w: number,
    readonly h: number,
    readonly xmin: number,
    readonly xmax: number,
    readonly ymin: number,
    readonly ymax: number
  ) {}

  px(x: number): number {
    return this.x0 + ((x - this.xmin) / (this.xmax - this.xmin || 1)) * this.w;
  }

  py(y: number): number {
    return this.y0 + this.h - ((y - this.ymin) / (this.ymax - this.ymin || 1)) * this.h;
  }
}
