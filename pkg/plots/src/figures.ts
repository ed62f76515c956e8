/**
 * Figure renderers. Pure renderings of the CSV/manifest outputs: every
 * number shown (fitted slope, ratios, gaps) is read from the manifest or
 * CSV verbatim; nothing is refitted here.
 */

import * as fs from "fs";

import {
  EmptyCsvError,
  loadCsv,
  numericColumn,
  rawScalarToken,
  requireColumns,
  Table,
} from "./csv";
import { encodePng } from "./png";
import { Axes, Color, Raster } from "./raster";
import { loadStyle, Style } from "./style";

export interface RenderResult {
  png: Buffer;
}

interface Frame {
  raster: Raster;
  axes: Axes;
  style: Style;
}

function lerp(a: Color, b: Color, t: number): Color {
  return [
    Math.round(a[0] + (b[0] - a[0]) * t),
    Math.round(a[1] + (b[1] - a[1]) * t),
    Math.round(a[2] + (b[2] - a[2]) * t),
  ];
}

function newFrame(
  xmin: number,
  xmax: number,
  ymin: number,
  ymax: number,
  title: string
): Frame {
  const style = loadStyle();
  const raster = new Raster(style.width, style.height, style.background);
  const m = style.margin;
  const axes = new Axes(
    m,
    m,
    style.width - 2 * m,
    style.height - 2 * m,
    xmin,
    xmax,
    ymin,
    ymax
  );
  // frame box and title
  raster.line(axes.x0, axes.y0, axes.x0 + axes.w, axes.y0, style.frame);
  raster.line(axes.x0, axes.y0 + axes.h, axes.x0 + axes.w, axes.y0 + axes.h, style.frame);
  raster.line(axes.x0, axes.y0, axes.x0, axes.y0 + axes.h, style.frame);
  raster.line(axes.x0 + axes.w, axes.y0, axes.x0 + axes.w, axes.y0 + axes.h, style.frame);
  raster.text(m, Math.floor(m / 2) - 7, title, style.text, style.textScale);
  return { raster, axes, style };
}

function axisLabels(f: Frame, xlab: string, ylab: string): void {
  const { raster, axes, style } = f;
  raster.text(axes.x0 + axes.w - 6 * xlab.length * 2, axes.y0 + axes.h + 10, xlab, style.text, style.textScale);
  raster.text(8, axes.y0 - 28, ylab, style.text, style.textScale);
}

function fmtTick(v: number): string {
  const s = Math.abs(v) >= 100 || (v !== 0 && Math.abs(v) < 0.01)
    ? v.toExponential(1)
    : String(Math.round(v * 100) / 100);
  return s.toUpperCase();
}

function xticks(f: Frame, values: number[]): void {
  for (const v of values) {
    const px = Math.round(f.axes.px(v));
    f.raster.line(px, f.axes.y0 + f.axes.h, px, f.axes.y0 + f.axes.h + 4, f.style.frame);
    f.raster.text(px - 8, f.axes.y0 + f.axes.h + 8, fmtTick(v), f.style.text, 1);
  }
}

function yticks(f: Frame, values: number[]): void {
  for (const v of values) {
    const py = Math.round(f.axes.py(v));
    f.raster.line(f.axes.x0 - 4, py, f.axes.x0, py, f.style.frame);
    f.raster.text(4, py - 3, fmtTick(v), f.style.text, 1);
  }
}

function readManifest(path: string): { json: any; raw: string } {
  const raw = fs.readFileSync(path, "utf8");
  return { json: JSON.parse(raw), raw };
}

// ---------------------------------------------------------------------------

export function renderDecay(csvPath: string, manifestPath: string): RenderResult {
  const table = loadCsv(csvPath);
  requireColumns(table, ["r_lo", "r_hi", "r_center", "max_abs", "used"], csvPath);
  const { raw } = readManifest(manifestPath);
  const token = rawScalarToken(raw, "fitted_N");
  if (token === null) {
    throw new EmptyCsvError(`${manifestPath}: manifest has no fitted_N scalar`);
  }
  const r = numericColumn(table, "r_center");
  const mag = numericColumn(table, "max_abs");
  const used = numericColumn(table, "used");
  const pts = r
    .map((rv, i) => ({ x: Math.log10(1 + rv), y: Math.log10(mag[i]), used: used[i] > 0 }))
    .filter((p) => Number.isFinite(p.y));
  if (pts.length === 0) {
    throw new EmptyCsvError(`${csvPath}: no positive bins to draw`);
  }
  const xs = pts.map((p) => p.x);
  const ys = pts.map((p) => p.y);
  const f = newFrame(
    Math.min(...xs) - 0.05,
    Math.max(...xs) + 0.05,
    Math.min(...ys) - 0.5,
    Math.max(...ys) + 0.5,
    "WAVE PACKET DECAY (LOG-LOG)"
  );
  axisLabels(f, "LOG10(1+R)", "LOG10 MAX");
  xticks(f, [0, 0.5, 1.0]);
  yticks(f, [Math.round(Math.min(...ys)), Math.round((Math.min(...ys) + Math.max(...ys)) / 2), Math.round(Math.max(...ys))]);
  // fitted slope overlay: log10 max = c - N log10(1+r), anchored at the
  // first used point; N comes from the manifest, never refitted
  const N = Number(token);
  const anchor = pts.find((p) => p.used) ?? pts[0];
  const c = anchor.y + N * anchor.x;
  f.raster.line(
    f.axes.px(f.axes.xmin),
    f.axes.py(c - N * f.axes.xmin),
    f.axes.px(f.axes.xmax),
    f.axes.py(c - N * f.axes.xmax),
    f.style.accent
  );
  for (const p of pts) {
    f.raster.marker(f.axes.px(p.x), f.axes.py(p.y), p.used ? 4 : 2, p.used ? f.style.series : f.style.gridline);
  }
  f.raster.text(f.axes.x0 + 10, f.axes.y0 + 10, `FITTED N = ${token}`, f.style.accent, f.style.textScale);
  return { png: encodePng(f.raster.width, f.raster.height, f.raster.pixels, { fitted_N: token }) };
}

export function renderUniformity(csvPath: string, manifestPath: string): RenderResult {
  const table = loadCsv(csvPath);
  requireColumns(table, ["zx", "zxi", "C"], csvPath);
  const { raw } = readManifest(manifestPath);
  const token = rawScalarToken(raw, "ratio");
  const C = numericColumn(table, "C");
  const top = Math.max(...C) * 1.15;
  const f = newFrame(-0.5, C.length - 0.5, 0, top, "ENERGY AMPLIFICATION BY SHIFT");
  axisLabels(f, "SHIFT INDEX", "C(Z)");
  yticks(f, [0, Math.round(top * 50) / 100, Math.round(top * 100) / 100]);
  const barw = Math.max(4, Math.floor((f.axes.w / C.length) * 0.6));
  C.forEach((c, i) => {
    const cx = Math.round(f.axes.px(i));
    const py = Math.round(f.axes.py(c));
    f.raster.fillRect(cx - Math.floor(barw / 2), py, barw, f.axes.y0 + f.axes.h - py, f.style.series);
    f.raster.text(cx - 3, f.axes.y0 + f.axes.h + 8, String(i), f.style.text, 1);
  });
  const text: Record<string, string> = {};
  if (token !== null) {
    f.raster.text(f.axes.x0 + 10, f.axes.y0 + 10, `RATIO = ${token}`, f.style.accent, f.style.textScale);
    text.ratio = token;
  }
  return { png: encodePng(f.raster.width, f.raster.height, f.raster.pixels, text) };
}

export function renderWavefront(csvPath: string, manifestPath: string): RenderResult {
  const table = loadCsv(csvPath);
  requireColumns(table, ["angle", "exponent", "member"], csvPath);
  const angles = numericColumn(table, "angle");
  const members = numericColumn(table, "member");
  const style = loadStyle();
  const raster = new Raster(style.width, style.height, style.background);
  raster.text(style.margin, Math.floor(style.margin / 2) - 7, "WAVE FRONT MEMBERSHIP MAP", style.text, style.textScale);
  const cx = style.width / 2;
  const cy = style.height / 2 + 10;
  const R = Math.min(style.width, style.height) / 2 - style.margin;
  const n = angles.length;
  const cell = Math.PI / n; // half-width of each angular cell
  // per-pixel sector shading: membership flags rendered row-for-row
  for (let y = Math.ceil(cy - R); y <= cy + R; y++) {
    for (let x = Math.ceil(cx - R); x <= cx + R; x++) {
      const dx = x - cx;
      const dy = cy - y; // mathematical orientation
      const rr = Math.hypot(dx, dy);
      if (rr > R || rr < 8) continue;
      let theta = Math.atan2(dy, dx);
      if (theta < 0) theta += 2 * Math.PI;
      let best = 0;
      let bestDist = Infinity;
      for (let i = 0; i < n; i++) {
        const d = Math.min(
          Math.abs(theta - angles[i]),
          2 * Math.PI - Math.abs(theta - angles[i])
        );
        if (d < bestDist) {
          bestDist = d;
          best = i;
        }
      }
      if (bestDist <= cell) {
        raster.set(x, y, members[best] > 0 ? style.member : style.nonmember);
      }
    }
  }
  // spoke outlines
  for (let i = 0; i < n; i++) {
    const a = angles[i] + cell;
    raster.line(cx, cy, cx + R * Math.cos(a), cy - R * Math.sin(a), style.background);
  }
  const flags = members.map((m) => (m > 0 ? "1" : "0")).join("");
  raster.text(style.margin, style.height - style.margin / 2, `MEMBERS: ${flags}`, style.text, 1);
  return { png: encodePng(raster.width, raster.height, raster.pixels, { members: flags }) };
}

export function renderStft(csvPath: string, manifestPath: string): RenderResult {
  const table = loadCsv(csvPath);
  requireColumns(table, ["zx", "zxi", "re", "im"], csvPath);
  const zx = numericColumn(table, "zx");
  const zxi = numericColumn(table, "zxi");
  const re = numericColumn(table, "re");
  const im = numericColumn(table, "im");
  const xs = Array.from(new Set(zx)).sort((a, b) => a - b);
  const ys = Array.from(new Set(zxi)).sort((a, b) => a - b);
  const xi = new Map(xs.map((v, i) => [v, i]));
  const yi = new Map(ys.map((v, i) => [v, i]));
  const mag = new Float64Array(xs.length * ys.length);
  let peak = 0;
  for (let k = 0; k < zx.length; k++) {
    const m = Math.hypot(re[k], im[k]);
    mag[(xi.get(zx[k]) as number) * ys.length + (yi.get(zxi[k]) as number)] = m;
    peak = Math.max(peak, m);
  }
  if (peak === 0) {
    throw new EmptyCsvError(`${csvPath}: all magnitudes vanish`);
  }
  const f = newFrame(xs[0], xs[xs.length - 1], ys[0], ys[ys.length - 1], "STFT MAGNITUDE");
  axisLabels(f, "X", "XI");
  xticks(f, [xs[0], 0, xs[xs.length - 1]]);
  yticks(f, [ys[0], 0, ys[ys.length - 1]]);
  const cw = Math.max(1, Math.ceil(f.axes.w / xs.length / 2) * 2);
  const ch = Math.max(1, Math.ceil(f.axes.h / ys.length / 2) * 2);
  for (let i = 0; i < xs.length; i++) {
    for (let j = 0; j < ys.length; j++) {
      const t = mag[i * ys.length + j] / peak;
      const color =
        t < 0.5
          ? lerp(f.style.background, f.style.series, t * 2)
          : lerp(f.style.series, f.style.accent, t * 2 - 1);
      f.raster.fillRect(
        Math.round(f.axes.px(xs[i]) - cw / 2),
        Math.round(f.axes.py(ys[j]) - ch / 2),
        cw,
        ch,
        color
      );
    }
  }
  return { png: encodePng(f.raster.width, f.raster.height, f.raster.pixels, { peak: String(peak) }) };
}

export function renderPicard(csvPath: string, manifestPath: string): RenderResult {
  const table = loadCsv(csvPath);
  requireColumns(table, ["iteration", "gap"], csvPath);
  const it = numericColumn(table, "iteration");
  const gaps = numericColumn(table, "gap").map((g) => Math.log10(Math.max(g, 1e-300)));
  const f = newFrame(
    Math.min(...it),
    Math.max(...it) + 0.2,
    Math.min(...gaps) - 0.5,
    Math.max(...gaps) + 0.5,
    "CONTRACTION OF THE ITERATION"
  );
  axisLabels(f, "ITERATION", "LOG10 GAP");
  xticks(f, it);
  yticks(f, [Math.round(Math.max(...gaps)), Math.round(Math.min(...gaps))]);
  for (let k = 0; k + 1 < it.length; k++) {
    f.raster.line(
      f.axes.px(it[k]),
      f.axes.py(gaps[k]),
      f.axes.px(it[k + 1]),
      f.axes.py(gaps[k + 1]),
      f.style.series
    );
  }
  it.forEach((x, k) => f.raster.marker(f.axes.px(x), f.axes.py(gaps[k]), 4, f.style.accent));
  return { png: encodePng(f.raster.width, f.raster.height, f.raster.pixels, {}) };
}

export const RENDERERS: Record<string, (c: string, m: string) => RenderResult> = {
  decay: renderDecay,
  uniformity: renderUniformity,
  wavefront: renderWavefront,
  stft: renderStft,
  picard: renderPicard,
};
