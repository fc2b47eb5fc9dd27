/** Flow-symbol geometry, ported 1:1 from the primary renderer so browser
 * glyphs match the exported SVG maps (rendering parity).
 *
 * Constants below mirror the primary's documented values; keep in sync.
 */

import type { BundleCluster, BundleStyle } from "./types.js";

export const CURVE_SAMPLES = 32;
export const MIN_SEGMENT_PX = 4.0;
export const MAX_SEGMENT_CHORD_FRAC = 0.5;
export const P1_MIN_CHORD_FRAC = 0.15;
export const TAPER_ORIGIN_FACTOR = 1.5;
export const TAPER_TIP_FACTOR = 0.4;
export const LIGHTNESS_RANGE: [number, number] = [0.82, 0.3];

export type Point = [number, number];

export interface FlowGlyph {
  path: [Point, Point, Point, Point];
  widthProfile: [number, number, number];
  arrowLength: number;
  arrowWidth: number;
  colorClass: number;
  originSegmentLength: number;
  apex: Point;
  circles: [[number, number, number], [number, number, number]] | null;
  lglr: number;
}

/** Uniform-scale fit of a data extent into a pixel viewport (y down). */
export class MapProjection {
  scale: number;
  ox: number;
  oy: number;

  constructor(
    extent: [number, number, number, number],
    viewport: [number, number],
    padding = 20.0,
  ) {
    const [minx, miny, maxx, maxy] = extent;
    const [w, h] = viewport;
    const spanx = Math.max(maxx - minx, 1e-12);
    const spany = Math.max(maxy - miny, 1e-12);
    this.scale = Math.min((w - 2 * padding) / spanx, (h - 2 * padding) / spany);
    this.ox =
      padding + ((w - 2 * padding) - spanx * this.scale) / 2 -
      minx * this.scale;
    this.oy =
      padding + ((h - 2 * padding) - spany * this.scale) / 2 +
      maxy * this.scale;
  }

  point(x: number, y: number): Point {
    return [this.ox + x * this.scale, this.oy - y * this.scale];
  }

  length(d: number): number {
    return d * this.scale;
  }
}

/** Linear-interpolation quantile (matches numpy's default). */
function quantile(sorted: number[], q: number): number {
  const n = sorted.length;
  if (n === 1) return sorted[0]!;
  const pos = q * (n - 1);
  const lo = Math.floor(pos);
  const hi = Math.min(lo + 1, n - 1);
  const frac = pos - lo;
  return sorted[lo]! * (1 - frac) + sorted[hi]! * frac;
}

/** Quantile class breaks at i/nClasses for i = 1..nClasses-1. */
export function classifyStrength(values: number[], nClasses: number): number[] {
  if (values.length === 0) throw new Error("values must be non-empty");
  if (nClasses < 1) throw new Error("nClasses must be >= 1");
  if (nClasses === 1) return [];
  const sorted = [...values].sort((a, b) => a - b);
  const breaks: number[] = [];
  for (let i = 1; i < nClasses; i++) {
    breaks.push(quantile(sorted, i / nClasses));
  }
  return breaks;
}

/** A value lands in class #{breaks strictly below it}. */
export function classOf(value: number, breaks: number[]): number {
  let cls = 0;
  for (const b of breaks) if (value > b) cls++;
  return cls;
}

function unit(vx: number, vy: number): Point {
  const n = Math.hypot(vx, vy);
  return n === 0 ? [0, 0] : [vx / n, vy / n];
}

/** Single-hue sequential color for a class (HLS lightness ramp). */
export function classColor(cls: number, nClasses: number, hue: number): string {
  const [lo, hi] = LIGHTNESS_RANGE;
  const frac = cls / Math.max(nClasses - 1, 1);
  const light = lo + (hi - lo) * frac;
  return hlsToHex((((hue % 360) + 360) % 360) / 360, light, 0.75);
}

function hlsToHex(h: number, l: number, s: number): string {
  // mirrors colorsys.hls_to_rgb
  const m2 = l <= 0.5 ? l * (1 + s) : l + s - l * s;
  const m1 = 2 * l - m2;
  const v = (hue: number): number => {
    hue = ((hue % 1) + 1) % 1;
    if (hue < 1 / 6) return m1 + (m2 - m1) * hue * 6;
    if (hue < 0.5) return m2;
    if (hue < 2 / 3) return m1 + (m2 - m1) * (2 / 3 - hue) * 6;
    return m1;
  };
  const toHex = (x: number): string =>
    Math.round(x * 255)
      .toString(16)
      .padStart(2, "0");
  return `#${toHex(v(h + 1 / 3))}${toHex(v(h))}${toHex(v(h - 1 / 3))}`;
}

/** Resolve one cluster's symbol geometry in pixels (parity with the
 * primary's layout: clockwise bend, tapered widths, arrowhead pull-back). */
export function layoutGlyph(
  cluster: BundleCluster,
  projection: MapProjection,
  style: BundleStyle,
  breaks: number[],
): FlowGlyph {
  const a = projection.point(cluster.origin.cx, cluster.origin.cy);
  const b = projection.point(cluster.dest.cx, cluster.dest.cy);
  const chord = Math.hypot(b[0] - a[0], b[1] - a[1]);
  if (chord === 0) throw new Error("zero chord");
  const ux = (b[0] - a[0]) / chord;
  const uy = (b[1] - a[1]) / chord;
  // clockwise normal in a y-down pixel frame
  const nx = -uy;
  const ny = ux;

  const cls = classOf(cluster.lglr, breaks);
  const nEff = Math.max(breaks.length, 1);
  const frac = cls / nEff;
  const wMid = style.w_mid_min + (style.w_mid_max - style.w_mid_min) * frac;
  const widths: [number, number, number] = [
    TAPER_ORIGIN_FACTOR * wMid,
    wMid,
    TAPER_TIP_FACTOR * wMid,
  ];

  const clampSeg = (v: number): number =>
    Math.min(Math.max(v, MIN_SEGMENT_PX), MAX_SEGMENT_CHORD_FRAC * chord);

  const originSeg = clampSeg(projection.length(cluster.origin.radius));
  const arrowLen = clampSeg(projection.length(cluster.dest.radius));
  const arrowW = 2.0 * wMid;

  const mx = (a[0] + b[0]) / 2 + style.curvature_coeff * chord * nx;
  const my = (a[1] + b[1]) / 2 + style.curvature_coeff * chord * ny;
  const qx = 2 * mx - (a[0] + b[0]) / 2;
  const qy = 2 * my - (a[1] + b[1]) / 2;

  const d1 = Math.max(originSeg, P1_MIN_CHORD_FRAC * chord);
  const u1 = unit(qx - a[0], qy - a[1]);
  const p1: Point = [a[0] + d1 * u1[0], a[1] + d1 * u1[1]];

  const tin = unit(b[0] - qx, b[1] - qy);
  const p3: Point = [b[0] - arrowLen * tin[0], b[1] - arrowLen * tin[1]];
  const d2 = 0.3 * chord;
  const p2: Point = [p3[0] - d2 * tin[0], p3[1] - d2 * tin[1]];

  let circles: FlowGlyph["circles"] = null;
  if (style.show_circles) {
    circles = [
      [a[0], a[1], Math.max(projection.length(cluster.origin.radius), 1.0)],
      [b[0], b[1], Math.max(projection.length(cluster.dest.radius), 1.0)],
    ];
  }

  return {
    path: [a, p1, p2, p3],
    widthProfile: widths,
    arrowLength: arrowLen,
    arrowWidth: arrowW,
    colorClass: cls,
    originSegmentLength: originSeg,
    apex: b,
    circles,
    lglr: cluster.lglr,
  };
}

export function bezier(
  path: [Point, Point, Point, Point],
  t: number,
): [number, number, number, number] {
  const [[x0, y0], [x1, y1], [x2, y2], [x3, y3]] = path;
  const s = 1 - t;
  const x = s ** 3 * x0 + 3 * s ** 2 * t * x1 + 3 * s * t ** 2 * x2 + t ** 3 * x3;
  const y = s ** 3 * y0 + 3 * s ** 2 * t * y1 + 3 * s * t ** 2 * y2 + t ** 3 * y3;
  const dx = 3 * s ** 2 * (x1 - x0) + 6 * s * t * (x2 - x1) + 3 * t ** 2 * (x3 - x2);
  const dy = 3 * s ** 2 * (y1 - y0) + 6 * s * t * (y2 - y1) + 3 * t ** 2 * (y3 - y2);
  return [x, y, dx, dy];
}

function widthAt(glyph: FlowGlyph, t: number): number {
  const [wo, wm, wt] = glyph.widthProfile;
  if (t <= 0.5) return wo + (wm - wo) * (t / 0.5);
  return wm + (wt - wm) * ((t - 0.5) / 0.5);
}

export function outlinePoints(
  glyph: FlowGlyph,
  t0: number,
  t1: number,
): Point[] {
  const left: Point[] = [];
  const right: Point[] = [];
  for (let i = 0; i <= CURVE_SAMPLES; i++) {
    const t = t0 + ((t1 - t0) * i) / CURVE_SAMPLES;
    const [x, y, dx, dy] = bezier(glyph.path, t);
    const [tx, ty] = unit(dx, dy);
    const pnx = -ty;
    const pny = tx;
    const hw = widthAt(glyph, t) / 2;
    left.push([x + hw * pnx, y + hw * pny]);
    right.push([x - hw * pnx, y - hw * pny]);
  }
  return left.concat(right.reverse());
}

function fmt(v: number): string {
  return v.toFixed(3);
}

export function polyPath(points: Point[]): string {
  const parts = [`M ${fmt(points[0]![0])} ${fmt(points[0]![1])}`];
  for (const [x, y] of points.slice(1)) parts.push(`L ${fmt(x)} ${fmt(y)}`);
  return parts.join(" ") + " Z";
}

/** SVG fragment for one glyph (same element structure as the primary). */
export function glyphSvg(glyph: FlowGlyph, style: BundleStyle): string {
  const color = classColor(glyph.colorClass, style.n_classes, style.hue);
  const originHalf = polyPath(outlinePoints(glyph, 0.0, 0.5));
  const destHalf = polyPath(outlinePoints(glyph, 0.5, 1.0));
  const [x3, y3] = glyph.path[3];
  const [ax, ay] = glyph.apex;
  const [tx, ty] = unit(ax - x3, ay - y3);
  const pnx = -ty;
  const pny = tx;
  const hw = glyph.arrowWidth / 2;
  const head: Point[] = [
    [ax, ay],
    [x3 + hw * pnx, y3 + hw * pny],
    [x3 - hw * pnx, y3 - hw * pny],
  ];
  const parts = [
    `<g class="flow-glyph" data-lglr="${glyph.lglr.toFixed(6)}" ` +
      `data-class="${glyph.colorClass}">`,
  ];
  const op =
    style.origin_half_opacity < 1.0
      ? ` fill-opacity="${style.origin_half_opacity.toFixed(3)}"`
      : "";
  parts.push(`<path d="${originHalf}" fill="${color}"${op}/>`);
  parts.push(`<path d="${destHalf}" fill="${color}"/>`);
  parts.push(`<path d="${polyPath(head)}" fill="${color}"/>`);
  if (glyph.circles) {
    for (const [cx, cy, r] of glyph.circles) {
      parts.push(
        `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" ` +
          `fill="none" stroke="${color}" stroke-width="1"/>`,
      );
    }
  }
  parts.push("</g>");
  return parts.join("\n");
}
