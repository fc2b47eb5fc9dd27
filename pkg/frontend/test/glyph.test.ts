/** Rendering parity: the TypeScript glyph layout must reproduce the
 * primary renderer's geometry on golden cases. */

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  classColor,
  classifyStrength,
  classOf,
  layoutGlyph,
  MapProjection,
} from "../src/glyph.js";
import type { BundleCluster, BundleStyle } from "../src/types.js";

interface GoldenGlyph {
  path: number[][];
  width_profile: number[];
  arrow_length: number;
  arrow_width: number;
  color_class: number;
  origin_segment_length: number;
  apex: number[];
  circles: number[][] | null;
}

interface GlyphGolden {
  style: BundleStyle;
  extent: [number, number, number, number];
  viewport: [number, number];
  breaks: number[];
  cases: { cluster: BundleCluster; glyph: GoldenGlyph }[];
}

const golden: GlyphGolden = JSON.parse(
  readFileSync(
    fileURLToPath(new URL("./fixtures/glyph_golden.json", import.meta.url)),
    "utf-8",
  ),
);

const TOL = 1e-9;

function close(a: number, b: number): void {
  expect(Math.abs(a - b)).toBeLessThanOrEqual(TOL * Math.max(1, Math.abs(b)));
}

describe("glyph layout parity with the primary renderer", () => {
  const proj = new MapProjection(golden.extent, golden.viewport);

  for (const [i, gc] of golden.cases.entries()) {
    it(`case ${i}: geometry matches`, () => {
      const g = layoutGlyph(gc.cluster, proj, golden.style, golden.breaks);
      expect(g.colorClass).toBe(gc.glyph.color_class);
      close(g.arrowLength, gc.glyph.arrow_length);
      close(g.arrowWidth, gc.glyph.arrow_width);
      close(g.originSegmentLength, gc.glyph.origin_segment_length);
      for (let p = 0; p < 4; p++) {
        close(g.path[p]![0], gc.glyph.path[p]![0]!);
        close(g.path[p]![1], gc.glyph.path[p]![1]!);
      }
      close(g.apex[0], gc.glyph.apex[0]!);
      close(g.apex[1], gc.glyph.apex[1]!);
      for (let w = 0; w < 3; w++) {
        close(g.widthProfile[w]!, gc.glyph.width_profile[w]!);
      }
      if (gc.glyph.circles) {
        expect(g.circles).not.toBeNull();
        for (let c = 0; c < 2; c++) {
          for (let k = 0; k < 3; k++) {
            close(g.circles![c]![k]!, gc.glyph.circles[c]![k]!);
          }
        }
        // inspect-overlay contract: projected circle radii within 0.5 px
        for (let c = 0; c < 2; c++) {
          const nb = c === 0 ? gc.cluster.origin : gc.cluster.dest;
          const r = Math.max(proj.length(nb.radius), 1.0);
          expect(Math.abs(r - gc.glyph.circles[c]![2]!)).toBeLessThan(0.5);
        }
      }
    });
  }

  it("class breaks match the primary's quantile convention", () => {
    const lglrs = golden.cases.map((c) => c.cluster.lglr);
    const breaks = classifyStrength(lglrs, golden.style.n_classes);
    expect(breaks.length).toBe(golden.breaks.length);
    for (let i = 0; i < breaks.length; i++) close(breaks[i]!, golden.breaks[i]!);
    // frozen example: values 1..100, 5 classes
    const b = classifyStrength(
      Array.from({ length: 100 }, (_, i) => i + 1),
      5,
    );
    expect(b.map((x) => Math.round(x * 10) / 10)).toEqual([
      20.8, 40.6, 60.4, 80.2,
    ]);
    expect(classOf(20.8, b)).toBe(0);
    expect(classOf(99, b)).toBe(4);
  });

  it("class colors darken with strength and match the hue ramp", () => {
    const cols = Array.from({ length: 5 }, (_, i) => classColor(i, 5, 210));
    expect(new Set(cols).size).toBe(5);
    const lum = (hx: string): number =>
      parseInt(hx.slice(1, 3), 16) +
      parseInt(hx.slice(3, 5), 16) +
      parseInt(hx.slice(5, 7), 16);
    for (let i = 1; i < cols.length; i++) {
      expect(lum(cols[i]!)).toBeLessThan(lum(cols[i - 1]!));
    }
  });
});
