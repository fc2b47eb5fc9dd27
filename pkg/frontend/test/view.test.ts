/** Zoom-driven regeneralization behavior on a real primary-produced bundle. */

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { parseBundle, BundleFormatError } from "../src/types.js";
import type { ExplorerBundle } from "../src/types.js";
import {
  applyView,
  inViewport,
  thresholdsAtZoom,
  type Extent,
} from "../src/view.js";

const bundle: ExplorerBundle = parseBundle(
  JSON.parse(
    readFileSync(
      fileURLToPath(new URL("./fixtures/zoom_bundle.json", import.meta.url)),
      "utf-8",
    ),
  ),
);

function key(c: { focal: { o: string; d: string } }): string {
  return `${c.focal.o}->${c.focal.d}`;
}

describe("zoom -> threshold mapping", () => {
  it("is monotone non-increasing in zoom", () => {
    let prevL = Infinity;
    let prevD = Infinity;
    for (let z = 0; z <= bundle.zoom_mapping.max_level; z++) {
      const thr = thresholdsAtZoom(bundle, z);
      expect(thr.minLglr).toBeLessThanOrEqual(prevL);
      expect(thr.minDistance).toBeLessThanOrEqual(prevD);
      prevL = thr.minLglr;
      prevD = thr.minDistance;
    }
  });

  it("user sliders override the mapping", () => {
    const thr = thresholdsAtZoom(bundle, 3, { minLglr: 77, minDistance: 0.5 });
    expect(thr.minLglr).toBe(77);
    expect(thr.minDistance).toBe(0.5);
  });
});

describe("applyView", () => {
  const full: Extent = bundle.extent;

  it("zooming in one level yields a superset of the previous set " +
    "intersected with the new viewport", () => {
    // zoom in toward the densest corner of the data
    const [x0, y0, x1, y1] = full;
    for (let z = 0; z < bundle.zoom_mapping.max_level; z++) {
      const frac = 2 ** -(z + 1);
      const vpPrev: Extent = [
        x0, y0,
        x0 + (x1 - x0) * 2 * frac, y0 + (y1 - y0) * 2 * frac,
      ];
      const vpNext: Extent = [
        x0, y0,
        x0 + (x1 - x0) * frac, y0 + (y1 - y0) * frac,
      ];
      const prev = applyView(bundle, vpPrev, z);
      const next = new Set(applyView(bundle, vpNext, z + 1).map(key));
      for (const c of prev) {
        if (inViewport(c, vpNext)) {
          expect(next.has(key(c))).toBe(true);
        }
      }
    }
  });

  it("reveals additional detail as zoom increases (fixed viewport)", () => {
    let prevCount = 0;
    for (let z = 0; z <= bundle.zoom_mapping.max_level; z++) {
      const count = applyView(bundle, full, z).length;
      expect(count).toBeGreaterThanOrEqual(prevCount);
      prevCount = count;
    }
    expect(prevCount).toBeGreaterThan(0);
  });

  it("infinite thresholds empty the map", () => {
    const out = applyView(bundle, full, 4, {
      minLglr: Infinity,
      minDistance: Infinity,
    });
    expect(out).toEqual([]);
  });

  it("a threshold between three clusters' lglr values keeps the " +
    "expected subset", () => {
    const ranked = [...bundle.clusters].sort((a, b) => b.lglr - a.lglr);
    const three = ranked.slice(0, 3);
    const mini: ExplorerBundle = { ...bundle, clusters: three };
    const cut = (three[0]!.lglr + three[1]!.lglr) / 2;
    const out = applyView(mini, full, 0, { minLglr: cut, minDistance: 0 });
    expect(out.map(key)).toEqual([key(three[0]!)]);
  });

  it("viewport filtering keeps only intersecting clusters", () => {
    const all = applyView(bundle, full, bundle.zoom_mapping.max_level, {
      minLglr: 0,
      minDistance: 0,
    });
    const [x0, y0, x1, y1] = full;
    const half: Extent = [x0, y0, (x0 + x1) / 2, (y0 + y1) / 2];
    const clipped = applyView(bundle, half, bundle.zoom_mapping.max_level, {
      minLglr: 0,
      minDistance: 0,
    });
    expect(clipped.length).toBeLessThan(all.length);
    for (const c of clipped) expect(inViewport(c, half)).toBe(true);
  });
});

describe("bundle validation", () => {
  it("rejects malformed bundles with a load error", () => {
    expect(() => parseBundle(null)).toThrow(BundleFormatError);
    expect(() => parseBundle({})).toThrow(BundleFormatError);
    expect(() =>
      parseBundle({ clusters: [{}], extent: [0, 0, 1, 1], style: {}, zoom_mapping: {} }),
    ).toThrow(BundleFormatError);
  });

  it("accepts the golden bundle", () => {
    expect(bundle.clusters.length).toBeGreaterThan(100);
    expect(bundle.style.n_classes).toBeGreaterThanOrEqual(1);
  });
});
