/** Zoom-driven regeneralization: map zoom level to effective thresholds,
 * pick a non-overlapping cluster set, and clip to the viewport.
 *
 * The zoom->threshold mapping is linear in zoom level (zoom levels are
 * already logarithmic in map scale): at zoom 0 the strictest endpoints of
 * the bundle's configured ranges apply, at max_level the loosest. User
 * sliders override the mapping.
 *
 * Selection is stratified by zoom level and computed on the full cluster
 * set, then clipped to the viewport. Stratification makes the visible set
 * at zoom z+1 a superset of (visible set at z) ∩ (new viewport): clusters
 * admitted at stricter levels are greedily placed first and are never
 * displaced by clusters that only qualify at looser levels.
 */

import { clustersOverlap } from "./selection.js";
import type { BundleCluster, ExplorerBundle } from "./types.js";

export type Extent = [number, number, number, number];

export interface ViewThresholds {
  /** user override; null = derive from zoom */
  minLglr?: number | null;
  minDistance?: number | null;
  minP?: number | null;
}

export interface EffectiveThresholds {
  minLglr: number;
  minDistance: number;
  minP: number | null;
}

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

export function extentSpan(extent: Extent): number {
  return Math.max(extent[2] - extent[0], extent[3] - extent[1]);
}

/** Effective thresholds at a zoom level (clamped to [0, max_level]). */
export function thresholdsAtZoom(
  bundle: ExplorerBundle,
  zoom: number,
  user: ViewThresholds = {},
): EffectiveThresholds {
  const zm = bundle.zoom_mapping;
  const t = Math.min(Math.max(zoom / zm.max_level, 0), 1);
  const minLglr =
    user.minLglr ?? lerp(zm.lglr_range[0], zm.lglr_range[1], t);
  const distFrac =
    lerp(zm.distance_range[0], zm.distance_range[1], t);
  const minDistance =
    user.minDistance ?? distFrac * extentSpan(bundle.extent);
  return { minLglr, minDistance, minP: user.minP ?? null };
}

function admitsAt(c: BundleCluster, thr: EffectiveThresholds): boolean {
  if (!(c.lglr > thr.minLglr)) return false;
  if (!(c.distance > thr.minDistance)) return false;
  if (thr.minP != null && !(c.p_value != null && c.p_value < thr.minP)) {
    return false;
  }
  return true;
}

function compareStrings(a: string, b: string): number {
  return a < b ? -1 : a > b ? 1 : 0;
}

function rankKey(a: BundleCluster, b: BundleCluster): number {
  if (a.lglr !== b.lglr) return b.lglr - a.lglr;
  const ka = a.origin.k + a.dest.k;
  const kb = b.origin.k + b.dest.k;
  if (ka !== kb) return ka - kb;
  return (
    compareStrings(a.focal.o, b.focal.o) || compareStrings(a.focal.d, b.focal.d)
  );
}

/** Greedy selection stratified by the zoom level at which each cluster
 * first qualifies; within a level, standard LGLR ranking. */
export function selectForZoom(
  bundle: ExplorerBundle,
  zoom: number,
  user: ViewThresholds = {},
): BundleCluster[] {
  const accepted: BundleCluster[] = [];
  const taken = new Set<BundleCluster>();
  const maxLevel = Math.min(Math.floor(zoom), bundle.zoom_mapping.max_level);
  for (let level = 0; level <= maxLevel; level++) {
    const thr = thresholdsAtZoom(bundle, level, user);
    const wave = bundle.clusters
      .filter((c) => !taken.has(c) && admitsAt(c, thr))
      .sort(rankKey);
    for (const c of wave) {
      taken.add(c); // qualified at this level; never re-considered
      if (!accepted.some((s) => clustersOverlap(c, s))) accepted.push(c);
    }
  }
  return accepted;
}

/** Cluster/viewport intersection: the segment's bounding box, padded by the
 * neighborhood radii, must meet the viewport rectangle. */
export function inViewport(c: BundleCluster, viewport: Extent): boolean {
  const x0 = Math.min(c.origin.cx - c.origin.radius, c.dest.cx - c.dest.radius);
  const x1 = Math.max(c.origin.cx + c.origin.radius, c.dest.cx + c.dest.radius);
  const y0 = Math.min(c.origin.cy - c.origin.radius, c.dest.cy - c.dest.radius);
  const y1 = Math.max(c.origin.cy + c.origin.radius, c.dest.cy + c.dest.radius);
  return x1 >= viewport[0] && x0 <= viewport[2] &&
    y1 >= viewport[1] && y0 <= viewport[3];
}

/** The visible cluster list for one view state. */
export function applyView(
  bundle: ExplorerBundle,
  viewport: Extent,
  zoom: number,
  user: ViewThresholds = {},
): BundleCluster[] {
  return selectForZoom(bundle, zoom, user).filter((c) =>
    inViewport(c, viewport),
  );
}
