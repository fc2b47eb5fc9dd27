/** Client-side port of the greedy non-overlapping cluster selection.
 *
 * Semantics mirror the Python pipeline exactly: strict thresholds
 * (lglr >, distance >, p <), ranking by descending LGLR with ties broken
 * by smaller k_O + k_D then lexicographic focal ids, and greedy acceptance
 * unless a candidate overlaps an already-accepted cluster at BOTH ends.
 */

import type { BundleCluster } from "./types.js";

export interface SelectionRule {
  maxClusters?: number | null;
  minLglr?: number | null;
  minDistance?: number | null;
  minP?: number | null;
}

function memberSet(ids: string[]): Set<string> {
  return new Set(ids);
}

function intersects(a: Set<string>, b: Set<string>): boolean {
  const [small, large] = a.size <= b.size ? [a, b] : [b, a];
  for (const x of small) {
    if (large.has(x)) return true;
  }
  return false;
}

/** True iff the clusters intersect at the origin AND at the destination. */
export function clustersOverlap(a: BundleCluster, b: BundleCluster): boolean {
  return (
    intersects(memberSet(a.origin.members), memberSet(b.origin.members)) &&
    intersects(memberSet(a.dest.members), memberSet(b.dest.members))
  );
}

function admits(c: BundleCluster, rule: SelectionRule): boolean {
  if (rule.minLglr != null && !(c.lglr > rule.minLglr)) return false;
  if (rule.minDistance != null && !(c.distance > rule.minDistance)) return false;
  if (rule.minP != null) {
    if (c.p_value == null || !(c.p_value < rule.minP)) return false;
  }
  return true;
}

function compareStrings(a: string, b: string): number {
  // code-unit comparison (matches byte-wise ordering for ASCII ids)
  return a < b ? -1 : a > b ? 1 : 0;
}

function sortKey(a: BundleCluster, b: BundleCluster): number {
  if (a.lglr !== b.lglr) return b.lglr - a.lglr;
  const ka = a.origin.k + a.dest.k;
  const kb = b.origin.k + b.dest.k;
  if (ka !== kb) return ka - kb;
  return (
    compareStrings(a.focal.o, b.focal.o) || compareStrings(a.focal.d, b.focal.d)
  );
}

/** Threshold, rank, and greedily pick non-overlapping clusters.
 * Output order is acceptance order (descending LGLR). */
export function select(
  clusters: BundleCluster[],
  rule: SelectionRule = {},
): BundleCluster[] {
  const candidates = clusters.filter((c) => admits(c, rule)).sort(sortKey);
  const accepted: BundleCluster[] = [];
  for (const c of candidates) {
    if (rule.maxClusters != null && accepted.length >= rule.maxClusters) break;
    if (accepted.some((s) => clustersOverlap(c, s))) continue;
    accepted.push(c);
  }
  return accepted;
}
