/** Schema of the bundle JSON written by `flowscan bundle`. */

export interface BundleNeighborhood {
  center: string;
  k: number;
  radius: number;
  members: string[];
  outflow_total: number;
  inflow_total: number;
  /** center coordinates in dataset units, added by the bundle exporter */
  cx: number;
  cy: number;
}

export interface BundleCluster {
  focal: { o: string; d: string };
  origin: BundleNeighborhood;
  dest: BundleNeighborhood;
  observed: number;
  expected: number;
  lglr: number;
  distance: number;
  p_value?: number | null;
  p_value_rank?: number | null;
  selected?: boolean;
  acceptance_rank?: number;
}

export interface BundleStyle {
  n_classes: number;
  hue: number;
  w_mid_min: number;
  w_mid_max: number;
  curvature_coeff: number;
  origin_half_opacity: number;
  show_circles: boolean;
}

export interface ZoomMapping {
  max_level: number;
  /** effective min_lglr at zoom 0 -> at max_level */
  lglr_range: [number, number];
  /** effective min_distance as a fraction of the extent span, zoom 0 -> max */
  distance_range: [number, number];
}

export interface GumbelFitDoc {
  mu: number;
  beta: number;
}

export interface ExplorerBundle {
  clusters: BundleCluster[];
  fit: GumbelFitDoc | null;
  /** [x0, y0, x1, y1] in dataset units */
  extent: [number, number, number, number];
  style: BundleStyle;
  zoom_mapping: ZoomMapping;
  basemap?: unknown;
  metadata?: Record<string, unknown>;
}

export class BundleFormatError extends Error {}

/** Parse and structurally validate a bundle document. */
export function parseBundle(doc: unknown): ExplorerBundle {
  if (typeof doc !== "object" || doc === null) {
    throw new BundleFormatError("bundle must be a JSON object");
  }
  const b = doc as Record<string, unknown>;
  if (!Array.isArray(b.clusters)) {
    throw new BundleFormatError("bundle.clusters must be an array");
  }
  if (!Array.isArray(b.extent) || b.extent.length !== 4) {
    throw new BundleFormatError("bundle.extent must be [x0, y0, x1, y1]");
  }
  for (const c of b.clusters as BundleCluster[]) {
    if (
      typeof c.lglr !== "number" ||
      typeof c.distance !== "number" ||
      !c.origin ||
      !c.dest ||
      typeof c.origin.cx !== "number" ||
      typeof c.dest.cx !== "number"
    ) {
      throw new BundleFormatError("malformed cluster entry");
    }
  }
  if (typeof b.style !== "object" || b.style === null) {
    throw new BundleFormatError("bundle.style missing");
  }
  if (typeof b.zoom_mapping !== "object" || b.zoom_mapping === null) {
    throw new BundleFormatError("bundle.zoom_mapping missing");
  }
  return doc as ExplorerBundle;
}
