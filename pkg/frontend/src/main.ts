/** Browser entry point: load a bundle, pan/zoom with zoom-driven
 * regeneralization, inspect clusters, shareable view state in the URL hash.
 */

import {
  classifyStrength,
  glyphSvg,
  layoutGlyph,
  MapProjection,
} from "./glyph.js";
import type { BundleCluster, ExplorerBundle } from "./types.js";
import { parseBundle, BundleFormatError } from "./types.js";
import { applyView, thresholdsAtZoom, type Extent } from "./view.js";

interface ViewState {
  zoom: number;
  /** viewport center in dataset units */
  cx: number;
  cy: number;
  minLglr: number | null;
  minDistance: number | null;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export class Explorer {
  private bundle: ExplorerBundle | null = null;
  private state: ViewState = {
    zoom: 0,
    cx: 0,
    cy: 0,
    minLglr: null,
    minDistance: null,
  };
  private selected: BundleCluster | null = null;
  private debounceTimer: number | undefined;

  constructor(
    private readonly root: HTMLElement,
    private readonly viewport: [number, number] = [1000, 700],
  ) {}

  loadBundle(doc: unknown): void {
    try {
      this.bundle = parseBundle(doc);
    } catch (err) {
      if (err instanceof BundleFormatError) {
        this.root.textContent = `Could not load bundle: ${err.message}`;
        return;
      }
      throw err;
    }
    const [x0, y0, x1, y1] = this.bundle.extent;
    this.state.cx = (x0 + x1) / 2;
    this.state.cy = (y0 + y1) / 2;
    this.readHash();
    this.render();
  }

  /** Viewport extent in dataset units for the current center/zoom. */
  viewExtent(): Extent {
    const b = this.bundle!;
    const spanX = (b.extent[2] - b.extent[0]) / 2 ** this.state.zoom;
    const spanY = (b.extent[3] - b.extent[1]) / 2 ** this.state.zoom;
    return [
      this.state.cx - spanX / 2,
      this.state.cy - spanY / 2,
      this.state.cx + spanX / 2,
      this.state.cy + spanY / 2,
    ];
  }

  setZoom(zoom: number): void {
    const max = this.bundle?.zoom_mapping.max_level ?? 8;
    this.state.zoom = Math.min(Math.max(zoom, 0), max);
    this.scheduleRender();
  }

  panTo(cx: number, cy: number): void {
    this.state.cx = cx;
    this.state.cy = cy;
    this.scheduleRender();
  }

  setThresholds(minLglr: number | null, minDistance: number | null): void {
    this.state.minLglr = minLglr;
    this.state.minDistance = minDistance;
    this.scheduleRender();
  }

  visibleClusters(): BundleCluster[] {
    return applyView(this.bundle!, this.viewExtent(), this.state.zoom, {
      minLglr: this.state.minLglr,
      minDistance: this.state.minDistance,
    });
  }

  private scheduleRender(): void {
    // debounce: sliders and wheel events fire in bursts
    if (this.debounceTimer !== undefined) clearTimeout(this.debounceTimer);
    this.debounceTimer = setTimeout(() => this.render(), 50) as unknown as number;
  }

  render(): void {
    if (!this.bundle) return;
    this.writeHash();
    const visible = this.visibleClusters();
    const [w, h] = this.viewport;
    const proj = new MapProjection(this.viewExtent(), this.viewport);
    const style = this.bundle.style;
    const breaks = visible.length
      ? classifyStrength(visible.map((c) => c.lglr), style.n_classes)
      : [];
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("width", String(w));
    svg.setAttribute("height", String(h));
    svg.setAttribute("viewBox", `0 0 ${w} ${h}`);
    const drawOrder = [...visible].sort((a, b) => a.lglr - b.lglr);
    let body = "";
    for (const c of drawOrder) {
      body += glyphSvg(layoutGlyph(c, proj, style, breaks), style) + "\n";
    }
    svg.innerHTML = body;
    svg.addEventListener("click", (ev) => this.onClick(ev, drawOrder));
    this.root.replaceChildren(svg);
    if (this.selected && visible.includes(this.selected)) {
      this.drawInspection(svg, proj, this.selected);
    } else {
      this.selected = null;
    }
  }

  private onClick(ev: MouseEvent, drawOrder: BundleCluster[]): void {
    const g = (ev.target as Element).closest("g.flow-glyph");
    if (!g) {
      this.selected = null; // click on empty map clears the overlay
      this.render();
      return;
    }
    const parent = g.parentNode as Element;
    const idx = Array.from(parent.querySelectorAll("g.flow-glyph")).indexOf(g);
    this.selected = drawOrder[idx] ?? null;
    this.render();
  }

  /** Inspection overlay: neighborhood circles plus a stats panel. */
  private drawInspection(
    svg: SVGSVGElement,
    proj: MapProjection,
    c: BundleCluster,
  ): void {
    const overlay = document.createElementNS(SVG_NS, "g");
    overlay.setAttribute("class", "inspect-overlay");
    for (const nb of [c.origin, c.dest]) {
      const [px, py] = proj.point(nb.cx, nb.cy);
      const circle = document.createElementNS(SVG_NS, "circle");
      circle.setAttribute("cx", px.toFixed(3));
      circle.setAttribute("cy", py.toFixed(3));
      circle.setAttribute("r", Math.max(proj.length(nb.radius), 1).toFixed(3));
      circle.setAttribute("fill", "none");
      circle.setAttribute("stroke", "#d04000");
      circle.setAttribute("stroke-width", "1.5");
      overlay.appendChild(circle);
    }
    svg.appendChild(overlay);
    const panel = document.createElement("div");
    panel.className = "inspect-panel";
    const thr = thresholdsAtZoom(this.bundle!, this.state.zoom, {
      minLglr: this.state.minLglr,
      minDistance: this.state.minDistance,
    });
    panel.textContent =
      `${c.focal.o} → ${c.focal.d}  ` +
      `observed=${c.observed} expected=${c.expected.toFixed(2)} ` +
      `LGLR=${c.lglr.toFixed(1)} ` +
      (c.p_value != null ? `p=${c.p_value.toExponential(2)} ` : "") +
      `scales k_O=${c.origin.k} k_D=${c.dest.k} ` +
      `(view min_lglr=${thr.minLglr.toFixed(1)})`;
    this.root.appendChild(panel);
  }

  private readHash(): void {
    const params = new URLSearchParams(location.hash.slice(1));
    const z = params.get("z");
    const cx = params.get("cx");
    const cy = params.get("cy");
    const lg = params.get("lglr");
    const di = params.get("dist");
    if (z !== null) this.state.zoom = Number(z);
    if (cx !== null) this.state.cx = Number(cx);
    if (cy !== null) this.state.cy = Number(cy);
    this.state.minLglr = lg !== null ? Number(lg) : null;
    this.state.minDistance = di !== null ? Number(di) : null;
  }

  private writeHash(): void {
    const params = new URLSearchParams();
    params.set("z", String(this.state.zoom));
    params.set("cx", this.state.cx.toPrecision(8));
    params.set("cy", this.state.cy.toPrecision(8));
    if (this.state.minLglr != null) params.set("lglr", String(this.state.minLglr));
    if (this.state.minDistance != null) {
      params.set("dist", String(this.state.minDistance));
    }
    history.replaceState(null, "", `#${params.toString()}`);
  }
}

/** Wire up the page: file picker, zoom slider, threshold sliders. */
export function boot(): void {
  const root = document.getElementById("map");
  if (!root) return;
  const explorer = new Explorer(root);
  const file = document.getElementById("bundle-file") as HTMLInputElement | null;
  file?.addEventListener("change", async () => {
    const f = file.files?.[0];
    if (!f) return;
    explorer.loadBundle(JSON.parse(await f.text()));
  });
  const zoom = document.getElementById("zoom") as HTMLInputElement | null;
  zoom?.addEventListener("input", () => explorer.setZoom(Number(zoom.value)));
  const lglr = document.getElementById("min-lglr") as HTMLInputElement | null;
  const dist = document.getElementById("min-dist") as HTMLInputElement | null;
  const onThreshold = (): void =>
    explorer.setThresholds(
      lglr && lglr.value !== "" ? Number(lglr.value) : null,
      dist && dist.value !== "" ? Number(dist.value) : null,
    );
  lglr?.addEventListener("input", onThreshold);
  dist?.addEventListener("input", onThreshold);
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
