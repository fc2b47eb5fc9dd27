"""Static SVG flow map: tapered, curved, arrow-terminated cluster symbols.

Each glyph encodes six attributes: origin/destination locations (curve
endpoints), origin scale (length of the pronounced curved segment leaving
the origin), destination scale (arrow length), strength (midpoint width and
color class), and direction (taper plus arrowhead).

All numeric symbol constants live in :class:`SymbolStyle`; geometry is pure
and the emitted document is byte-identical across runs.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .scan import FlowCluster

CURVE_SAMPLES = 32           # offsets per curve side when building outlines
MIN_SEGMENT_PX = 4.0         # floor for origin segment / arrow length
MAX_SEGMENT_CHORD_FRAC = 0.5 # ceiling as a fraction of the chord
P1_MIN_CHORD_FRAC = 0.15     # first control point distance floor
TAPER_ORIGIN_FACTOR = 1.5    # origin width relative to mid width
TAPER_TIP_FACTOR = 0.4       # pre-arrow width relative to mid width
LIGHTNESS_RANGE = (0.82, 0.30)  # single-hue ramp endpoints (light -> dark)


@dataclass(frozen=True)
class SymbolStyle:
    n_classes: int = 5
    hue: float = 210.0                 # degrees
    w_mid_min: float = 1.5             # px
    w_mid_max: float = 8.0             # px
    curvature_coeff: float = 0.2       # perpendicular offset fraction of chord
    origin_half_opacity: float = 1.0
    show_circles: bool = False

    def __post_init__(self):
        if not (0 < self.w_mid_min < self.w_mid_max):
            raise ValueError("need 0 < w_mid_min < w_mid_max")
        if not (1 <= self.n_classes <= 9):
            raise ValueError("n_classes must be in 1..9")
        if not (0.0 <= self.origin_half_opacity <= 1.0):
            raise ValueError("origin_half_opacity must be in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FlowGlyph:
    """Resolved pixel geometry of one cluster's symbol."""
    path: tuple  # ((x0,y0), (x1,y1), (x2,y2), (x3,y3)) cubic control points
    width_profile: tuple[float, float, float]  # origin, mid, pre-arrow
    arrow_length: float
    arrow_width: float
    color_class: int
    origin_segment_length: float
    apex: tuple[float, float]          # arrowhead apex = projected dest center
    circles: tuple | None = None       # ((cx,cy,r) origin, (cx,cy,r) dest)
    lglr: float = 0.0


class MapProjection:
    """Uniform-scale fit of a data extent into a pixel viewport (y down)."""

    def __init__(self, extent, viewport, padding: float = 20.0):
        minx, miny, maxx, maxy = extent
        w, h = viewport
        spanx = max(maxx - minx, 1e-12)
        spany = max(maxy - miny, 1e-12)
        self.scale = min((w - 2 * padding) / spanx, (h - 2 * padding) / spany)
        self.ox = padding + ((w - 2 * padding) - spanx * self.scale) / 2 - minx * self.scale
        self.oy = padding + ((h - 2 * padding) - spany * self.scale) / 2 + maxy * self.scale
        self.viewport = (w, h)

    def point(self, x: float, y: float) -> tuple[float, float]:
        return (self.ox + x * self.scale, self.oy - y * self.scale)

    def length(self, d: float) -> float:
        return d * self.scale


def classify_strength(lglr_values, n_classes: int) -> list[float]:
    """Quantile class breaks producing near-equal-count classes.

    Convention: breaks are the linear-interpolation quantiles at
    i/n_classes for i = 1..n_classes-1; a value lands in class
    #{breaks strictly below it}.  Duplicate breaks collapse (fewer
    effective classes) deterministically.
    """
    vals = np.asarray(list(lglr_values), dtype=np.float64)
    if len(vals) == 0:
        raise ValueError("values must be non-empty")
    if n_classes < 1:
        raise ValueError("n_classes must be >= 1")
    if n_classes == 1:
        return []
    qs = np.arange(1, n_classes) / n_classes
    return [float(b) for b in np.quantile(vals, qs)]


def class_of(value: float, breaks) -> int:
    return int(sum(value > b for b in breaks))


def _unit(vx: float, vy: float) -> tuple[float, float]:
    n = math.hypot(vx, vy)
    if n == 0:
        return (0.0, 0.0)
    return (vx / n, vy / n)


def layout_glyph(cluster: FlowCluster, projection: MapProjection,
                 style: SymbolStyle, breaks,
                 coords: dict) -> FlowGlyph:
    """Resolve one cluster's symbol geometry in pixels.

    ``coords`` maps location id -> (x, y) in dataset units.  The curve bends
    clockwise relative to the flow direction (screen coordinates), so
    reciprocal flows separate.
    """
    a = projection.point(*coords[cluster.origin.center_id])
    b = projection.point(*coords[cluster.dest.center_id])
    chord = math.hypot(b[0] - a[0], b[1] - a[1])
    if chord == 0:
        raise ValueError("zero chord: origin and destination centers coincide")
    ux, uy = (b[0] - a[0]) / chord, (b[1] - a[1]) / chord
    # clockwise normal in a y-down pixel frame
    nx, ny = -uy, ux

    cls = class_of(cluster.lglr, breaks)
    n_eff = max(len(breaks), 1)
    frac = cls / n_eff
    w_mid = style.w_mid_min + (style.w_mid_max - style.w_mid_min) * frac
    widths = (TAPER_ORIGIN_FACTOR * w_mid, w_mid, TAPER_TIP_FACTOR * w_mid)

    def clamp_seg(v: float) -> float:
        return min(max(v, MIN_SEGMENT_PX), MAX_SEGMENT_CHORD_FRAC * chord)

    origin_seg = clamp_seg(projection.length(cluster.origin.radius))
    arrow_len = clamp_seg(projection.length(cluster.dest.radius))
    arrow_w = 2.0 * w_mid

    # bend target: midpoint pushed off-chord by curvature_coeff * chord
    mx = (a[0] + b[0]) / 2 + style.curvature_coeff * chord * nx
    my = (a[1] + b[1]) / 2 + style.curvature_coeff * chord * ny
    # quadratic control point whose curve midpoint is (mx, my)
    qx = 2 * mx - (a[0] + b[0]) / 2
    qy = 2 * my - (a[1] + b[1]) / 2

    d1 = max(origin_seg, P1_MIN_CHORD_FRAC * chord)
    u1 = _unit(qx - a[0], qy - a[1])
    p1 = (a[0] + d1 * u1[0], a[1] + d1 * u1[1])

    tin = _unit(b[0] - qx, b[1] - qy)  # incoming tangent at the destination
    p3 = (b[0] - arrow_len * tin[0], b[1] - arrow_len * tin[1])
    d2 = 0.3 * chord
    p2 = (p3[0] - d2 * tin[0], p3[1] - d2 * tin[1])

    circles = None
    if style.show_circles:
        circles = ((a[0], a[1], max(projection.length(cluster.origin.radius), 1.0)),
                   (b[0], b[1], max(projection.length(cluster.dest.radius), 1.0)))

    return FlowGlyph(path=(a, p1, p2, p3), width_profile=widths,
                     arrow_length=arrow_len, arrow_width=arrow_w,
                     color_class=cls, origin_segment_length=origin_seg,
                     apex=b, circles=circles, lglr=cluster.lglr)


def _bezier(path, t):
    (x0, y0), (x1, y1), (x2, y2), (x3, y3) = path
    s = 1 - t
    x = s**3 * x0 + 3 * s**2 * t * x1 + 3 * s * t**2 * x2 + t**3 * x3
    y = s**3 * y0 + 3 * s**2 * t * y1 + 3 * s * t**2 * y2 + t**3 * y3
    dx = 3 * s**2 * (x1 - x0) + 6 * s * t * (x2 - x1) + 3 * t**2 * (x3 - x2)
    dy = 3 * s**2 * (y1 - y0) + 6 * s * t * (y2 - y1) + 3 * t**2 * (y3 - y2)
    return x, y, dx, dy


def _width_at(glyph: FlowGlyph, t: float) -> float:
    wo, wm, wt = glyph.width_profile
    if t <= 0.5:
        return wo + (wm - wo) * (t / 0.5)
    return wm + (wt - wm) * ((t - 0.5) / 0.5)


def _outline_points(glyph: FlowGlyph, t0: float, t1: float):
    left, right = [], []
    for i in range(CURVE_SAMPLES + 1):
        t = t0 + (t1 - t0) * i / CURVE_SAMPLES
        x, y, dx, dy = _bezier(glyph.path, t)
        tx, ty = _unit(dx, dy)
        nx, ny = -ty, tx
        hw = _width_at(glyph, t) / 2
        left.append((x + hw * nx, y + hw * ny))
        right.append((x - hw * nx, y - hw * ny))
    return left + right[::-1]


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _poly_path(points) -> str:
    parts = [f"M {_fmt(points[0][0])} {_fmt(points[0][1])}"]
    parts += [f"L {_fmt(x)} {_fmt(y)}" for x, y in points[1:]]
    return " ".join(parts) + " Z"


def class_color(cls: int, n_classes: int, hue: float) -> str:
    lo, hi = LIGHTNESS_RANGE
    frac = cls / max(n_classes - 1, 1)
    light = lo + (hi - lo) * frac
    r, g, b = colorsys.hls_to_rgb((hue % 360) / 360.0, light, 0.75)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def _glyph_svg(glyph: FlowGlyph, style: SymbolStyle) -> str:
    color = class_color(glyph.color_class, style.n_classes, style.hue)
    origin_half = _poly_path(_outline_points(glyph, 0.0, 0.5))
    dest_half = _poly_path(_outline_points(glyph, 0.5, 1.0))
    # arrowhead: apex at the destination center, base across the curve end
    x3, y3 = glyph.path[3]
    ax, ay = glyph.apex
    tx, ty = _unit(ax - x3, ay - y3)
    nx, ny = -ty, tx
    hw = glyph.arrow_width / 2
    head = [(ax, ay), (x3 + hw * nx, y3 + hw * ny), (x3 - hw * nx, y3 - hw * ny)]
    parts = [f'<g class="flow-glyph" data-lglr="{glyph.lglr:.6f}" '
             f'data-class="{glyph.color_class}">']
    op = (f' fill-opacity="{style.origin_half_opacity:.3f}"'
          if style.origin_half_opacity < 1.0 else "")
    parts.append(f'<path d="{origin_half}" fill="{color}"{op}/>')
    parts.append(f'<path d="{dest_half}" fill="{color}"/>')
    parts.append(f'<path d="{_poly_path(head)}" fill="{color}"/>')
    if glyph.circles is not None:
        for cx, cy, r in glyph.circles:
            parts.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" '
                         f'fill="none" stroke="{color}" stroke-width="1"/>')
    parts.append("</g>")
    return "\n".join(parts)


def data_extent(clusters, coords, basemap=None):
    xs, ys = [], []
    for c in clusters:
        for nid in (c.origin.center_id, c.dest.center_id):
            x, y = coords[nid]
            xs.append(x)
            ys.append(y)
    if basemap:
        for poly in basemap:
            for x, y in poly["ring"]:
                xs.append(x)
                ys.append(y)
    if not xs:
        return (0.0, 0.0, 1.0, 1.0)
    return (min(xs), min(ys), max(xs), max(ys))


def render_svg(clusters, coords, style: SymbolStyle | None = None,
               viewport: tuple[int, int] = (1000, 700),
               basemap=None) -> str:
    """Render selected clusters to an SVG 1.1 document string.

    ``coords`` maps location id -> (x, y).  ``basemap`` is an optional list
    of {"id": ..., "ring": [[x, y], ...]} polygons in the same CRS.  Glyphs
    draw in ascending LGLR order so strong clusters render on top.
    """
    if style is None:
        style = SymbolStyle()
    w, h = viewport
    proj = MapProjection(data_extent(clusters, coords, basemap), viewport)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="#ffffff"/>',
    ]
    if basemap:
        lines.append('<g class="basemap">')
        for poly in basemap:
            pts = [proj.point(x, y) for x, y in poly["ring"]]
            lines.append(f'<path d="{_poly_path(pts)}" fill="#f2f2ef" '
                         f'stroke="#c8c8c4" stroke-width="0.6"/>')
        lines.append("</g>")
    breaks = classify_strength([c.lglr for c in clusters],
                               style.n_classes) if clusters else []
    for c in sorted(clusters, key=lambda c: (c.lglr, c.focal_flow)):
        glyph = layout_glyph(c, proj, style, breaks, coords)
        lines.append(_glyph_svg(glyph, style))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
