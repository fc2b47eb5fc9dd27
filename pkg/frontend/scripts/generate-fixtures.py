"""Generate golden test fixtures for the explorer from the primary package.

Run from the repo root with the primary installed:

    python3 frontend/scripts/generate-fixtures.py

Writes JSON fixtures under frontend/test/fixtures/. The explorer's tests
check parity of its TypeScript ports (selection, glyph layout) against
these primary-produced outputs.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from flowscan import (FlowCluster, Neighborhood, SelectionRule, SymbolStyle,
                      classify_strength, layout_glyph, select)
from flowscan.render import MapProjection

OUT = Path(__file__).resolve().parent.parent / "test" / "fixtures"
OUT.mkdir(parents=True, exist_ok=True)


def random_cluster(rng, i, universe=14):
    o = rng.choice(universe, size=int(rng.integers(1, 5)), replace=False)
    d = rng.choice(universe, size=int(rng.integers(1, 5)), replace=False)
    o_ids = [f"o{j}" for j in o]
    d_ids = [f"d{j}" for j in d]

    def nb(center, members):
        return Neighborhood(center, len(members), tuple(members), None,
                            float(rng.uniform(0.01, 0.2)), 1, 1)

    ox, oy = rng.uniform(0, 1, 2)
    dx, dy = rng.uniform(0, 1, 2)
    c = FlowCluster(origin=nb(o_ids[0], o_ids), dest=nb(d_ids[0], d_ids),
                    observed=int(rng.integers(2, 60)),
                    expected=float(rng.uniform(0.1, 5)),
                    lglr=float(rng.uniform(0.5, 120.0)),
                    focal_flow=(o_ids[0], d_ids[0], f"#{i}"),
                    distance=float(np.hypot(dx - ox, dy - oy)),
                    p_value=float(rng.uniform(0, 0.05)),
                    p_value_rank=float(rng.uniform(0, 0.05)))
    coords = {"origin": (float(ox), float(oy)), "dest": (float(dx), float(dy))}
    return c, coords


def bundle_cluster_dict(c, coords):
    d = c.to_dict()
    d["origin"]["cx"], d["origin"]["cy"] = coords["origin"]
    d["dest"]["cx"], d["dest"]["cy"] = coords["dest"]
    # the bundle focal is {o, d}; tie-break uniqueness comes from ids
    return d


def gen_selection_cases():
    cases = []
    rng = np.random.default_rng(42)
    for case_i in range(20):
        n = int(rng.integers(3, 16))
        pairs = [random_cluster(rng, i) for i in range(n)]
        clusters = [p[0] for p in pairs]
        rules = [
            {},
            {"min_lglr": float(rng.uniform(0, 60))},
            {"min_distance": float(rng.uniform(0, 0.8))},
            {"min_p": float(rng.uniform(0.005, 0.05))},
            {"max_clusters": int(rng.integers(1, 5))},
        ]
        rule_docs = []
        for r in rules:
            chosen = select(clusters, SelectionRule(**r))
            rule_docs.append({
                "rule": r,
                "expected": [list(c.focal_flow) for c in chosen],
            })
        cases.append({
            "clusters": [bundle_cluster_dict(c, xy) for c, xy in pairs],
            "rules": rule_docs,
        })
    (OUT / "selection_cases.json").write_text(
        json.dumps(cases, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote selection_cases.json ({len(cases)} cases)")


def gen_zoom_bundle():
    """A real pipeline bundle (small synthetic dataset) for view tests."""
    with tempfile.TemporaryDirectory() as td:
        td = Path(td)
        run = [sys.executable, "-m", "flowscan.cli"]

        def cli(*args):
            subprocess.run([*run, *args], check=True, cwd=td,
                           stdout=subprocess.DEVNULL)

        cli("synth", "--noise", "400", "--seed", "3", "--out", str(td))
        cli("scan", "--locations", "locations.csv", "--flows", "flows.csv",
            "--bound-mode", "by_count", "--max-k", "80",
            "--min-lglr-record", "1", "--out", "clusters.json")
        cli("test", "--locations", "locations.csv", "--flows", "flows.csv",
            "--clusters", "clusters.json", "-L", "20", "--seed", "1",
            "--out", "tested.json")
        cli("bundle", "--clusters", "tested.json",
            "--locations", "locations.csv", "--out", "bundle.json")
        bundle = json.loads((td / "bundle.json").read_text())
    # keep the fixture light: drop everything below a floor
    bundle["clusters"] = [c for c in bundle["clusters"] if c["lglr"] > 2.0]
    (OUT / "zoom_bundle.json").write_text(
        json.dumps(bundle, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote zoom_bundle.json ({len(bundle['clusters'])} clusters)")


def gen_glyph_golden():
    rng = np.random.default_rng(7)
    style = SymbolStyle(show_circles=True, origin_half_opacity=0.6)
    pairs = [random_cluster(rng, i) for i in range(10)]
    clusters = [p[0] for p in pairs]
    extent = (0.0, 0.0, 1.0, 1.0)
    viewport = (1000, 700)
    proj = MapProjection(extent, viewport)
    breaks = classify_strength([c.lglr for c in clusters], style.n_classes)
    out = {"style": style.to_dict(), "extent": list(extent),
           "viewport": list(viewport), "breaks": breaks, "cases": []}
    for c, coords in pairs:
        g = layout_glyph(c, proj, style, breaks,
                         {c.origin.center_id: coords["origin"],
                          c.dest.center_id: coords["dest"]})
        out["cases"].append({
            "cluster": bundle_cluster_dict(c, coords),
            "glyph": {
                "path": [list(p) for p in g.path],
                "width_profile": list(g.width_profile),
                "arrow_length": g.arrow_length,
                "arrow_width": g.arrow_width,
                "color_class": g.color_class,
                "origin_segment_length": g.origin_segment_length,
                "apex": list(g.apex),
                "circles": [list(x) for x in g.circles] if g.circles else None,
            },
        })
    (OUT / "glyph_golden.json").write_text(
        json.dumps(out, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote glyph_golden.json ({len(out['cases'])} cases)")


if __name__ == "__main__":
    gen_selection_cases()
    gen_zoom_bundle()
    gen_glyph_golden()
