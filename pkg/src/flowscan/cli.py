"""Command-line pipeline: synth | scan | test | select | render | bundle.

Exit codes: 0 success, 2 input error, 3 infeasible statistical operation.
Every subcommand accepts ``--config FILE`` (JSON defaults, overridden by
explicit flags) and ``--save-config FILE`` (writes the effective settings),
so a persisted config reproduces every output byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import synth as synthmod
from .dataset import IngestionError, load_dataset
from .render import SymbolStyle, render_svg
from .scan import ScanConfig, cluster_from_dict, scan_all
from .selection import SelectionRule, select
from .significance import (DEFAULT_PASSES, DEFAULT_PERMUTATIONS, GumbelFit,
                           PermutationInfeasibleError, fit_gumbel,
                           monte_carlo, p_value_gumbel, p_value_rank)

PRESETS = {"dataset1": 5400, "dataset2": 6600, "dataset3": 7800, "dataset4": 9000}

# zoom -> display-threshold mapping defaults shipped to the explorer bundle
ZOOM_LGLR_RANGE = (300.0, 0.0)      # min_lglr at zoom 0 -> at max zoom
ZOOM_DISTANCE_RANGE = (0.25, 0.0)   # min_distance as a fraction of extent span
ZOOM_MAX_LEVEL = 8


def _fail(code: int, message: str):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(code)


def _load_config_defaults(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Fill unset (None) args from --config JSON, then record the effective
    settings with --save-config."""
    if getattr(args, "config", None):
        try:
            stored = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            _fail(2, f"cannot read config: {exc}")
        for key, value in stored.items():
            if getattr(args, key, None) in (None, []):
                setattr(args, key, value)
    return args


def _save_config(args: argparse.Namespace, skip=("config", "save_config", "func")):
    if getattr(args, "save_config", None):
        payload = {k: v for k, v in vars(args).items()
                   if k not in skip and not callable(v)}
        Path(args.save_config).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def _read_clusters(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        _fail(2, f"cannot read clusters file: {exc}")
    return [cluster_from_dict(d) for d in doc["clusters"]], doc.get("metadata", {})


def _dataset_from_args(args):
    try:
        return load_dataset(args.locations, args.flows,
                            geometry_mode=args.geometry or "planar")
    except IngestionError as exc:
        _fail(2, str(exc))


def _scan_config_from(args, metadata=None):
    md = metadata or {}
    bound_mode = args.bound_mode or md.get("bound_mode") or "by_volume"
    max_k = args.max_k
    max_size = args.max_size
    if md and max_k is None and max_size is None and md.get("bound_value"):
        if bound_mode == "by_count":
            max_k = md["bound_value"]
        else:
            max_size = md["bound_value"]
    return ScanConfig(bound_mode=bound_mode, max_k=max_k, max_size=max_size,
                      min_lglr_record=args.min_lglr_record or 0.0,
                      n_workers=args.workers)


# -- subcommands -------------------------------------------------------------

def cmd_synth(args):
    if args.preset:
        if args.preset not in PRESETS:
            _fail(2, f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
        noise = PRESETS[args.preset]
    elif args.noise is not None:
        noise = args.noise
    else:
        _fail(2, "synth requires --preset or --noise")
    if noise < 0:
        _fail(2, "--noise must be >= 0")
    spec = synthmod.default_spec(noise, seed=args.seed or 0)
    result = synthmod.generate(spec)
    paths = synthmod.write_files(result, args.out or ".")
    ds = result.dataset
    planted = sum(pc.count for pc in spec.planted)
    print(f"wrote {paths['locations']}, {paths['flows']}, {paths['labels']}")
    print(f"locations={ds.m} flows={ds.n} total_volume={ds.F} "
          f"planted={planted} noise={noise} padded_last_stratum={result.padded_noise}")
    return 0


def cmd_scan(args):
    dataset = _dataset_from_args(args)
    config = _scan_config_from(args)
    result = scan_all(dataset, config)
    doc = {"clusters": [c.to_dict() for c in result.clusters],
           "metadata": result.metadata()}
    _write_json(args.out, doc)
    print(f"focal flows={dataset.n} clusters={len(result.clusters)} "
          f"candidates_evaluated={result.candidates_evaluated} "
          f"wall_time={result.wall_time:.3f}s")
    return 0


def cmd_test(args):
    dataset = _dataset_from_args(args)
    clusters, metadata = _read_clusters(args.clusters)
    config = _scan_config_from(args, metadata)
    L = args.permutations if args.permutations is not None else DEFAULT_PERMUTATIONS
    passes = args.passes if args.passes is not None else DEFAULT_PASSES
    try:
        null = monte_carlo(dataset, config, L, args.seed or 0, passes=passes)
    except PermutationInfeasibleError as exc:
        _fail(3, str(exc))
    try:
        fit = fit_gumbel(null.maxima)
    except ValueError:
        fit = None  # too few permutations for a fit; rank p-values still apply
    for c in clusters:
        c.p_value = p_value_gumbel(c.lglr, fit) if fit else None
        c.p_value_rank = p_value_rank(c.lglr, null)
    if args.null_out:
        _write_json(args.null_out, null.to_dict(fit))
    fit_doc = {"mu": fit.mu, "beta": fit.beta} if fit else None
    _write_json(args.out, {"clusters": [c.to_dict() for c in clusters],
                           "metadata": {**metadata, "L": L, "seed": args.seed or 0,
                                        "passes": passes, "fit": fit_doc}})
    fit_msg = f"fit mu={fit.mu:.4f} beta={fit.beta:.4f}" if fit else "fit n/a"
    print(f"L={L} max_maxima={float(null.maxima.max()):.3f} {fit_msg} "
          f"skipped_swaps={null.skipped_swaps_total}")
    return 0


def cmd_select(args):
    clusters, metadata = _read_clusters(args.clusters)
    rule = SelectionRule(max_clusters=args.max_clusters,
                         min_lglr=args.min_lglr,
                         min_distance=args.min_distance,
                         min_p=args.min_p)
    chosen = select(clusters, rule)
    out = []
    for rank, c in enumerate(chosen, start=1):
        d = c.to_dict()
        d["selected"] = True
        d["acceptance_rank"] = rank
        out.append(d)
    _write_json(args.out, {"clusters": out,
                           "metadata": {**metadata,
                                        "rule": {"max_clusters": args.max_clusters,
                                                 "min_lglr": args.min_lglr,
                                                 "min_distance": args.min_distance,
                                                 "min_p": args.min_p}}})
    print(f"selected {len(chosen)} of {len(clusters)} clusters")
    return 0


def _style_from_args(args) -> SymbolStyle:
    kwargs = {}
    for name in ("n_classes", "hue", "w_mid_min", "w_mid_max",
                 "curvature_coeff", "origin_half_opacity"):
        v = getattr(args, name, None)
        if v is not None:
            kwargs[name] = v
    if getattr(args, "show_circles", False):
        kwargs["show_circles"] = True
    return SymbolStyle(**kwargs)


def _load_basemap(path):
    if not path:
        return None
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        _fail(2, f"cannot read basemap: {exc}")


def _coords_from_locations(args):
    dsloc = {}
    import csv
    with open(args.locations, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            dsloc[row["id"]] = (float(row["x"]), float(row["y"]))
    return dsloc


def cmd_render(args):
    clusters, _ = _read_clusters(args.clusters)
    coords = _coords_from_locations(args)
    style = _style_from_args(args)
    svg = render_svg(clusters, coords, style=style,
                     viewport=(args.width or 1000, args.height or 700),
                     basemap=_load_basemap(args.basemap))
    Path(args.out).write_text(svg, encoding="utf-8")
    print(f"wrote {args.out} ({len(clusters)} glyphs)")
    return 0


def cmd_bundle(args):
    clusters, metadata = _read_clusters(args.clusters)
    coords = _coords_from_locations(args)
    missing = [c.focal_flow for c in clusters
               if c.origin.center_id not in coords or c.dest.center_id not in coords]
    if missing:
        _fail(2, f"{len(missing)} cluster centers missing from locations file")
    xs = [coords[c.origin.center_id][0] for c in clusters] + \
         [coords[c.dest.center_id][0] for c in clusters]
    ys = [coords[c.origin.center_id][1] for c in clusters] + \
         [coords[c.dest.center_id][1] for c in clusters]
    extent = ([min(xs), min(ys), max(xs), max(ys)] if xs else [0, 0, 1, 1])
    out_clusters = []
    for c in clusters:
        d = c.to_dict()
        d["origin"]["cx"], d["origin"]["cy"] = coords[c.origin.center_id]
        d["dest"]["cx"], d["dest"]["cy"] = coords[c.dest.center_id]
        out_clusters.append(d)
    fit = metadata.get("fit")
    bundle = {
        "clusters": out_clusters,
        "fit": fit,
        "extent": extent,
        "style": _style_from_args(args).to_dict(),
        "zoom_mapping": {"max_level": ZOOM_MAX_LEVEL,
                         "lglr_range": list(ZOOM_LGLR_RANGE),
                         "distance_range": list(ZOOM_DISTANCE_RANGE)},
        "metadata": metadata,
    }
    if args.basemap:
        bundle["basemap"] = _load_basemap(args.basemap)
    _write_json(args.out, bundle)
    print(f"wrote {args.out} ({len(out_clusters)} clusters)")
    return 0


# -- parser -------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="JSON file with default argument values")
    p.add_argument("--save-config", dest="save_config",
                   help="write effective settings to this JSON file")


def _add_scan_config(p):
    p.add_argument("--bound-mode", dest="bound_mode",
                   choices=["by_count", "by_volume"])
    p.add_argument("--max-k", dest="max_k", type=int)
    p.add_argument("--max-size", dest="max_size", type=int)
    p.add_argument("--min-lglr-record", dest="min_lglr_record", type=float)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowscan",
        description="Cross-scale OD flow cluster detection and flow mapping")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark dataset")
    p.add_argument("--preset", help="dataset1..dataset4 (noise 5400..9000)")
    p.add_argument("--noise", type=int, help="noise flow count")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory", default=".")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("scan", help="run the cross-scale cluster scan")
    p.add_argument("--locations", required=True)
    p.add_argument("--flows", required=True)
    p.add_argument("--geometry", choices=["planar", "spherical"])
    _add_scan_config(p)
    p.add_argument("--out", required=True, help="clusters JSON output")
    _add_common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("test", help="permutation test and Gumbel p-values")
    p.add_argument("--locations", required=True)
    p.add_argument("--flows", required=True)
    p.add_argument("--geometry", choices=["planar", "spherical"])
    p.add_argument("--clusters", required=True, help="scan output JSON")
    p.add_argument("-L", "--permutations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--passes", type=int)
    _add_scan_config(p)
    p.add_argument("--null-out", dest="null_out", help="null distribution JSON")
    p.add_argument("--out", required=True, help="annotated clusters JSON")
    _add_common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("select", help="greedy non-overlapping selection")
    p.add_argument("--clusters", required=True)
    p.add_argument("--max-clusters", dest="max_clusters", type=int)
    p.add_argument("--min-lglr", dest="min_lglr", type=float)
    p.add_argument("--min-distance", dest="min_distance", type=float)
    p.add_argument("--min-p", dest="min_p", type=float)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("render", help="render selected clusters to SVG")
    p.add_argument("--clusters", required=True)
    p.add_argument("--locations", required=True)
    p.add_argument("--basemap")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--n-classes", dest="n_classes", type=int)
    p.add_argument("--hue", type=float)
    p.add_argument("--w-mid-min", dest="w_mid_min", type=float)
    p.add_argument("--w-mid-max", dest="w_mid_max", type=float)
    p.add_argument("--curvature-coeff", dest="curvature_coeff", type=float)
    p.add_argument("--origin-half-opacity", dest="origin_half_opacity", type=float)
    p.add_argument("--show-circles", dest="show_circles", action="store_true", default=None)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("bundle", help="write a self-contained explorer bundle")
    p.add_argument("--clusters", required=True, help="annotated clusters JSON")
    p.add_argument("--locations", required=True)
    p.add_argument("--basemap")
    p.add_argument("--n-classes", dest="n_classes", type=int)
    p.add_argument("--hue", type=float)
    p.add_argument("--w-mid-min", dest="w_mid_min", type=float)
    p.add_argument("--w-mid-max", dest="w_mid_max", type=float)
    p.add_argument("--curvature-coeff", dest="curvature_coeff", type=float)
    p.add_argument("--origin-half-opacity", dest="origin_half_opacity", type=float)
    p.add_argument("--show-circles", dest="show_circles", action="store_true", default=None)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_bundle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _load_config_defaults(args, parser)
    _save_config(args)
    try:
        rc = args.func(args)
    except IngestionError as exc:
        _fail(2, str(exc))
    except PermutationInfeasibleError as exc:
        _fail(3, str(exc))
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
