"""Synthetic benchmark generator: planted cross-scale flow clusters plus
distance-stratified random noise, with ground-truth labels.

Every flow gets fresh endpoint points (point-based data), so each location
carries a unit marginal contribution on one side.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .dataset import FlowDataset, Location

DEFAULT_CLUSTER_COUNTS = (47, 193, 12, 193, 41, 80, 22, 12)


@dataclass(frozen=True)
class PlantedCluster:
    origin_center: tuple[float, float]
    origin_radius: float
    dest_center: tuple[float, float]
    dest_radius: float
    count: int

    def __post_init__(self):
        if self.origin_radius <= 0 or self.dest_radius <= 0:
            raise ValueError("radii must be positive")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        dx = self.origin_center[0] - self.dest_center[0]
        dy = self.origin_center[1] - self.dest_center[1]
        if math.hypot(dx, dy) <= self.origin_radius + self.dest_radius:
            raise ValueError("origin and destination disks must be disjoint")


@dataclass(frozen=True)
class SynthSpec:
    area: tuple[float, float, float] = (0.0, 0.0, 1.0)  # x0, y0, side
    planted: tuple[PlantedCluster, ...] = ()
    noise_count: int = 0
    noise_strata: tuple[tuple[float, float], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.noise_count < 0:
            raise ValueError("noise_count must be >= 0")
        diameter = self.area[2] * math.sqrt(2.0)
        for lo, hi in self.noise_strata:
            if not (0 <= lo < hi):
                raise ValueError(f"bad stratum ({lo}, {hi})")
            if lo >= diameter:
                raise ValueError(
                    f"stratum ({lo}, {hi}) infeasible: exceeds area diameter")


class SynthResult(NamedTuple):
    dataset: FlowDataset
    labels: tuple[str, ...]       # per flow: "cluster<i>" or "noise"
    padded_noise: int             # extra flows added to the last stratum


def default_spec(noise_count: int, seed: int = 0) -> SynthSpec:
    """Eight planted clusters (counts summing to 600) on the unit square,
    mixing large and small radii at origin and destination, plus four
    equal-width distance strata for the noise flows."""
    if noise_count < 0:
        raise ValueError("noise_count must be >= 0")
    # radii sized so that uniform-noise contamination inside a disk stays
    # well below the planted membership even at 94% noise
    layout = [
        # (origin cx, cy, radius), (dest cx, cy, radius), count
        ((0.15, 0.85, 0.016), (0.85, 0.85, 0.016), 47),
        ((0.10, 0.48, 0.026), (0.90, 0.55, 0.022), 193),
        ((0.15, 0.15, 0.007), (0.45, 0.10, 0.007), 12),
        ((0.50, 0.90, 0.022), (0.55, 0.12, 0.026), 193),
        ((0.80, 0.20, 0.015), (0.30, 0.35, 0.015), 41),
        ((0.35, 0.65, 0.021), (0.70, 0.42, 0.014), 80),
        ((0.93, 0.70, 0.011), (0.68, 0.72, 0.011), 22),
        ((0.05, 0.68, 0.006), (0.25, 0.55, 0.007), 12),
    ]
    # The strata avoid very short flows (origin and destination nearly
    # coincident) and very long ones (endpoints pinned to opposite corners);
    # both extremes induce spatial association in pure noise that a
    # marginal-preserving permutation null cannot reproduce.
    planted = tuple(
        PlantedCluster((o[0], o[1]), o[2], (d[0], d[1]), d[2], count)
        for o, d, count in layout)
    strata = ((0.2, 0.35), (0.35, 0.5), (0.5, 0.65), (0.65, 0.8))
    return SynthSpec(area=(0.0, 0.0, 1.0), planted=planted,
                     noise_count=noise_count, noise_strata=strata, seed=seed)


def _sample_disk(rng, center, radius, n):
    r = radius * np.sqrt(rng.random(n))
    theta = rng.random(n) * 2.0 * math.pi
    return np.column_stack([center[0] + r * np.cos(theta),
                            center[1] + r * np.sin(theta)])


def generate(spec: SynthSpec) -> SynthResult:
    """Materialize a SynthSpec into a point-based FlowDataset with labels."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    x0, y0, side = spec.area
    ox_list, oy_list, dx_list, dy_list = [], [], [], []
    labels: list[str] = []

    for ci, pc in enumerate(spec.planted, start=1):
        o = _sample_disk(rng, pc.origin_center, pc.origin_radius, pc.count)
        d = _sample_disk(rng, pc.dest_center, pc.dest_radius, pc.count)
        ox_list.append(o[:, 0]); oy_list.append(o[:, 1])
        dx_list.append(d[:, 0]); dy_list.append(d[:, 1])
        labels.extend([f"cluster{ci}"] * pc.count)

    padded = 0
    if spec.noise_count > 0:
        if not spec.noise_strata:
            raise ValueError("noise_count > 0 requires noise strata")
        ns = len(spec.noise_strata)
        per = spec.noise_count // ns
        counts = [per] * ns
        rem = spec.noise_count - per * ns
        counts[-1] += rem
        padded = rem
        for (lo, hi), cnt in zip(spec.noise_strata, counts):
            got = 0
            while got < cnt:
                batch = max(1024, 4 * (cnt - got))
                origin_corner = np.array([x0, y0])
                a = origin_corner + rng.random((batch, 2)) * side
                b = origin_corner + rng.random((batch, 2)) * side
                dist = np.hypot(a[:, 0] - b[:, 0], a[:, 1] - b[:, 1])
                ok = (dist >= lo) & (dist < hi)
                take = min(int(ok.sum()), cnt - got)
                sel = np.flatnonzero(ok)[:take]
                ox_list.append(a[sel, 0]); oy_list.append(a[sel, 1])
                dx_list.append(b[sel, 0]); dy_list.append(b[sel, 1])
                got += take
            labels.extend(["noise"] * cnt)

    ox = np.concatenate(ox_list); oy = np.concatenate(oy_list)
    dx = np.concatenate(dx_list); dy = np.concatenate(dy_list)
    n = len(ox)
    locations = []
    for i in range(n):
        locations.append(Location(f"P{2 * i:06d}", float(ox[i]), float(oy[i])))
        locations.append(Location(f"P{2 * i + 1:06d}", float(dx[i]), float(dy[i])))
    origin_idx = np.arange(n, dtype=np.int64) * 2
    dest_idx = origin_idx + 1
    dataset = FlowDataset(locations, origin_idx, dest_idx,
                          np.ones(n, dtype=np.int64))
    return SynthResult(dataset, tuple(labels), padded)


def ground_truth_members(spec: SynthSpec, result: SynthResult) -> dict:
    """Per planted cluster: the sets of origin-side and dest-side location
    ids of its flows (for recovery scoring)."""
    truth: dict[str, dict[str, set]] = {}
    ds = result.dataset
    for t, lab in enumerate(result.labels):
        if lab == "noise":
            continue
        entry = truth.setdefault(lab, {"origin": set(), "dest": set()})
        entry["origin"].add(ds.locations[2 * t].id)
        entry["dest"].add(ds.locations[2 * t + 1].id)
    return truth


def write_files(result: SynthResult, outdir) -> dict[str, Path]:
    """Write the standard locations/flows CSVs plus labels.csv."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ds = result.dataset
    paths = {"locations": outdir / "locations.csv",
             "flows": outdir / "flows.csv",
             "labels": outdir / "labels.csv"}
    with open(paths["locations"], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y"])
        for loc in ds.locations:
            w.writerow([loc.id, repr(loc.x), repr(loc.y)])
    with open(paths["flows"], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["origin", "dest", "volume"])
        for o, d, v in zip(ds.origin_idx, ds.dest_idx, ds.volumes):
            w.writerow([ds.locations[o].id, ds.locations[d].id, int(v)])
    with open(paths["labels"], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["flow_index", "label"])
        for i, lab in enumerate(result.labels):
            w.writerow([i, lab])
    return paths
