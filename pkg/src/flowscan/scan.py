"""Cross-scale flow cluster scan.

For each observed flow, enumerate origin and destination k-NN neighborhoods
up to a count or volume bound, score each member-set-disjoint combination
with the log generalized likelihood ratio (LGLR), and keep the strongest
candidate per focal flow.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import scan_kernel
from .dataset import Flow, FlowDataset, Neighborhood


@dataclass(frozen=True)
class ScanConfig:
    """Scan bounds.  Exactly one bound mode is active.

    Defaults resolve against the dataset: max_k = ceil(m/5) for by_count,
    max_size = ceil(F/5) for by_volume.
    """
    bound_mode: str = "by_volume"
    max_k: int | None = None
    max_size: int | None = None
    min_lglr_record: float = 0.0
    n_workers: int | None = None

    def __post_init__(self):
        if self.bound_mode not in ("by_count", "by_volume"):
            raise ValueError(f"unknown bound_mode {self.bound_mode!r}")
        if self.max_k is not None and self.max_k < 1:
            raise ValueError("max_k must be positive")
        if self.max_size is not None and self.max_size < 1:
            raise ValueError("max_size must be positive")

    def resolve(self, dataset: FlowDataset) -> "ScanConfig":
        if self.bound_mode == "by_count":
            mk = self.max_k if self.max_k is not None else math.ceil(dataset.m / 5)
            return replace(self, max_k=min(mk, dataset.m))
        ms = self.max_size if self.max_size is not None else math.ceil(dataset.F / 5)
        return replace(self, max_size=ms)

    @property
    def bound_value(self) -> int | None:
        return self.max_k if self.bound_mode == "by_count" else self.max_size


@dataclass
class FlowCluster:
    """One detected pattern: an origin/destination neighborhood pair with
    its observed flow, expectation under the independence null, and LGLR."""
    origin: Neighborhood
    dest: Neighborhood
    observed: int
    expected: float
    lglr: float
    focal_flow: tuple[str, str]
    distance: float
    p_value: float | None = None
    p_value_rank: float | None = None

    def to_dict(self) -> dict:
        def nb(n: Neighborhood) -> dict:
            return {"center": n.center_id, "k": n.k, "radius": n.radius,
                    "members": list(n.members),
                    "outflow_total": n.outflow_total,
                    "inflow_total": n.inflow_total}
        d = {"focal": {"o": self.focal_flow[0], "d": self.focal_flow[1]},
             "origin": nb(self.origin), "dest": nb(self.dest),
             "observed": self.observed, "expected": self.expected,
             "lglr": self.lglr, "distance": self.distance}
        if self.p_value is not None:
            d["p_value"] = self.p_value
        if self.p_value_rank is not None:
            d["p_value_rank"] = self.p_value_rank
        return d


def neighborhood_from_dict(d: dict) -> Neighborhood:
    """Rebuild a Neighborhood from its JSON form (no dataset attached, so
    member indices are unavailable)."""
    return Neighborhood(d["center"], d["k"], d["members"], None, d["radius"],
                        d.get("outflow_total", 0), d.get("inflow_total", 0))


def cluster_from_dict(d: dict) -> FlowCluster:
    return FlowCluster(
        origin=neighborhood_from_dict(d["origin"]),
        dest=neighborhood_from_dict(d["dest"]),
        observed=d["observed"], expected=d["expected"], lglr=d["lglr"],
        focal_flow=(d["focal"]["o"], d["focal"]["d"]),
        distance=d["distance"],
        p_value=d.get("p_value"), p_value_rank=d.get("p_value_rank"))


@dataclass
class ScanResult:
    clusters: list[FlowCluster]
    candidates_evaluated: int
    wall_time: float
    config: ScanConfig

    def __iter__(self):
        return iter(self.clusters)

    def __len__(self):
        return len(self.clusters)

    def metadata(self) -> dict:
        return {"bound_mode": self.config.bound_mode,
                "bound_value": self.config.bound_value,
                "candidates_evaluated": self.candidates_evaluated,
                "wall_time": self.wall_time}


def expected_flow(f_o_out: float, f_d_in: float, f_total: float) -> float:
    """Expected O->D flow under the fixed-marginals independence null."""
    if f_total <= 0:
        raise ValueError("total flow must be positive")
    return f_o_out * f_d_in / f_total


def lglr(observed: float, expected: float, f_total: float) -> float:
    """Log generalized likelihood ratio for an elevated-flow candidate.

    Zero when observed <= expected (GLR fixed to 1).  The (F - observed)
    term contributes 0 at observed = F by the x*ln(x) -> 0 convention.
    Expected = 0 with observed > 0 cannot arise from real marginals; it
    returns +inf to keep the function total.
    """
    if not (0 <= observed <= f_total):
        raise ValueError("observed must be in [0, F]")
    if not (0 <= expected < f_total):
        raise ValueError("expected must be in [0, F)")
    if observed <= expected:
        return 0.0
    if expected == 0.0:
        return math.inf
    val = observed * math.log(observed / expected)
    if observed < f_total:
        rem = f_total - observed
        val += rem * math.log(rem / (f_total - expected))
    return val


def _set_threads(n_workers: int | None):
    if n_workers is not None:
        import numba
        prev = numba.get_num_threads()
        numba.set_num_threads(max(1, int(n_workers)))
        return prev
    return None


def _restore_threads(prev):
    if prev is not None:
        import numba
        numba.set_num_threads(prev)


def _prefix_table(dataset: FlowDataset, config: ScanConfig,
                  centers: np.ndarray):
    """k-NN prefix rows for the given centers, long enough to exhaust the
    configured bound, padded with -1."""
    index = dataset._index
    m = dataset.m
    if config.bound_mode == "by_count":
        need = config.max_k - 1
        rows = index.prefixes(centers, need)
        lens = [min(len(r[0]), need) for r in rows]
    else:
        ms = config.max_size
        # marginal relevant to a center depends on which side it serves;
        # use the smaller of the two marginals so the prefix covers both
        marg = np.minimum(dataset.outflow, dataset.inflow)
        need = 64
        while True:
            rows = index.prefixes(centers, need)
            lens = []
            ok = True
            for c, (order, _) in zip(centers, rows):
                run = int(marg[c])
                ln = 0
                hit = False
                for j in range(min(len(order), need)):
                    run += int(marg[order[j]])
                    ln = j + 1
                    if run > ms:
                        hit = True
                        break
                lens.append(ln)
                if not hit and ln < m - 1 and ln >= min(len(order), need):
                    ok = False
            if ok or need >= m - 1:
                break
            need = min(need * 2, m - 1)
    width = max(lens) if lens else 0
    table = np.full((len(centers), max(width, 1)), -1, dtype=np.int32)
    plen = np.zeros(len(centers), dtype=np.int64)
    dists = []
    for r, (order, dist) in enumerate(rows):
        ln = lens[r]
        table[r, :ln] = order[:ln]
        plen[r] = ln
        dists.append(dist)
    return table, plen, dists


def _scan_raw(dataset: FlowDataset, config: ScanConfig):
    """Run the kernel; returns per-focal arrays plus the prefix structures."""
    config = config.resolve(dataset)
    f_o = dataset.origin_idx.astype(np.int64)
    f_d = dataset.dest_idx.astype(np.int64)
    centers = np.unique(np.concatenate([f_o, f_d]))
    table, plen, dists = _prefix_table(dataset, config, centers)
    row_of = {int(c): r for r, c in enumerate(centers)}
    f_orow = np.array([row_of[int(c)] for c in f_o], dtype=np.int64)
    f_drow = np.array([row_of[int(c)] for c in f_d], dtype=np.int64)

    prev = _set_threads(config.n_workers)
    try:
        out = scan_kernel(
            dataset.m, dataset.F,
            f_o, f_d, f_orow, f_drow,
            table, plen,
            dataset.out_ptr, dataset.dest_idx, dataset.volumes,
            dataset.outflow, dataset.inflow,
            config.bound_mode == "by_count",
            np.int64(config.max_k or 0), np.int64(config.max_size or 0))
    finally:
        _restore_threads(prev)
    best_l, best_ko, best_kd, best_obs, best_exp, n_cand = out
    return (best_l, best_ko, best_kd, best_obs, best_exp, n_cand,
            centers, row_of, table, plen, dists, config)


def _build_neighborhood(dataset: FlowDataset, center: int, k: int,
                        row: int, table, dists) -> Neighborhood:
    idx = np.concatenate([[center], table[row, :k - 1]]).astype(np.int32)
    radius = float(dists[row][k - 2]) if k > 1 else 0.0
    members = [dataset.locations[i].id for i in idx]
    return Neighborhood(dataset.locations[center].id, k, members, idx, radius,
                        dataset.outflow[idx].sum(), dataset.inflow[idx].sum())


def scan_all(dataset: FlowDataset, config: ScanConfig | None = None) -> ScanResult:
    """One best cluster per observed flow whose LGLR exceeds the record
    threshold, plus the total number of candidates evaluated."""
    if dataset.n == 0:
        raise ValueError("dataset has no flows")
    if config is None:
        config = ScanConfig()
    t0 = time.perf_counter()
    (best_l, best_ko, best_kd, best_obs, best_exp, n_cand,
     centers, row_of, table, plen, dists, rconfig) = _scan_raw(dataset, config)

    clusters: list[FlowCluster] = []
    for t in range(dataset.n):
        if best_l[t] <= rconfig.min_lglr_record or best_ko[t] == 0:
            continue
        o = int(dataset.origin_idx[t])
        d = int(dataset.dest_idx[t])
        origin = _build_neighborhood(dataset, o, int(best_ko[t]),
                                     row_of[o], table, dists)
        dest = _build_neighborhood(dataset, d, int(best_kd[t]),
                                   row_of[d], table, dists)
        clusters.append(FlowCluster(
            origin=origin, dest=dest,
            observed=int(best_obs[t]), expected=float(best_exp[t]),
            lglr=float(best_l[t]),
            focal_flow=(dataset.locations[o].id, dataset.locations[d].id),
            distance=dataset._index.distance(o, d)))
    wall = time.perf_counter() - t0
    return ScanResult(clusters, int(n_cand.sum()), wall, rconfig)


def scan_flow(dataset: FlowDataset, focal: Flow,
              config: ScanConfig | None = None) -> FlowCluster | None:
    """Strongest cluster seeded by one focal flow, or None if nothing
    scores above zero."""
    if config is None:
        config = ScanConfig()
    o = dataset.index(focal.origin_id)
    d = dataset.index(focal.dest_id)
    # focal must belong to the dataset
    lo, hi = dataset.out_ptr[o], dataset.out_ptr[o + 1]
    if not np.any(dataset.dest_idx[lo:hi] == d):
        raise ValueError("focal flow does not belong to the dataset")
    config = config.resolve(dataset)
    centers = np.unique(np.array([o, d], dtype=np.int64))
    table, plen, dists = _prefix_table(dataset, config, centers)
    row_of = {int(c): r for r, c in enumerate(centers)}
    prev = _set_threads(config.n_workers)
    try:
        out = scan_kernel(
            dataset.m, dataset.F,
            np.array([o], dtype=np.int64), np.array([d], dtype=np.int64),
            np.array([row_of[o]], dtype=np.int64),
            np.array([row_of[d]], dtype=np.int64),
            table, plen,
            dataset.out_ptr, dataset.dest_idx, dataset.volumes,
            dataset.outflow, dataset.inflow,
            config.bound_mode == "by_count",
            np.int64(config.max_k or 0), np.int64(config.max_size or 0))
    finally:
        _restore_threads(prev)
    best_l, best_ko, best_kd, best_obs, best_exp, _ = out
    if best_l[0] <= 0.0 or best_ko[0] == 0:
        return None
    origin = _build_neighborhood(dataset, o, int(best_ko[0]), row_of[o], table, dists)
    dest = _build_neighborhood(dataset, d, int(best_kd[0]), row_of[d], table, dists)
    return FlowCluster(origin=origin, dest=dest,
                       observed=int(best_obs[0]), expected=float(best_exp[0]),
                       lglr=float(best_l[0]),
                       focal_flow=(focal.origin_id, focal.dest_id),
                       distance=dataset._index.distance(o, d))
