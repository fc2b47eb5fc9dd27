"""Shared fixtures: random dataset generation and brute-force oracles.

The oracles deliberately reuse only the simple data-model operations
(neighborhood / flow_between / lglr) and enumerate everything exhaustively,
independent of the incremental scan path they check.
"""

from __future__ import annotations

import math

import numpy as np

from flowscan import (FlowDataset, Location, ScanConfig, expected_flow,
                      flow_between, lglr, neighborhood)


def random_dataset(rng: np.random.Generator, m: int, n: int,
                   max_volume: int = 5) -> FlowDataset:
    """Random planar dataset with m locations and up to n flows."""
    locations = [Location(f"L{i:03d}", float(rng.random()), float(rng.random()))
                 for i in range(m)]
    origins, dests, vols = [], [], []
    for _ in range(n):
        o = int(rng.integers(0, m))
        d = int(rng.integers(0, m))
        if o == d:
            d = (d + 1) % m
        origins.append(o)
        dests.append(d)
        vols.append(int(rng.integers(1, max_volume + 1)))
    return FlowDataset(locations, np.array(origins), np.array(dests),
                       np.array(vols))


def trips_fixture(rng: np.random.Generator, m: int = 100,
                  total_trips: int = 10_000) -> FlowDataset:
    """Dataset with exactly ``total_trips`` unit trips spread over m locations."""
    locations = [Location(f"L{i:03d}", float(rng.random()), float(rng.random()))
                 for i in range(m)]
    n_pairs = total_trips // 16
    origins, dests, vols = [], [], []
    remaining = total_trips
    for i in range(n_pairs):
        o = int(rng.integers(0, m))
        d = int(rng.integers(0, m))
        if o == d:
            d = (d + 1) % m
        v = remaining if i == n_pairs - 1 else int(rng.integers(1, 32))
        v = min(v, remaining - (n_pairs - 1 - i))
        origins.append(o)
        dests.append(d)
        vols.append(v)
        remaining -= v
    ds = FlowDataset(locations, np.array(origins), np.array(dests),
                     np.array(vols))
    assert ds.F == total_trips
    return ds


def max_valid_k(dataset: FlowDataset, center_id: str, side: str,
                config: ScanConfig) -> int:
    """Largest neighborhood scale allowed by the bound for this center."""
    config = config.resolve(dataset)
    if config.bound_mode == "by_count":
        return min(config.max_k, dataset.m)
    best = 1
    for k in range(2, dataset.m + 1):
        nb = neighborhood(dataset, center_id, k)
        total = nb.outflow_total if side == "origin" else nb.inflow_total
        if total > config.max_size:
            break
        best = k
    return best


def brute_scan_flow(dataset: FlowDataset, origin_id: str, dest_id: str,
                    config: ScanConfig):
    """Exhaustive search over every (k_O, k_D) combination under the bound
    and member-set disjointness; returns (lglr, k_O, k_D, obs, exp) or None."""
    ko_max = max_valid_k(dataset, origin_id, "origin", config)
    kd_max = max_valid_k(dataset, dest_id, "dest", config)
    best = None
    for ko in range(1, ko_max + 1):
        O = neighborhood(dataset, origin_id, ko)
        for kd in range(1, kd_max + 1):
            D = neighborhood(dataset, dest_id, kd)
            if not O.member_set.isdisjoint(D.member_set):
                continue
            obs = flow_between(dataset, O, D)
            exp = expected_flow(O.outflow_total, D.inflow_total, dataset.F)
            if exp >= dataset.F:
                continue
            val = lglr(obs, exp, dataset.F)
            if val <= 0:
                continue
            cand = (val, ko, kd, obs, exp)
            if best is None:
                best = cand
            else:
                bval, bko, bkd = best[0], best[1], best[2]
                if val > bval:
                    best = cand
                elif val == bval:
                    if (ko + kd, ko) < (bko + bkd, bko):
                        best = cand
    return best


def brute_flow_between(dataset: FlowDataset, O, D) -> int:
    oset, dset = set(O.members), set(D.members)
    return sum(f.volume for f in dataset.flows
               if f.origin_id in oset and f.dest_id in dset)
