import math

import numpy as np
import pytest

from flowscan import (PlantedCluster, SynthSpec, default_spec, generate,
                      ground_truth_members, write_files)


def test_default_spec_composition():
    spec = default_spec(5400)
    counts = [p.count for p in spec.planted]
    assert counts == [47, 193, 12, 193, 41, 80, 22, 12]
    assert sum(counts) == 600
    assert len(spec.noise_strata) == 4
    widths = [hi - lo for lo, hi in spec.noise_strata]
    assert all(w == pytest.approx(widths[0]) for w in widths)


def test_generate_dataset1_analog():
    result = generate(default_spec(5400, seed=3))
    ds = result.dataset
    assert ds.F == 6000
    assert ds.volumes.size == 6000       # unit flows, fresh endpoints
    assert ds.m == 12000
    labels = np.asarray(result.labels)
    assert (labels == "noise").sum() == 5400
    for ci in range(8):
        assert (labels == f"cluster{ci + 1}").sum() == default_spec(0).planted[ci].count


def test_generate_zero_noise():
    result = generate(default_spec(0, seed=1))
    assert result.dataset.F == 600
    assert "noise" not in result.labels


def test_noise_strata_counts_and_distances():
    spec = default_spec(5400, seed=5)
    result = generate(spec)
    ds = result.dataset
    noise = np.flatnonzero(np.asarray(result.labels) == "noise")
    # equal per-stratum counts of 1350, verified by distance binning
    dists = np.array([ds.distance(ds.locations[ds.origin_idx[i]].id,
                                  ds.locations[ds.dest_idx[i]].id)
                      for i in noise])
    edges = [lo for lo, _ in spec.noise_strata] + [spec.noise_strata[-1][1]]
    counts, _ = np.histogram(dists, bins=edges)
    assert list(counts) == [1350, 1350, 1350, 1350]
    assert result.padded_noise == 0


def test_noise_padding_reported():
    result = generate(default_spec(10, seed=0))
    # 10 % 4 = 2 flows padded into the last stratum
    assert result.padded_noise == 2
    assert sum(lab == "noise" for lab in result.labels) == 10


def test_planted_flows_inside_disks():
    spec = default_spec(0, seed=2)
    result = generate(spec)
    ds = result.dataset
    for i in range(ds.volumes.size):
        label = result.labels[i]
        p = spec.planted[int(label.removeprefix("cluster")) - 1]
        o = ds.locations[ds.origin_idx[i]]
        d = ds.locations[ds.dest_idx[i]]
        (ocx, ocy), orad = p.origin_center, p.origin_radius
        (dcx, dcy), drad = p.dest_center, p.dest_radius
        assert math.hypot(o.x - ocx, o.y - ocy) <= orad + 1e-12
        assert math.hypot(d.x - dcx, d.y - dcy) <= drad + 1e-12


def test_generate_deterministic():
    a = generate(default_spec(200, seed=11))
    b = generate(default_spec(200, seed=11))
    assert a.dataset.to_json(sort_keys=True) == b.dataset.to_json(sort_keys=True)
    assert a.labels == b.labels
    c = generate(default_spec(200, seed=12))
    assert c.dataset.to_json(sort_keys=True) != a.dataset.to_json(sort_keys=True)


def test_ground_truth_members():
    spec = default_spec(100, seed=4)
    result = generate(spec)
    truth = ground_truth_members(spec, result)
    assert len(truth) == 8
    for ci in range(8):
        entry = truth[f"cluster{ci + 1}"]
        o_ids, d_ids = entry["origin"], entry["dest"]
        assert len(o_ids) == spec.planted[ci].count
        assert len(d_ids) == spec.planted[ci].count
        assert o_ids.isdisjoint(d_ids)


def test_infeasible_stratum_rejected():
    # a stratum entirely beyond the square's diameter cannot be sampled
    with pytest.raises(ValueError):
        SynthSpec(area=(0.0, 0.0, 1.0), planted=[],
                  noise_count=8, noise_strata=((2.0, 3.0),), seed=0)


def test_planted_cluster_validation():
    with pytest.raises(ValueError):
        PlantedCluster(origin_center=(0.5, 0.5), origin_radius=0.1,
                       dest_center=(0.55, 0.5), dest_radius=0.1, count=5)


def test_write_files_round_trip(tmp_path):
    from flowscan import load_dataset
    result = generate(default_spec(40, seed=6))
    paths = write_files(result, tmp_path)
    ds = load_dataset(paths["locations"], paths["flows"])
    assert ds.F == result.dataset.F
    assert ds.m == result.dataset.m
    labels = (tmp_path / "labels.csv").read_text().strip().splitlines()
    assert len(labels) == result.dataset.volumes.size + 1  # header
