import numpy as np
import pytest

from flowscan import (FlowCluster, Neighborhood, SelectionRule,
                      clusters_overlap, select)


def _nb(center, members):
    members = list(members)
    idx = {mid: i for i, mid in enumerate(sorted(set(members) | {center}))}
    return Neighborhood(center_id=center, k=len(members),
                        members=tuple(members),
                        member_indices=tuple(idx[m] for m in members),
                        radius=1.0, outflow_total=1, inflow_total=1)


def _cluster(o_members, d_members, lglr_value, focal=("o", "d"),
             distance=1.0, p_value=0.001, p_rank=0.001):
    return FlowCluster(
        origin=_nb(o_members[0], o_members),
        dest=_nb(d_members[0], d_members),
        observed=10, expected=1.0, lglr=lglr_value,
        focal_flow=focal, distance=distance,
        p_value=p_value, p_value_rank=p_rank)


def test_overlap_requires_both_ends():
    a = _cluster(["a", "b"], ["x", "y"], 5.0)
    b = _cluster(["b", "c"], ["y", "z"], 4.0)   # shares both ends
    c = _cluster(["b", "c"], ["u", "v"], 3.0)   # shares origin only
    d = _cluster(["p", "q"], ["y", "z"], 2.0)   # shares dest only
    e = _cluster(["p", "q"], ["u", "v"], 1.0)   # shares nothing
    assert clusters_overlap(a, b)
    assert not clusters_overlap(a, c)
    assert not clusters_overlap(a, d)
    assert not clusters_overlap(a, e)
    assert clusters_overlap(a, a)


def test_select_greedy_order_and_suppression():
    top = _cluster(["a", "b"], ["x", "y"], 50.0, focal=("a", "x"))
    shadow = _cluster(["b", "c"], ["y", "z"], 40.0, focal=("b", "y"))
    other = _cluster(["p"], ["q"], 30.0, focal=("p", "q"))
    rule = SelectionRule()
    out = select([shadow, other, top], rule)
    assert [c.lglr for c in out] == [50.0, 30.0]


def test_select_max_clusters_and_thresholds():
    clusters = [_cluster([f"o{i}"], [f"d{i}"], float(10 - i),
                         focal=(f"o{i}", f"d{i}"),
                         distance=float(i), p_value=0.001 * (i + 1))
                for i in range(8)]
    assert len(select(clusters, SelectionRule(max_clusters=3))) == 3
    # strict comparisons: boundary values excluded
    assert all(c.lglr > 7.0 for c in
               select(clusters, SelectionRule(min_lglr=7.0)))
    assert all(c.distance > 3.0 for c in
               select(clusters, SelectionRule(min_distance=3.0)))
    assert all(c.p_value < 0.004 for c in
               select(clusters, SelectionRule(min_p=0.004)))


def test_select_empty_and_all_filtered():
    assert select([], SelectionRule()) == []
    c = _cluster(["a"], ["b"], 5.0)
    assert select([c], SelectionRule(min_lglr=5.0)) == []
    assert select([c], SelectionRule(min_lglr=4.9)) == [c]


def _random_cluster_set(rng, universe=12):
    clusters = []
    for i in range(int(rng.integers(2, 15))):
        o = rng.choice(universe, size=int(rng.integers(1, 4)), replace=False)
        d = rng.choice(universe, size=int(rng.integers(1, 4)), replace=False)
        clusters.append(_cluster([f"o{j}" for j in o], [f"d{j}" for j in d],
                                 float(rng.uniform(0.1, 100)),
                                 focal=(f"o{o[0]}", f"d{d[0]}", f"#{i}"),
                                 distance=float(rng.uniform(0, 2)),
                                 p_value=float(rng.uniform(0, 0.02))))
    return clusters


def test_select_properties_random():
    rng = np.random.default_rng(0)
    rule = SelectionRule()
    for _ in range(1000):
        clusters = _random_cluster_set(rng)
        out = select(clusters, rule)
        # no selected pair overlaps at both ends
        for i in range(len(out)):
            for j in range(i + 1, len(out)):
                assert not clusters_overlap(out[i], out[j])
        # greedy maximality: every rejected cluster overlaps some selected one
        # with strictly-not-lower rank
        rejected = [c for c in clusters if c not in out]
        for c in rejected:
            assert any(clusters_overlap(c, s) for s in out)
        # output ranked by non-increasing lglr (acceptance order)
        assert all(a.lglr >= b.lglr for a, b in zip(out, out[1:]))


def test_select_prefix_stability():
    # raising max_clusters only appends; it never changes earlier picks
    rng = np.random.default_rng(1)
    for _ in range(200):
        clusters = _random_cluster_set(rng)
        full = select(clusters, SelectionRule())
        for k in range(1, len(full) + 1):
            assert select(clusters, SelectionRule(max_clusters=k)) == full[:k]


def test_select_threshold_monotonicity():
    rng = np.random.default_rng(2)
    clusters = _random_cluster_set(rng, universe=30)
    sizes = [len(select(clusters, SelectionRule(min_lglr=t)))
             for t in (0.0, 10.0, 30.0, 60.0, 90.0)]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_selection_rule_validation():
    with pytest.raises(ValueError):
        SelectionRule(max_clusters=-1)
    with pytest.raises(ValueError):
        SelectionRule(min_p=1.5)
    # zero is allowed and selects nothing (basemap-only maps)
    c = _cluster(["a"], ["b"], 5.0)
    assert select([c], SelectionRule(max_clusters=0)) == []
