"""Greedy selection of strong, non-redundant flow clusters.

Two clusters are redundant only when their origin neighborhoods intersect
AND their destination neighborhoods intersect; sharing a single end is
allowed.  Candidates are visited in descending LGLR order and accepted
unless they overlap an already-accepted cluster at both ends.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scan import FlowCluster


@dataclass(frozen=True)
class SelectionRule:
    """Display/selection thresholds; all optional, strict comparisons.

    min_lglr and min_distance drop clusters at or below the bound (the
    source maps use "LGLR > 300 and distance > 200km" style cuts); min_p
    keeps clusters with p_value strictly below the cutoff.
    """
    max_clusters: int | None = None
    min_lglr: float | None = None
    min_distance: float | None = None
    min_p: float | None = None

    def __post_init__(self):
        for name in ("min_lglr", "min_distance"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.max_clusters is not None and self.max_clusters < 0:
            raise ValueError("max_clusters must be non-negative")
        if self.min_p is not None and not 0.0 < self.min_p <= 1.0:
            raise ValueError("min_p must be in (0, 1]")

    def admits(self, c: FlowCluster) -> bool:
        if self.min_lglr is not None and not c.lglr > self.min_lglr:
            return False
        if self.min_distance is not None and not c.distance > self.min_distance:
            return False
        if self.min_p is not None:
            if c.p_value is None or not c.p_value < self.min_p:
                return False
        return True


def clusters_overlap(a: FlowCluster, b: FlowCluster) -> bool:
    """True iff the clusters intersect at the origin AND at the destination."""
    return (not a.origin.member_set.isdisjoint(b.origin.member_set)
            and not a.dest.member_set.isdisjoint(b.dest.member_set))


def _sort_key(c: FlowCluster):
    return (-c.lglr, c.origin.k + c.dest.k, c.focal_flow)


def select(clusters, rule: SelectionRule | None = None) -> list[FlowCluster]:
    """Threshold, rank by descending LGLR (ties: smaller k_O + k_D, then
    lexicographic focal ids), then greedily accept non-overlapping clusters.
    Output order is acceptance order."""
    if rule is None:
        rule = SelectionRule()
    candidates = sorted((c for c in clusters if rule.admits(c)), key=_sort_key)
    accepted: list[FlowCluster] = []
    for c in candidates:
        if rule.max_clusters is not None and len(accepted) >= rule.max_clusters:
            break
        if any(clusters_overlap(c, s) for s in accepted):
            continue
        accepted.append(c)
    return accepted
