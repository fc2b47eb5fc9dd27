"""Estimator-style wrappers so the pipeline composes with sklearn tooling.

These are thin adapters over the functional API: parameters are constructor
arguments, ``fit`` runs the computation, and results land in trailing-
underscore attributes.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .scan import ScanConfig, scan_all
from .selection import SelectionRule, select
from .significance import (DEFAULT_PASSES, DEFAULT_PERMUTATIONS, fit_gumbel,
                           monte_carlo, p_value_gumbel, p_value_rank,
                           threshold)


class FlowClusterScan(BaseEstimator):
    """Cross-scale scan as an estimator: ``fit(dataset)`` detects one best
    cluster per observed flow (attributes ``clusters_``,
    ``candidates_evaluated_``, ``wall_time_``)."""

    def __init__(self, bound_mode="by_volume", max_k=None, max_size=None,
                 min_lglr_record=0.0, n_workers=None):
        self.bound_mode = bound_mode
        self.max_k = max_k
        self.max_size = max_size
        self.min_lglr_record = min_lglr_record
        self.n_workers = n_workers

    def _config(self) -> ScanConfig:
        return ScanConfig(bound_mode=self.bound_mode, max_k=self.max_k,
                          max_size=self.max_size,
                          min_lglr_record=self.min_lglr_record,
                          n_workers=self.n_workers)

    def fit(self, dataset, y=None):
        result = scan_all(dataset, self._config())
        self.clusters_ = result.clusters
        self.candidates_evaluated_ = result.candidates_evaluated
        self.wall_time_ = result.wall_time
        return self


class PermutationSignificance(BaseEstimator):
    """Monte Carlo null of the maximum LGLR plus a Gumbel fit.

    ``fit(dataset)`` fills ``maxima_`` and ``gumbel_``; ``transform``
    annotates clusters with Gumbel and rank p-values.
    """

    def __init__(self, bound_mode="by_volume", max_k=None, max_size=None,
                 n_permutations=DEFAULT_PERMUTATIONS, passes=DEFAULT_PASSES,
                 seed=0, n_workers=None):
        self.bound_mode = bound_mode
        self.max_k = max_k
        self.max_size = max_size
        self.n_permutations = n_permutations
        self.passes = passes
        self.seed = seed
        self.n_workers = n_workers

    def fit(self, dataset, y=None):
        config = ScanConfig(bound_mode=self.bound_mode, max_k=self.max_k,
                            max_size=self.max_size, n_workers=self.n_workers)
        self.null_ = monte_carlo(dataset, config, self.n_permutations,
                                 self.seed, passes=self.passes)
        self.maxima_ = self.null_.maxima
        self.gumbel_ = fit_gumbel(self.maxima_)
        return self

    def threshold(self, p: float) -> float:
        return threshold(self.gumbel_, p)

    def transform(self, clusters):
        annotated = []
        for c in clusters:
            c.p_value = p_value_gumbel(c.lglr, self.gumbel_)
            c.p_value_rank = p_value_rank(c.lglr, self.null_)
            annotated.append(c)
        return annotated


class ClusterSelector(BaseEstimator):
    """Greedy non-overlapping selection as a transformer over cluster lists."""

    def __init__(self, max_clusters=None, min_lglr=None, min_distance=None,
                 min_p=None):
        self.max_clusters = max_clusters
        self.min_lglr = min_lglr
        self.min_distance = min_distance
        self.min_p = min_p

    def _rule(self) -> SelectionRule:
        return SelectionRule(max_clusters=self.max_clusters,
                             min_lglr=self.min_lglr,
                             min_distance=self.min_distance,
                             min_p=self.min_p)

    def fit(self, clusters, y=None):
        self.selected_ = select(clusters, self._rule())
        return self

    def transform(self, clusters):
        return select(clusters, self._rule())

    def fit_transform(self, clusters, y=None):
        self.fit(clusters)
        return self.selected_
