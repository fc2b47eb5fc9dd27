"""Significance testing: constrained permutation, Monte Carlo null
distribution of the maximum LGLR, Gumbel fitting, p-values and thresholds.

Randomness contract: all draws come from numpy's PCG64 generator, seeded
explicitly; per-permutation streams use seed + permutation index, so results
reproduce bit-exactly regardless of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import constrained_shuffle_pass
from .dataset import FlowDataset
from .scan import ScanConfig, _scan_raw

EULER_GAMMA = 0.5772156649015329

DEFAULT_PASSES = 10
DEFAULT_PERMUTATIONS = 100

MLE_TOL = 1e-9
MLE_MAX_ITER = 200


class PermutationInfeasibleError(ValueError):
    """Raised when the dataset cannot be permuted without self-flows."""


@dataclass(frozen=True)
class GumbelFit:
    """Location/scale parameters of the null max-LGLR distribution."""
    mu: float
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be > 0")


@dataclass
class NullDistribution:
    """Maximum LGLR per permutation under the fixed-marginals null."""
    maxima: np.ndarray
    seed: int
    L: int
    passes: int = DEFAULT_PASSES
    skipped_swaps_total: int = 0

    def __post_init__(self):
        self.maxima = np.asarray(self.maxima, dtype=np.float64)
        if len(self.maxima) != self.L:
            raise ValueError("maxima length must equal L")
        if np.any(self.maxima < 0):
            raise ValueError("maxima must be >= 0")

    def to_dict(self, fit: GumbelFit | None = None) -> dict:
        d = {"L": self.L, "seed": self.seed, "passes": self.passes,
             "maxima": [float(x) for x in self.maxima],
             "skipped_swaps_total": self.skipped_swaps_total}
        if fit is not None:
            d["fit"] = {"mu": fit.mu, "beta": fit.beta}
        return d


def permute(dataset: FlowDataset, seed: int,
            passes: int = DEFAULT_PASSES) -> FlowDataset:
    """Marginal-preserving destination shuffle.

    Flows are expanded to unit-volume trips; each pass is a backward
    Fisher-Yates sweep over trip destinations in which any swap that would
    create a self-to-self trip is skipped.  Outflow and inflow totals per
    location are preserved exactly.  The skip count is reported on the
    returned dataset's ``permutation_skips`` attribute.
    """
    if len(np.unique(dataset.dest_idx)) < 2:
        raise PermutationInfeasibleError(
            "permutation requires at least 2 distinct destinations")
    origins = np.repeat(dataset.origin_idx, dataset.volumes).astype(np.int32)
    dests = np.repeat(dataset.dest_idx, dataset.volumes).astype(np.int32)
    nf = len(origins)
    rng = np.random.Generator(np.random.PCG64(seed))
    highs = np.arange(nf, 1, -1, dtype=np.int64)  # i+1 for i = n-1 .. 1
    skipped = 0
    for _ in range(passes):
        rand_idx = rng.integers(0, highs)
        skipped += int(constrained_shuffle_pass(origins, dests, rand_idx))
    m = dataset.m
    key = origins.astype(np.int64) * m + dests
    ukey, counts = np.unique(key, return_counts=True)
    permuted = dataset.replace_flows((ukey // m).astype(np.int32),
                                     (ukey % m).astype(np.int32),
                                     counts.astype(np.int64))
    permuted.permutation_skips = skipped
    return permuted


def monte_carlo(dataset: FlowDataset, config: ScanConfig, L: int, seed: int,
                passes: int = DEFAULT_PASSES) -> NullDistribution:
    """Maximum LGLR of a full scan over each of L seeded permutations."""
    if L < 1:
        raise ValueError("L must be >= 1")
    maxima = np.zeros(L, dtype=np.float64)
    skipped = 0
    for i in range(L):
        permuted = permute(dataset, seed + i, passes=passes)
        skipped += permuted.permutation_skips or 0
        best_l = _scan_raw(permuted, config)[0]
        maxima[i] = float(best_l.max()) if len(best_l) else 0.0
    return NullDistribution(maxima, seed=seed, L=L, passes=passes,
                            skipped_swaps_total=skipped)


def fit_gumbel(samples, refine: bool = True) -> GumbelFit:
    """Fit Gumbel location/scale to sample maxima.

    Method of moments (beta = s*sqrt(6)/pi, mu = mean - gamma*beta) with an
    optional maximum-likelihood refinement (fixed-point iteration on the
    standard Gumbel MLE equations, tol 1e-9, cap 200 iterations).
    """
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < 10:
        raise ValueError("need at least 10 samples")
    s = float(np.std(x, ddof=1))
    if s == 0.0:
        raise ValueError("samples have zero variance")
    beta = s * math.sqrt(6.0) / math.pi
    mu = float(np.mean(x)) - EULER_GAMMA * beta
    if not refine:
        return GumbelFit(mu, beta)
    mean_x = float(np.mean(x))
    for _ in range(MLE_MAX_ITER):
        w = np.exp(-(x - x.min()) / beta)
        new_beta = mean_x - float(np.sum(x * w) / np.sum(w))
        if new_beta <= 0:
            break
        if abs(new_beta - beta) < MLE_TOL:
            beta = new_beta
            break
        beta = new_beta
    from scipy.special import logsumexp
    mu = -beta * float(logsumexp(-x / beta) - math.log(len(x)))
    return GumbelFit(mu, beta)


def threshold(fit: GumbelFit, p: float) -> float:
    """LGLR value whose null exceedance probability is p."""
    if not (0.0 < p < 1.0):
        raise ValueError("p must be in (0, 1)")
    return fit.mu - fit.beta * math.log(-math.log(1.0 - p))


def p_value_gumbel(lglr_value: float, fit: GumbelFit) -> float:
    """Null exceedance probability of an LGLR value under the fitted
    Gumbel; exact inverse of :func:`threshold`."""
    z = (lglr_value - fit.mu) / fit.beta
    return 1.0 - math.exp(-math.exp(-z))


def p_value_rank(lglr_value: float, null: NullDistribution) -> float:
    """Monte Carlo rank p-value R/(L+1), R = 1 + #{null maxima >= lglr}."""
    if null.L < 1:
        raise ValueError("null distribution is empty")
    r = 1 + int(np.sum(null.maxima >= lglr_value))
    return r / (null.L + 1)
