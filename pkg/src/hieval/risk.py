"""Expected-cost reranking of fine-class probabilities.

Given a leaf-by-leaf cost matrix (LCA heights from the taxonomy), the risk of
predicting class i is the expectation of the cost under the model's own
probabilities, risk_i = sum_j C[i, j] * p_j. Ranking classes by ascending
risk yields the minimum-expected-cost prediction at position 0 and a full
cost-aware ordering for top-k metrics. Composes after probability combining,
which is a different correction: combining moves mass between subtrees,
reranking trades probability against cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import hie_combine
from .errors import DimensionMismatch, KindConflict
from .scores import PROBABILITIES, ScoreMatrix


@dataclass(frozen=True, eq=False)
class RiskRanking:
    """Classes ordered by ascending expected cost, per sample.

    ``order[n]`` is a permutation of class indices; ``risks[n]`` holds the
    matching risk values and is non-decreasing along the row. Ties are broken
    by ascending class index.
    """

    order: np.ndarray
    risks: np.ndarray

    @property
    def predictions(self) -> np.ndarray:
        return self.order[:, 0]


def _check_costs(costs, n_classes: int) -> np.ndarray:
    c = np.asarray(costs, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionMismatch(f"cost matrix must be square, got shape {c.shape}")
    if c.shape[0] != n_classes:
        raise DimensionMismatch(
            f"cost matrix side {c.shape[0]} does not match {n_classes} classes"
        )
    return c


def expected_costs(probs: ScoreMatrix, costs) -> np.ndarray:
    """Per-sample, per-class risk: probs @ costs transposed."""
    if probs.kind != PROBABILITIES:
        raise KindConflict(f"expected probabilities, got kind {probs.kind!r}")
    c = _check_costs(costs, probs.n_classes)
    return probs.values @ c.T


def crm_rerank(probs: ScoreMatrix, costs) -> RiskRanking:
    """Rank classes by ascending expected cost under ``probs``."""
    risks = expected_costs(probs, costs)
    order = np.argsort(risks, axis=1, kind="stable")
    ranked = np.take_along_axis(risks, order, axis=1)
    order.setflags(write=False)
    ranked.setflags(write=False)
    return RiskRanking(order=order, risks=ranked)


def hie_then_crm(fine: ScoreMatrix, coarse: ScoreMatrix, pmap, costs) -> RiskRanking:
    """Combine fine with coarse first, then rerank the result by expected cost."""
    combined = hie_combine(fine, coarse, pmap)
    return crm_rerank(combined.scores, costs)
