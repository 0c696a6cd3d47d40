"""Reference recommenders that ignore the authority overlay.

All three pick from the caller-supplied pool of news the user has not yet
voted on; popularity ranks come from a shared global tally.
"""

from __future__ import annotations

import numpy as np


class PopularityTally:
    """Approval and evaluation counts per news id (dense, ids are sequential).

    Submission auto-approvals are deliberately not counted: tallies reflect
    reader verdicts only, so fresh news start genuinely unevaluated.
    """

    def __init__(self, capacity: int = 1024):
        self._approvals = np.zeros(capacity, dtype=np.int64)
        self._evaluations = np.zeros(capacity, dtype=np.int64)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    def register(self, news: int) -> None:
        if news != self._n:
            raise ValueError(f"news ids must be registered in order, got {news}")
        if self._n == len(self._approvals):
            self._approvals = np.concatenate([self._approvals, np.zeros_like(self._approvals)])
            self._evaluations = np.concatenate([self._evaluations, np.zeros_like(self._evaluations)])
        self._n += 1

    def record_vote(self, news: int, vote: int) -> None:
        if not 0 <= news < self._n:
            raise ValueError(f"unknown news id {news}")
        self._evaluations[news] += 1
        if vote == 1:
            self._approvals[news] += 1

    @property
    def approvals(self) -> np.ndarray:
        return self._approvals[:self._n]

    @property
    def evaluations(self) -> np.ndarray:
        return self._evaluations[:self._n]

    def approvals_of(self, news: int) -> int:
        return int(self._approvals[news])

    def evaluations_of(self, news: int) -> int:
        return int(self._evaluations[news])


def recommend_random(pool, r: int, rng: np.random.Generator) -> list[int]:
    """Uniform sample without replacement of min(r, |pool|) pool items."""
    pool = np.asarray(pool, dtype=np.int64)
    if r < 0:
        raise ValueError("r must be >= 0")
    take = min(r, pool.size)
    if take == 0:
        return []
    return rng.choice(pool, size=take, replace=False).tolist()


def recommend_abs_popularity(pool, tally: PopularityTally, r: int) -> list[int]:
    """Top r pool items by approval count, ties to the smaller news id."""
    pool = np.asarray(pool, dtype=np.int64)
    if r < 0:
        raise ValueError("r must be >= 0")
    if r == 0 or pool.size == 0:
        return []
    order = np.lexsort((pool, -tally.approvals[pool]))
    return pool[order[:r]].tolist()


def recommend_rel_popularity(pool, tally: PopularityTally, r: int,
                             prior: float = 0.001) -> list[int]:
    """Top r pool items by approvals/evaluations.

    News nobody evaluated yet rank at the small prior score rather than 0
    or 1, so they are neither buried nor flooding the top.
    """
    pool = np.asarray(pool, dtype=np.int64)
    if r < 0:
        raise ValueError("r must be >= 0")
    if r == 0 or pool.size == 0:
        return []
    approvals = tally.approvals[pool].astype(np.float64)
    evaluations = tally.evaluations[pool]
    ratios = approvals / np.maximum(evaluations, 1)
    ratios[evaluations == 0] = prior
    order = np.lexsort((pool, -ratios))
    return pool[order[:r]].tolist()
