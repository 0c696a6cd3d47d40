"""Shared fixtures and independent reference implementations (test oracles)."""

from __future__ import annotations

import math

import numpy as np
import pytest

from epinews.engine import (
    AuthorityNetwork,
    EngineState,
    EvaluationLedger,
    SimilarityParams,
)

# Desk-scale population for CI-speed property tests: C(12, 4) = 495 users.
DESK_DIM = 12
DESK_ONES = 4


def brute_force_counters(ledger: EvaluationLedger) -> dict[tuple[int, int], tuple[int, int]]:
    """Recount (m, M) per unordered pair straight from the votes tables."""
    counts: dict[tuple[int, int], tuple[int, int]] = {}
    n = ledger.n_users
    for i in range(n):
        vi = ledger.votes_of(i)
        for j in range(i + 1, n):
            vj = ledger.votes_of(j)
            m = mm = 0
            small, big = (vi, vj) if len(vi) <= len(vj) else (vj, vi)
            for news, vote in small.items():
                other = big.get(news)
                if other is None:
                    continue
                if other == vote:
                    m += 1
                else:
                    mm += 1
            if m or mm:
                counts[(i, j)] = (m, mm)
    return counts


def reference_similarity(m: int, M: int, theta: float, eps: float) -> float:
    """Straight-line transcription of the similarity estimate with clamp."""
    if m + M == 0:
        return eps
    value = (m / (m + M)) * (1 - theta / math.sqrt(m + M))
    return max(eps, value)


class NaiveQueue:
    """Reference queue: plain dicts, decay subtracts from every entry.

    Mirrors the production semantics: scores of decayed-out entries are
    kept as non-positive residuals that later increments add onto.
    """

    def __init__(self) -> None:
        self.entries: dict[int, float] = {}
        self.residuals: dict[int, float] = {}

    def add(self, news: int, amount: float) -> None:
        if news in self.entries:
            self.entries[news] += amount
            return
        value = self.residuals.pop(news, 0.0) + amount
        if value > 0:
            self.entries[news] = value
        else:
            self.residuals[news] = value

    def discard(self, news: int) -> None:
        self.entries.pop(news, None)
        self.residuals.pop(news, None)

    def top(self, r: int) -> list[int]:
        ranked = sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))
        return [news for news, _ in ranked[:r]]

    def decay(self, lam: float, threshold: int) -> None:
        if lam == 0 or len(self.entries) <= threshold:
            return
        survivors: dict[int, float] = {}
        for news, score in self.entries.items():
            score -= lam
            if score > 0:
                survivors[news] = score
            else:
                self.residuals[news] = score
        self.entries = survivors


def fixed_network(rows: list[list[int]]) -> AuthorityNetwork:
    return AuthorityNetwork(np.array(rows, dtype=np.int64))


def make_state(n_users: int, n_auth: int, seed: int = 0,
               theta: float = 1.0, epsilon: float = 0.001) -> EngineState:
    rng = np.random.default_rng(seed)
    ledger = EvaluationLedger(n_users)
    network = AuthorityNetwork.random(n_users, n_auth, rng)
    return EngineState(ledger, network, SimilarityParams(theta, epsilon))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
