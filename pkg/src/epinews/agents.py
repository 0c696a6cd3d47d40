"""The artificial reader population driving the engine.

Users carry binary taste vectors; news inherit their originator's tastes
plus a scalar quality.  Satisfaction is quality times taste overlap, with
optional uniform evaluation noise, and a fixed threshold splits approvals
from disapprovals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import baselines, metrics
from .engine import (
    DecayParams,
    EngineState,
    EvaluationLedger,
    AuthorityNetwork,
    SimilarityParams,
    propagate_approval,
    rewire_bara,
    rewire_optimal,
    rewire_optimal_all,
    rewire_random,
    submit_news,
)

STRATEGIES = ("optimal", "random", "bara")
RECOMMENDERS = ("adaptive", "random", "absPop", "relPop")

#: Authority-update cadence when none is configured: the optimal scheme
#: refreshes every ten steps, the sampling schemes act each step.
DEFAULT_PERIODS = {"optimal": 10, "random": 1, "bara": 1}


@dataclass(frozen=True)
class TasteVector:
    """Binary preference vector stored as a bit mask (bit p = coordinate p)."""

    mask: int
    dim: int

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError("dimension must be positive")
        if not 0 <= self.mask < (1 << self.dim):
            raise ValueError("mask out of range for dimension")

    @classmethod
    def from_bits(cls, bits) -> "TasteVector":
        bits = list(bits)
        mask = 0
        for pos, b in enumerate(bits):
            if b not in (0, 1):
                raise ValueError("bits must be 0 or 1")
            mask |= b << pos
        return cls(mask, len(bits))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.mask >> p) & 1 for p in range(self.dim))

    @property
    def ones(self) -> int:
        return self.mask.bit_count()

    def overlap(self, other: "TasteVector") -> int:
        """Scalar product with another binary vector."""
        return (self.mask & other.mask).bit_count()

    def hamming(self, other: "TasteVector") -> int:
        return (self.mask ^ other.mask).bit_count()


@dataclass(frozen=True)
class NewsItem:
    id: int
    originator: int
    attributes: TasteVector
    quality: float
    birth_step: int

    def __post_init__(self) -> None:
        if self.quality <= 0:
            raise ValueError("news quality must be positive")


@dataclass(frozen=True)
class AgentParams:
    """Activity model: per step a user is active with probability p_active;
    an active user reads the top `reads` queued news and submits a fresh one
    with probability p_submit.  `noise` is the amplitude of the uniform
    evaluation error; per-user overrides support heterogeneous populations.
    """

    p_active: float = 0.02
    p_submit: float = 0.01
    reads: int = 3
    threshold: float = 3.0
    noise: float = 0.0
    p_active_overrides: dict[int, float] | None = None
    noise_overrides: dict[int, float] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_active <= 1.0:
            raise ValueError("p_active must be in [0, 1]")
        if not 0.0 <= self.p_submit <= 1.0:
            raise ValueError("p_submit must be in [0, 1]")
        if self.reads < 0:
            raise ValueError("reads must be >= 0")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        for d in (self.p_active_overrides, self.noise_overrides):
            if d:
                for v in d.values():
                    if v < 0:
                        raise ValueError("override values must be >= 0")


def build_population(dim: int, ones: int, count: int | None = None,
                     rng: np.random.Generator | None = None) -> list[TasteVector]:
    """All (or a uniform sample of) distinct binary vectors with `ones` bits set.

    With `count` omitted or equal to C(dim, ones), returns every vector in
    lexicographic position order; otherwise a random `count`-subset, in the
    same canonical order.
    """
    if not 0 < ones < dim:
        raise ValueError("need 0 < ones < dim")
    total = math.comb(dim, ones)
    if count is None:
        count = total
    if count > total:
        raise ValueError(f"population {count} exceeds the {total} distinct vectors")
    if count < 1:
        raise ValueError("population must be positive")
    masks = [sum(1 << p for p in combo)
             for combo in itertools.combinations(range(dim), ones)]
    if count < total:
        if rng is None:
            raise ValueError("sampling a sub-population requires an rng")
        chosen = np.sort(rng.choice(total, size=count, replace=False))
        masks = [masks[k] for k in chosen.tolist()]
    return [TasteVector(mask, dim) for mask in masks]


def satisfaction(tastes: TasteVector, news: NewsItem, noise: float,
                 rng: np.random.Generator | None = None) -> float:
    """Quality-weighted taste overlap, plus noise * E with E ~ U(-1, 1).

    With noise = 0 this is exactly quality * overlap and consumes no
    randomness.
    """
    if tastes.dim != news.attributes.dim:
        raise ValueError(
            f"dimension mismatch: tastes {tastes.dim} vs news {news.attributes.dim}")
    omega = news.quality * tastes.overlap(news.attributes)
    if noise > 0:
        if rng is None:
            raise ValueError("noisy evaluation requires an rng")
        omega += noise * float(rng.uniform(-1.0, 1.0))
    return omega


def decide(omega: float, threshold: float) -> int:
    """+1 when satisfaction reaches the threshold (boundary approves), else -1."""
    return 1 if omega >= threshold else -1


def make_news(originator: int, tastes: TasteVector, news_id: int,
              birth_step: int, rng: np.random.Generator,
              quality: float | None = None) -> NewsItem:
    """A fresh news: attributes copy the originator's tastes; quality is
    uniform on [0.5, 1.5] unless explicitly overridden (injection runs)."""
    q = float(rng.uniform(0.5, 1.5)) if quality is None else float(quality)
    return NewsItem(news_id, originator, tastes, q, birth_step)


@dataclass
class StepTally:
    """Per-step outcome counts; assessments exclude submission auto-approvals."""

    step: int
    approvals: int = 0
    assessments: int = 0
    submissions: int = 0
    excess_differences: float = 0.0
    mean_queue_len: float = 0.0
    tagged_readers: dict[int, int] = field(default_factory=dict)


class World:
    """One simulated community: population, engine state, activity loop.

    A world advances strictly sequentially under its own seeded generator;
    independent worlds are fully isolated and may run in parallel.
    """

    def __init__(self,
                 tastes: list[TasteVector],
                 rng: np.random.Generator,
                 agent_params: AgentParams | None = None,
                 sim_params: SimilarityParams | None = None,
                 decay_params: DecayParams | None = None,
                 n_authorities: int = 10,
                 strategy: str = "optimal",
                 rewire_period: int | None = None,
                 recommender: str = "adaptive",
                 injection: tuple[int, int, float] | None = None,
                 record_events: bool = False):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        if recommender not in RECOMMENDERS:
            raise ValueError(f"unknown recommender {recommender!r}")
        dims = {t.dim for t in tastes}
        if len(dims) != 1:
            raise ValueError("all taste vectors must share one dimension")

        self.tastes = tastes
        self.taste_masks = np.array([t.mask for t in tastes], dtype=np.uint32)
        self.rng = rng
        self.agent_params = agent_params or AgentParams()
        self.sim_params = sim_params or SimilarityParams()
        self.decay_params = decay_params or DecayParams()
        self.strategy = strategy
        self.rewire_period = (DEFAULT_PERIODS[strategy]
                              if rewire_period is None else rewire_period)
        if self.rewire_period < 1:
            raise ValueError("rewire period must be >= 1")
        self.recommender = recommender
        self.adaptive = recommender == "adaptive"

        n_users = len(tastes)
        ledger = EvaluationLedger(n_users, track_pairs=self.adaptive)
        network = AuthorityNetwork.random(n_users, n_authorities, rng)
        self.state = EngineState(ledger, network, self.sim_params)
        self.initial_authorities = network.matrix.copy()

        self.news: list[NewsItem] = []
        self.tally = baselines.PopularityTally()
        self.step_index = 0
        self.tagged_ids: list[int] = []
        self.events: list[tuple] | None = [] if record_events else None

        ap = self.agent_params
        self._pa_vec = np.full(n_users, ap.p_active)
        self._noise_vec = np.full(n_users, ap.noise)
        for overrides, vec in ((ap.p_active_overrides, self._pa_vec),
                               (ap.noise_overrides, self._noise_vec)):
            if overrides:
                for uid, value in overrides.items():
                    vec[int(uid)] = value

        if injection is not None:
            count, from_step, quality = injection
            if count < 0 or from_step < 0 or quality <= 0:
                raise ValueError("invalid injection spec")
            self._inject_remaining = count
            self._inject_from = from_step
            self._inject_quality = quality
        else:
            self._inject_remaining = 0
            self._inject_from = 0
            self._inject_quality = 0.0

        # Static overlay under baseline recommenders: cache its metric.
        self._static_excess = None if self.adaptive else self.excess_differences()

    @property
    def n_users(self) -> int:
        return len(self.tastes)

    @property
    def n_news(self) -> int:
        return len(self.news)

    def excess_differences(self) -> float:
        return metrics.excess_differences_arrays(
            self.state.network.matrix, self.taste_masks)

    def _mean_queue_len(self) -> float:
        queues = self.state.queues
        return sum(len(q) for q in queues) / len(queues)

    def _recommend(self, user: int) -> list[int]:
        """The ids the user reads this activation, most recommended first."""
        if self.adaptive:
            return self.state.queues[user].top(self.agent_params.reads)
        n = len(self.news)
        voted = self.state.ledger.votes_of(user)
        if n == 0 or n == len(voted):
            return []
        mask = np.ones(n, dtype=bool)
        if voted:
            mask[list(voted)] = False
        pool = np.flatnonzero(mask)
        r = self.agent_params.reads
        if self.recommender == "random":
            return baselines.recommend_random(pool, r, self.rng)
        if self.recommender == "absPop":
            return baselines.recommend_abs_popularity(pool, self.tally, r)
        return baselines.recommend_rel_popularity(
            pool, self.tally, r, self.sim_params.epsilon)

    def _submit(self, user: int, step: int, tally: StepTally) -> None:
        quality = None
        tagged = False
        if self._inject_remaining > 0 and step >= self._inject_from:
            quality = self._inject_quality
            self._inject_remaining -= 1
            tagged = True
        item = make_news(user, self.tastes[user], len(self.news), step,
                         self.rng, quality)
        self.news.append(item)
        self.tally.register(item.id)
        if self.adaptive:
            submit_news(self.state, user, item.id)
        else:
            self.state.ledger.register_news(item.id)
            self.state.ledger.record_evaluation(user, item.id, 1)
        if tagged:
            self.tagged_ids.append(item.id)
            tally.tagged_readers[item.id] = 0
        tally.submissions += 1
        if self.events is not None:
            self.events.append(("submit", step, user, item.id))

    def step(self) -> StepTally:
        """Advance one time step.

        Per active user (ascending id): read and evaluate the recommended
        news, propagating approvals, then maybe submit.  Afterwards decay
        runs on every queue, and on rewire-period steps every user's
        authorities are updated.
        """
        self.step_index += 1
        t = self.step_index
        tally = StepTally(step=t,
                          tagged_readers={a: 0 for a in self.tagged_ids})
        rng = self.rng
        ledger = self.state.ledger
        queues = self.state.queues
        threshold = self.agent_params.threshold
        record = self.events is not None

        draws = rng.random(self.n_users)
        active = np.flatnonzero(draws < self._pa_vec).tolist()
        for i in active:
            picks = self._recommend(i)
            if picks:
                mask_i = int(self.taste_masks[i])
                noise = float(self._noise_vec[i])
                for news_id in picks:
                    item = self.news[news_id]
                    omega = item.quality * (mask_i & item.attributes.mask).bit_count()
                    if noise > 0:
                        omega += noise * float(rng.uniform(-1.0, 1.0))
                    vote = 1 if omega >= threshold else -1
                    if self.adaptive:
                        queues[i].discard(news_id)
                    ledger.record_evaluation(i, news_id, vote)
                    self.tally.record_vote(news_id, vote)
                    tally.assessments += 1
                    if vote == 1:
                        tally.approvals += 1
                    if news_id in tally.tagged_readers:
                        tally.tagged_readers[news_id] += 1
                    if record:
                        self.events.append(("vote", t, i, news_id, vote))
                    if vote == 1 and self.adaptive:
                        propagate_approval(self.state, i, news_id)
            if rng.random() < self.agent_params.p_submit:
                self._submit(i, t, tally)

        if self.adaptive and self.decay_params.decay > 0:
            dp = self.decay_params
            for q in queues:
                q.decay(dp)

        if self.adaptive and t % self.rewire_period == 0:
            self._rewire_all(t)

        if self.adaptive:
            tally.excess_differences = self.excess_differences()
            tally.mean_queue_len = self._mean_queue_len()
        else:
            tally.excess_differences = self._static_excess
            tally.mean_queue_len = 0.0
        return tally

    def _rewire_all(self, step: int) -> None:
        state = self.state
        record = self.events is not None
        if self.strategy == "optimal":
            # Row-for-row identical paths: the per-user sweep wins while the
            # counter matrix is sparse, the block pass once it fills in.
            if state.ledger.n_votes < 20_000:
                for i in range(self.n_users):
                    rewire_optimal(state, i)
            else:
                rewire_optimal_all(state)
            if record:
                for i in range(self.n_users):
                    self.events.append(
                        ("rewire", step, i, tuple(state.network.authorities(i))))
        elif self.strategy == "random":
            for i in range(self.n_users):
                if rewire_random(state, i, self.rng) and record:
                    self.events.append(
                        ("rewire", step, i, tuple(state.network.authorities(i))))
        else:
            for i in range(self.n_users):
                if rewire_bara(state, i, self.rng) and record:
                    self.events.append(
                        ("rewire", step, i, tuple(state.network.authorities(i))))
