"""Core spreading engine: pair similarity, the authority overlay, score queues.

Everything here is independent of how evaluations are produced.  The agent
world (``epinews.agents``) drives these primitives; the harness only ever
touches them through a :class:`World`.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np


class DuplicateVoteError(ValueError):
    """A (user, news) pair was voted on twice."""


class DuplicateNewsError(ValueError):
    """A news id was submitted twice."""


# ---------------------------------------------------------------------------
# similarity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimilarityParams:
    """Knobs of the pairwise similarity estimate.

    theta scales the small-sample penalty; epsilon is the base similarity
    assigned to pairs with no common evaluations (and the lower clamp for
    pairs whose penalized estimate would drop to zero or below, so that
    every propagation increment stays strictly positive).
    """

    theta: float = 1.0
    epsilon: float = 0.001

    def __post_init__(self) -> None:
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")


def similarity(m: int, M: int, params: SimilarityParams) -> float:
    """Estimated taste similarity from m matching and M mismatching votes.

    The agreement rate m/(m+M) is discounted by theta/sqrt(m+M) to penalize
    pairs whose overlap is too small to trust.  Pairs with no overlap sit at
    epsilon, and the result never falls below epsilon.
    """
    if m < 0 or M < 0:
        raise ValueError("vote counts must be non-negative")
    n = m + M
    if n == 0:
        return params.epsilon
    raw = (m / n) * (1.0 - params.theta / math.sqrt(n))
    return raw if raw > params.epsilon else params.epsilon


def similarity_values(m: np.ndarray, total: np.ndarray,
                      params: SimilarityParams) -> np.ndarray:
    """Vectorized :func:`similarity` over match counts and totals.

    Keeps the exact operation order of the scalar version so both paths
    produce bit-identical floats.  Entries with total == 0 map to epsilon.
    """
    m = m.astype(np.float64, copy=False)
    total = total.astype(np.float64, copy=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = (m / total) * (1.0 - params.theta / np.sqrt(total))
    out = np.maximum(raw, params.epsilon)
    out[total == 0] = params.epsilon
    return out


# ---------------------------------------------------------------------------
# evaluation ledger
# ---------------------------------------------------------------------------

class EvaluationLedger:
    """All votes plus incrementally maintained per-pair (m, M) counters.

    Counters are stored as dense symmetric matrices: at the population sizes
    this engine targets (hundreds to ~10^4 users) a dense uint16 matrix is
    both smaller and far faster than a per-pair hash map, while implementing
    the same sparse-pair contract (untouched pairs read as (0, 0)).  A vote
    on news alpha only touches the pairs (voter, other voter of alpha).
    """

    def __init__(self, n_users: int, track_pairs: bool = True):
        if n_users < 1:
            raise ValueError("need at least one user")
        self.n_users = n_users
        self._votes: list[dict[int, int]] = [dict() for _ in range(n_users)]
        self._approvers: dict[int, list[int]] = {}
        self._disapprovers: dict[int, list[int]] = {}
        self._n_votes = 0
        self._max_user_votes = 0
        if track_pairs:
            self._m = np.zeros((n_users, n_users), dtype=np.uint16)
            self._M = np.zeros((n_users, n_users), dtype=np.uint16)
        else:
            # Baseline recommenders never read similarities; skipping the
            # matrices saves the dominant memory cost of a run.
            self._m = None
            self._M = None

    @property
    def tracks_pairs(self) -> bool:
        return self._m is not None

    @property
    def n_votes(self) -> int:
        return self._n_votes

    @property
    def max_user_votes(self) -> int:
        """Votes of the most prolific user; upper bound on any pair total."""
        return self._max_user_votes

    def known_news(self) -> list[int]:
        return list(self._approvers)

    def has_news(self, news: int) -> bool:
        return news in self._approvers

    def register_news(self, news: int) -> None:
        if news in self._approvers:
            raise DuplicateNewsError(f"news {news} already exists")
        self._approvers[news] = []
        self._disapprovers[news] = []

    def vote(self, user: int, news: int) -> int:
        """The stored vote (+1/-1), or 0 when the user has not evaluated it."""
        return self._votes[user].get(news, 0)

    def votes_of(self, user: int) -> dict[int, int]:
        return self._votes[user]

    def approvers(self, news: int) -> list[int]:
        return self._approvers.get(news, [])

    def record_evaluation(self, user: int, news: int, vote: int) -> None:
        """Store a vote and update the pair counters with every co-voter."""
        if vote not in (1, -1):
            raise ValueError(f"vote must be +1 or -1, got {vote}")
        if news in self._votes[user]:
            raise DuplicateVoteError(f"user {user} already voted on news {news}")
        if news not in self._approvers:
            self._approvers[news] = []
            self._disapprovers[news] = []
        same = self._approvers[news] if vote == 1 else self._disapprovers[news]
        opposite = self._disapprovers[news] if vote == 1 else self._approvers[news]
        if self._m is not None:
            if same:
                idx = np.array(same, dtype=np.intp)
                self._m[user, idx] += 1
                self._m[idx, user] += 1
            if opposite:
                idx = np.array(opposite, dtype=np.intp)
                self._M[user, idx] += 1
                self._M[idx, user] += 1
        same.append(user)
        self._votes[user][news] = vote
        self._n_votes += 1
        if len(self._votes[user]) > self._max_user_votes:
            self._max_user_votes = len(self._votes[user])

    def pair_counts(self, i: int, j: int) -> tuple[int, int]:
        """(m, M) for the unordered pair {i, j}."""
        if self._m is None:
            raise RuntimeError("pair counters disabled for this ledger")
        return self._m.item(i, j), self._M.item(i, j)

    def counter_rows(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Read-only views of user i's match/mismatch counter rows."""
        if self._m is None:
            raise RuntimeError("pair counters disabled for this ledger")
        return self._m[i], self._M[i]

    def recount_pairs_brute_force(self) -> tuple[np.ndarray, np.ndarray]:
        """Recompute (m, M) matrices from the votes table alone.

        Test oracle for the incremental counters; quadratic, use on small
        populations only.
        """
        n = self.n_users
        m = np.zeros((n, n), dtype=np.int64)
        mm = np.zeros((n, n), dtype=np.int64)
        for news in self._approvers:
            pos = self._approvers[news]
            neg = self._disapprovers[news]
            for group in (pos, neg):
                for a in range(len(group)):
                    for b in range(a + 1, len(group)):
                        i, j = group[a], group[b]
                        m[i, j] += 1
                        m[j, i] += 1
            for i in pos:
                for j in neg:
                    mm[i, j] += 1
                    mm[j, i] += 1
        return m, mm


# ---------------------------------------------------------------------------
# authority network
# ---------------------------------------------------------------------------

class AuthorityNetwork:
    """Directed overlay: every user points at exactly S authorities.

    Follower sets are the maintained reverse adjacency.  Rows of the
    authority matrix are kept in rank or replacement order; all operations
    that care about ordering resolve ties by user id, never by row position.
    """

    def __init__(self, auth: np.ndarray):
        auth = np.asarray(auth, dtype=np.int64)
        if auth.ndim != 2:
            raise ValueError("authority matrix must be 2-D")
        self._auth = auth
        self.n_users, self.n_authorities = auth.shape
        self._auth_sets = [set(row) for row in auth.tolist()]
        self._followers: list[set[int]] = [set() for _ in range(self.n_users)]
        for i, row in enumerate(self._auth_sets):
            if len(row) != self.n_authorities:
                raise ValueError(f"user {i} has duplicate authorities")
            if i in row:
                raise ValueError(f"user {i} lists itself as authority")
            for j in row:
                self._followers[j].add(i)

    @classmethod
    def random(cls, n_users: int, n_authorities: int,
               rng: np.random.Generator) -> "AuthorityNetwork":
        """Uniform random assignment: S distinct authorities per user."""
        if not 0 < n_authorities < n_users:
            raise ValueError("need 0 < S < U")
        auth = np.empty((n_users, n_authorities), dtype=np.int64)
        for i in range(n_users):
            while True:
                row = rng.integers(0, n_users - 1, size=n_authorities)
                if len(set(row.tolist())) == n_authorities:
                    break
            row = np.where(row >= i, row + 1, row)  # skip self, stays uniform
            auth[i] = row
        return cls(auth)

    @property
    def matrix(self) -> np.ndarray:
        """The (U, S) authority id matrix. Treat as read-only."""
        return self._auth

    def authorities(self, i: int) -> list[int]:
        return self._auth[i].tolist()

    def authority_set(self, i: int) -> set[int]:
        return self._auth_sets[i]

    def followers(self, i: int) -> list[int]:
        return sorted(self._followers[i])

    def is_authority(self, i: int, j: int) -> bool:
        return j in self._auth_sets[i]

    def replace(self, i: int, old: int, new: int) -> None:
        """Swap authority `old` of user i for `new`, keeping followers in sync."""
        if old not in self._auth_sets[i]:
            raise ValueError(f"{old} is not an authority of {i}")
        if new == i or new in self._auth_sets[i]:
            raise ValueError(f"{new} is not a valid replacement for user {i}")
        row = self._auth[i]
        row[row == old] = new
        self._auth_sets[i].discard(old)
        self._auth_sets[i].add(new)
        self._followers[old].discard(i)
        self._followers[new].add(i)

    def set_authorities(self, i: int, new_row: list[int]) -> None:
        """Replace user i's whole authority list (length must stay S)."""
        new_set = set(new_row)
        if len(new_set) != self.n_authorities:
            raise ValueError("new authority list has wrong size or duplicates")
        if i in new_set:
            raise ValueError("a user cannot be its own authority")
        old_set = self._auth_sets[i]
        for j in old_set - new_set:
            self._followers[j].discard(i)
        for j in new_set - old_set:
            self._followers[j].add(i)
        self._auth[i] = new_row
        self._auth_sets[i] = new_set

    def check_consistent(self) -> None:
        """Assert the authority/follower invariants; test helper."""
        rebuilt: list[set[int]] = [set() for _ in range(self.n_users)]
        for i in range(self.n_users):
            row = self._auth[i].tolist()
            assert len(set(row)) == self.n_authorities, f"user {i}: duplicate links"
            assert i not in row, f"user {i}: self-link"
            assert set(row) == self._auth_sets[i], f"user {i}: stale set"
            for j in row:
                rebuilt[j].add(i)
        assert rebuilt == self._followers, "follower lists out of sync"


# ---------------------------------------------------------------------------
# recommendation queues
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayParams:
    """Time decay: once a queue holds more than `queue_threshold` items,
    every queued score drops by `decay` per step and non-positive entries
    are evicted.  decay = 0 disables the mechanism."""

    queue_threshold: int = 10
    decay: float = 0.1

    def __post_init__(self) -> None:
        if self.queue_threshold < 0:
            raise ValueError("queue_threshold must be >= 0")
        if self.decay < 0:
            raise ValueError("decay must be >= 0")


class RecommendationQueue:
    """Per-user map news -> positive score, with O(1) uniform decay.

    Decay is implemented as a shared offset: effective score is
    stored - offset, so lowering every entry by lambda is one addition.
    A lazy min-heap over stored values finds entries that fell to <= 0.
    Orderings and evictions are exactly those of the naive per-entry
    subtraction.

    The score is a persistent accumulator: an entry that decay drove to
    <= 0 leaves the queue but keeps its residual, and later increments
    add onto that deficit rather than starting fresh.  Under mild decay a
    single push usually revives the news; after a deep wipe it stays
    buried, which is what lets strong decay kill even good news.
    """

    __slots__ = ("_stored", "_offset", "_heap", "_residual")

    def __init__(self) -> None:
        self._stored: dict[int, float] = {}
        self._offset = 0.0
        self._heap: list[tuple[float, int]] = []
        self._residual: dict[int, float] = {}

    def __len__(self) -> int:
        return len(self._stored)

    def __contains__(self, news: int) -> bool:
        return news in self._stored

    def score(self, news: int) -> float:
        return self._stored[news] - self._offset

    def residual(self, news: int) -> float:
        """The frozen non-positive score of an evicted entry (0.0 if none)."""
        return self._residual.get(news, 0.0)

    def items(self) -> list[tuple[int, float]]:
        off = self._offset
        return [(news, stored - off) for news, stored in self._stored.items()]

    def add(self, news: int, amount: float) -> None:
        """Raise the score of `news` by `amount` (> 0).

        Absent entries start from their residual deficit (0.0 for news this
        queue never evicted); the entry enters the queue only when the
        resulting score is positive.
        """
        if amount <= 0:
            raise ValueError("score increments must be strictly positive")
        stored = self._stored.get(news)
        if stored is None:
            value = self._residual.pop(news, 0.0) + amount
            if value <= 0:
                self._residual[news] = value
                return
            stored = value + self._offset
        else:
            stored += amount
        self._stored[news] = stored
        heapq.heappush(self._heap, (stored, news))

    def discard(self, news: int) -> None:
        """Forget the news entirely (read/evaluated items never return)."""
        self._stored.pop(news, None)
        self._residual.pop(news, None)

    def top(self, r: int) -> list[int]:
        """The min(r, size) news ids with highest scores, descending;
        score ties go to the smaller id."""
        if r < 0:
            raise ValueError("r must be >= 0")
        if r == 0 or not self._stored:
            return []
        best = heapq.nsmallest(r, self._stored.items(),
                               key=lambda kv: (-kv[1], kv[0]))
        return [news for news, _ in best]

    def decay(self, params: DecayParams) -> None:
        """Apply one decay step if the queue exceeds the size threshold."""
        if params.decay == 0 or len(self._stored) <= params.queue_threshold:
            return
        self._offset += params.decay
        heap, stored, off = self._heap, self._stored, self._offset
        while heap and heap[0][0] <= off:
            pushed, news = heapq.heappop(heap)
            current = stored.get(news)
            # Skip entries already read or superseded by a later increment.
            if current is not None and current <= off:
                self._residual[news] = current - off
                del stored[news]


def top_news(queue: RecommendationQueue, r: int) -> list[int]:
    """Spec-level alias for :meth:`RecommendationQueue.top`."""
    return queue.top(r)


def apply_decay(queue: RecommendationQueue, params: DecayParams) -> None:
    """Spec-level alias for :meth:`RecommendationQueue.decay`."""
    queue.decay(params)


# ---------------------------------------------------------------------------
# engine state and propagation
# ---------------------------------------------------------------------------

class EngineState:
    """Ledger + overlay + queues, mutated strictly sequentially."""

    def __init__(self, ledger: EvaluationLedger, network: AuthorityNetwork,
                 params: SimilarityParams):
        if ledger.n_users != network.n_users:
            raise ValueError("ledger and network disagree on population size")
        self.ledger = ledger
        self.network = network
        self.params = params
        self.queues = [RecommendationQueue() for _ in range(ledger.n_users)]
        self._sim_table: np.ndarray | None = None

    @property
    def n_users(self) -> int:
        return self.ledger.n_users

    def similarity_between(self, i: int, j: int) -> float:
        m, M = self.ledger.pair_counts(i, j)
        return similarity(m, M, self.params)

    def similarity_table(self) -> np.ndarray:
        """Similarity indexed by [m, m + M], covering every count pair the
        ledger can currently hold.  Values are bit-identical to
        :func:`similarity` because the table is built with the same
        vectorized arithmetic."""
        size = max(64, self.ledger.max_user_votes + 1)
        if self._sim_table is None or self._sim_table.shape[0] < size:
            size = max(size, 2 * (self._sim_table.shape[0] if
                                  self._sim_table is not None else 0))
            match_grid = np.repeat(np.arange(size, dtype=np.float64)[:, None],
                                   size, axis=1)
            total_grid = np.repeat(np.arange(size, dtype=np.float64)[None, :],
                                   size, axis=0)
            self._sim_table = similarity_values(match_grid, total_grid,
                                                self.params)
        return self._sim_table


def propagate_approval(state: EngineState, approver: int, news: int) -> None:
    """Push an approved news to the approver's followers.

    Each follower who has not yet evaluated the news gets its queued score
    raised by the follower-approver similarity; followers who already voted
    receive nothing (evaluated news never re-enter a queue).
    """
    ledger = state.ledger
    theta = state.params.theta
    eps = state.params.epsilon
    for k in state.network.followers(approver):
        if ledger.vote(k, news) == 0:
            m, M = ledger.pair_counts(k, approver)
            n = m + M
            if n == 0:
                s = eps
            else:
                raw = (m / n) * (1.0 - theta / math.sqrt(n))
                s = raw if raw > eps else eps
            state.queues[k].add(news, s)


def submit_news(state: EngineState, originator: int, news: int) -> None:
    """Introduce a fresh news: auto-approved by its originator and pushed
    to the originator's followers."""
    state.ledger.register_news(news)
    state.ledger.record_evaluation(originator, news, 1)
    propagate_approval(state, originator, news)


# ---------------------------------------------------------------------------
# rewiring strategies
# ---------------------------------------------------------------------------

def _authority_extremes(state: EngineState, i: int) -> tuple[int, float, int, float]:
    """(best_id, best_s, worst_id, worst_s) over i's authorities.

    Similarity ties resolve to the smaller user id for both extremes.
    """
    ledger = state.ledger
    theta = state.params.theta
    eps = state.params.epsilon
    m_row, M_row = ledger.counter_rows(i)
    best_j = worst_j = -1
    best_s = -1.0
    worst_s = math.inf
    for j in state.network.authorities(i):
        m = m_row.item(j)
        n = m + M_row.item(j)
        if n == 0:
            s = eps
        else:
            raw = (m / n) * (1.0 - theta / math.sqrt(n))
            s = raw if raw > eps else eps
        if s > best_s or (s == best_s and j < best_j):
            best_j, best_s = j, s
        if s < worst_s or (s == worst_s and j < worst_j):
            worst_j, worst_s = j, s
    return best_j, best_s, worst_j, worst_s


def top_similar(ledger: EvaluationLedger, i: int, s_count: int,
                params: SimilarityParams, incumbents=()) -> list[int]:
    """The s_count users most similar to i.

    Ranking is by similarity descending, with ties going first to current
    authorities (`incumbents`) and then to the smaller user id.  Keeping
    incumbents on ties matters: before many evaluations exist nearly every
    candidate sits at the epsilon base similarity, and a pure smallest-id
    rule would funnel the whole population onto a handful of users,
    severing news delivery for everyone else.

    Only users sharing evaluations with i can sit above epsilon, so the
    search runs over i's counter partners; remaining slots are filled from
    the epsilon pool (everyone else, including partners whose clamped
    similarity equals epsilon) under the same tie rule.
    """
    n_users = ledger.n_users
    if s_count >= n_users:
        raise ValueError("cannot select S >= U authorities")
    incumbents = set(incumbents)
    m_row, M_row = ledger.counter_rows(i)
    partners = np.flatnonzero(m_row | M_row)
    selected: list[int] = []
    if partners.size:
        partners = partners[partners != i]
        sims = similarity_values(m_row[partners],
                                 m_row[partners].astype(np.int64) + M_row[partners],
                                 params)
        strict = sims > params.epsilon
        cand_ids = partners[strict]
        cand_sims = sims[strict]
        if incumbents:
            outsider = ~np.isin(cand_ids, list(incumbents))
        else:
            outsider = np.ones(cand_ids.size, dtype=bool)
        order = np.lexsort((cand_ids, outsider, -cand_sims))
        selected = cand_ids[order[:s_count]].tolist()
    if len(selected) < s_count:
        taken = set(selected)
        taken.add(i)
        for j in sorted(incumbents):
            if len(selected) == s_count:
                break
            if j not in taken:
                selected.append(j)
                taken.add(j)
        uid = 0
        while len(selected) < s_count:
            if uid not in taken:
                selected.append(uid)
                taken.add(uid)
            uid += 1
    return selected


def rewire_optimal(state: EngineState, i: int) -> None:
    """Point user i at the S users with the highest current similarity."""
    network = state.network
    network.set_authorities(
        i, top_similar(state.ledger, i, network.n_authorities, state.params,
                       incumbents=network.authority_set(i)))


def rewire_optimal_all(state: EngineState, block: int = 768) -> None:
    """One optimal-rewiring pass over every user, vectorized in row blocks.

    Produces exactly the rows a :func:`rewire_optimal` sweep would: each
    user's selection depends only on the shared counters and their own
    incumbents, so the sequential sweep and this snapshot batch coincide.
    Candidates strictly above the S-th-best similarity are always taken;
    the remaining slots are resolved among boundary ties by the usual
    incumbent-first, smaller-id rule.
    """
    ledger = state.ledger
    network = state.network
    n_users = network.n_users
    s_count = network.n_authorities
    m_all, M_all = ledger._m, ledger._M
    kth = n_users - s_count
    table = state.similarity_table()
    incumbent_sets = [set(row) for row in network.matrix.tolist()]
    for i0 in range(0, n_users, block):
        i1 = min(i0 + block, n_users)
        mb = m_all[i0:i1]
        # Counts are bounded by the busiest user's vote total, which the
        # table covers, so the uint16 sum cannot wrap.
        sims = table[mb, mb + M_all[i0:i1]]
        sims[np.arange(i1 - i0), np.arange(i0, i1)] = -1.0  # exclude self
        part = np.argpartition(sims, kth, axis=1)
        boundary = np.take_along_axis(sims, part[:, kth:kth + 1], axis=1).ravel()
        for r in range(i1 - i0):
            i = i0 + r
            row = sims[r]
            b = boundary[r]
            strict = np.flatnonzero(row > b).tolist()
            need = s_count - len(strict)
            tied = np.flatnonzero(row == b).tolist()
            incumbents = incumbent_sets[i]
            if need < len(tied):
                # Tie groups can span most of the population early on, so
                # resolve from the (at most S) incumbents outward.
                chosen = sorted(j for j in incumbents if row[j] == b)[:need]
                missing = need - len(chosen)
                if missing > 0:
                    for j in tied:
                        if j not in incumbents:
                            chosen.append(j)
                            missing -= 1
                            if missing == 0:
                                break
            else:
                chosen = tied
            selected = strict + chosen
            selected.sort(key=lambda j: (-row[j], j not in incumbents, j))
            network.set_authorities(i, selected)


def rewire_random(state: EngineState, i: int, rng: np.random.Generator) -> bool:
    """Confront i's least-similar authority with a random non-authority.

    The candidate replaces the worst authority only when strictly more
    similar.  Returns True when a replacement happened.
    """
    n_users = state.n_users
    auth_set = state.network.authority_set(i)
    while True:
        k = int(rng.integers(n_users))
        if k != i and k not in auth_set:
            break
    _, _, worst_j, worst_s = _authority_extremes(state, i)
    if state.similarity_between(i, k) > worst_s:
        state.network.replace(i, worst_j, k)
        return True
    return False


def rewire_bara(state: EngineState, i: int, rng: np.random.Generator) -> bool:
    """Replace-worst with a candidate drawn from the best authority's own
    authorities (minus i and i's current authorities).  No-op when that
    pool is empty.  Returns True when a replacement happened."""
    best_j, _, worst_j, worst_s = _authority_extremes(state, i)
    auth_set = state.network.authority_set(i)
    pool = [k for k in state.network.authorities(best_j)
            if k != i and k not in auth_set]
    if not pool:
        return False
    pool.sort()
    k = pool[int(rng.integers(len(pool)))]
    if state.similarity_between(i, k) > worst_s:
        state.network.replace(i, worst_j, k)
        return True
    return False
