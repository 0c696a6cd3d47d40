import itertools

import numpy as np
import pytest

from epinews.engine import (
    EngineState,
    EvaluationLedger,
    SimilarityParams,
    rewire_bara,
    rewire_optimal,
    rewire_optimal_all,
    rewire_random,
    similarity,
    top_similar,
)

from conftest import fixed_network, make_state


def _seed_pair_history(state: EngineState, i: int, j: int, m: int, M: int,
                       news_base: int) -> int:
    """Give pair (i, j) exactly m matches and M mismatches via real votes."""
    news = news_base
    for _ in range(m):
        state.ledger.record_evaluation(i, news, 1)
        state.ledger.record_evaluation(j, news, 1)
        news += 1
    for _ in range(M):
        state.ledger.record_evaluation(i, news, 1)
        state.ledger.record_evaluation(j, news, -1)
        news += 1
    return news


def brute_force_top(state: EngineState, i: int, s_count: int,
                    incumbents=()) -> list[int]:
    """Independent oracle: full sort of all candidates by the tie rule."""
    incumbents = set(incumbents)
    ranked = sorted(
        (j for j in range(state.n_users) if j != i),
        key=lambda j: (-state.similarity_between(i, j),
                       0 if j in incumbents else 1, j))
    return ranked[:s_count]


def test_optimal_picks_highest_similarity():
    state = make_state(6, 1, seed=1)
    base = 0
    base = _seed_pair_history(state, 0, 1, 3, 1, base)    # 0.375
    base = _seed_pair_history(state, 0, 3, 2, 2, base)    # 0.25
    base = _seed_pair_history(state, 0, 4, 1, 3, base)    # clamped low
    rewire_optimal(state, 0)
    assert state.network.authorities(0) == [1]
    assert state.network.authorities(0) == brute_force_top(
        state, 0, 1, incumbents=state.network.authority_set(0))
    state.network.check_consistent()


def test_optimal_keeps_incumbents_on_all_epsilon_ties():
    # Without any vote history every candidate ties at the base similarity;
    # the current assignment must survive so the overlay cannot collapse.
    state = make_state(10, 3, seed=5)
    before = [state.network.authorities(i) for i in range(10)]
    for i in range(10):
        rewire_optimal(state, i)
    after = [state.network.authorities(i) for i in range(10)]
    assert [sorted(a) for a in after] == [sorted(b) for b in before]
    state.network.check_consistent()


def test_optimal_with_s_equal_u_minus_1():
    state = make_state(5, 4, seed=2)
    _seed_pair_history(state, 0, 2, 1, 5, 0)
    rewire_optimal(state, 0)
    assert sorted(state.network.authorities(0)) == [1, 2, 3, 4]


def test_optimal_matches_brute_force_on_random_histories():
    rng = np.random.default_rng(17)
    for trial in range(25):
        state = make_state(12, 3, seed=100 + trial)
        seen = set()
        for _ in range(120):
            user = int(rng.integers(12))
            news = int(rng.integers(25))
            if (user, news) in seen:
                continue
            seen.add((user, news))
            state.ledger.record_evaluation(user, news,
                                           1 if rng.random() < 0.6 else -1)
        for i in range(12):
            expected = brute_force_top(state, i, 3,
                                       incumbents=state.network.authority_set(i))
            got = top_similar(state.ledger, i, 3, state.params,
                              incumbents=state.network.authority_set(i))
            assert got == expected, f"user {i}, trial {trial}"


def test_optimal_sum_is_maximal_over_all_subsets():
    rng = np.random.default_rng(23)
    state = make_state(9, 3, seed=55)
    seen = set()
    for _ in range(80):
        user = int(rng.integers(9))
        news = int(rng.integers(20))
        if (user, news) in seen:
            continue
        seen.add((user, news))
        state.ledger.record_evaluation(user, news, 1 if rng.random() < 0.6 else -1)
    for i in range(9):
        rewire_optimal(state, i)
        chosen_sum = sum(state.similarity_between(i, j)
                         for j in state.network.authorities(i))
        for subset in itertools.combinations(
                (j for j in range(9) if j != i), 3):
            other = sum(state.similarity_between(i, j) for j in subset)
            assert chosen_sum >= other - 1e-12


def _min_authority_similarity(state: EngineState, i: int) -> float:
    return min(state.similarity_between(i, j)
               for j in state.network.authorities(i))


def _single_candidate_state(better: bool) -> EngineState:
    """User 0 with authorities {1, 2}; user 3 is the only possible draw."""
    network = fixed_network([
        [1, 2], [0, 2], [0, 1], [0, 1],
    ])
    ledger = EvaluationLedger(4)
    state = EngineState(ledger, network, SimilarityParams())
    base = 0
    base = _seed_pair_history(state, 0, 1, 3, 1, base)   # s = 0.375
    base = _seed_pair_history(state, 0, 2, 2, 2, base)   # s = 0.25 (worst)
    if better:
        base = _seed_pair_history(state, 0, 3, 4, 0, base)   # s = 0.5
    else:
        base = _seed_pair_history(state, 0, 3, 1, 3, base)   # clamped low
    return state


def test_random_rewire_replaces_when_better():
    state = _single_candidate_state(better=True)
    changed = rewire_random(state, 0, np.random.default_rng(0))
    assert changed
    assert sorted(state.network.authorities(0)) == [1, 3]
    state.network.check_consistent()


def test_random_rewire_keeps_when_not_better():
    state = _single_candidate_state(better=False)
    changed = rewire_random(state, 0, np.random.default_rng(0))
    assert not changed
    assert sorted(state.network.authorities(0)) == [1, 2]


def test_random_rewire_draw_skips_self_and_authorities():
    state = make_state(8, 3, seed=3)
    rng = np.random.default_rng(11)
    for _ in range(50):
        before = set(state.network.authority_set(0))
        rewire_random(state, 0, rng)
        after = set(state.network.authority_set(0))
        assert 0 not in after
        assert len(after) == 3
        # At most one link changes per call.
        assert len(before - after) <= 1
    state.network.check_consistent()


def test_random_rewire_never_decreases_min_similarity():
    rng = np.random.default_rng(31)
    state = make_state(14, 4, seed=8)
    seen = set()
    for round_ in range(40):
        for _ in range(15):
            user = int(rng.integers(14))
            news = int(rng.integers(300))
            if (user, news) in seen:
                continue
            seen.add((user, news))
            state.ledger.record_evaluation(user, news,
                                           1 if rng.random() < 0.6 else -1)
        for i in range(14):
            before = _min_authority_similarity(state, i)
            rewire_random(state, i, rng)
            assert _min_authority_similarity(state, i) >= before - 1e-12
    state.network.check_consistent()


def test_bara_empty_pool_is_noop():
    # The best authority's authorities are all already linked (or self).
    network = fixed_network([
        [1, 2], [2, 0], [0, 1], [0, 1],
    ])
    ledger = EvaluationLedger(4)
    state = EngineState(ledger, network, SimilarityParams())
    _seed_pair_history(state, 0, 1, 3, 0, 0)   # authority 1 is clearly best
    assert not rewire_bara(state, 0, np.random.default_rng(0))
    assert sorted(state.network.authorities(0)) == [1, 2]


def test_bara_pulls_from_best_authoritys_authorities():
    # 0 follows {1, 2}; best authority 1 follows {3, 0}; candidate pool {3}.
    network = fixed_network([
        [1, 2], [3, 0], [0, 3], [0, 1],
    ])
    ledger = EvaluationLedger(4)
    state = EngineState(ledger, network, SimilarityParams())
    base = _seed_pair_history(state, 0, 1, 4, 0, 0)      # best: 0.5
    base = _seed_pair_history(state, 0, 2, 2, 2, base)   # worst: 0.25
    base = _seed_pair_history(state, 0, 3, 5, 1, base)   # candidate: ~0.486
    assert rewire_bara(state, 0, np.random.default_rng(0))
    assert sorted(state.network.authorities(0)) == [1, 3]
    state.network.check_consistent()


def test_bara_keeps_when_candidate_not_better():
    network = fixed_network([
        [1, 2], [3, 0], [0, 3], [0, 1],
    ])
    ledger = EvaluationLedger(4)
    state = EngineState(ledger, network, SimilarityParams())
    base = _seed_pair_history(state, 0, 1, 4, 0, 0)
    base = _seed_pair_history(state, 0, 2, 2, 2, base)
    base = _seed_pair_history(state, 0, 3, 1, 5, base)   # weak candidate
    assert not rewire_bara(state, 0, np.random.default_rng(0))
    assert sorted(state.network.authorities(0)) == [1, 2]


def test_bara_never_decreases_min_similarity():
    rng = np.random.default_rng(77)
    state = make_state(14, 4, seed=9)
    seen = set()
    for round_ in range(40):
        for _ in range(15):
            user = int(rng.integers(14))
            news = int(rng.integers(300))
            if (user, news) in seen:
                continue
            seen.add((user, news))
            state.ledger.record_evaluation(user, news,
                                           1 if rng.random() < 0.6 else -1)
        for i in range(14):
            before = _min_authority_similarity(state, i)
            rewire_bara(state, i, rng)
            assert _min_authority_similarity(state, i) >= before - 1e-12
    state.network.check_consistent()


def test_batch_optimal_equals_sequential_sweep():
    rng = np.random.default_rng(41)
    for trial in range(12):
        seq_state = make_state(30, 6, seed=200 + trial)
        batch_state = make_state(30, 6, seed=200 + trial)
        assert np.array_equal(seq_state.network.matrix, batch_state.network.matrix)
        votes = int(rng.integers(0, 250))   # includes the all-epsilon case
        seen = set()
        for _ in range(votes):
            user = int(rng.integers(30))
            news = int(rng.integers(40))
            if (user, news) in seen:
                continue
            seen.add((user, news))
            vote = 1 if rng.random() < 0.6 else -1
            seq_state.ledger.record_evaluation(user, news, vote)
            batch_state.ledger.record_evaluation(user, news, vote)
        for i in range(30):
            rewire_optimal(seq_state, i)
        rewire_optimal_all(batch_state, block=7)   # force multiple blocks
        assert np.array_equal(seq_state.network.matrix,
                              batch_state.network.matrix), f"trial {trial}"
        batch_state.network.check_consistent()


def test_batch_optimal_on_fresh_state_keeps_assignment():
    state = make_state(25, 4, seed=77)
    before = state.network.matrix.copy()
    rewire_optimal_all(state)
    assert np.array_equal(np.sort(before), np.sort(state.network.matrix))


def test_network_consistency_under_mixed_operations():
    rng = np.random.default_rng(13)
    state = make_state(20, 5, seed=4)
    seen = set()
    for _ in range(10_000):
        action = rng.random()
        if action < 0.5:
            user = int(rng.integers(20))
            news = int(rng.integers(500))
            if (user, news) not in seen:
                seen.add((user, news))
                state.ledger.record_evaluation(user, news,
                                               1 if rng.random() < 0.6 else -1)
        elif action < 0.7:
            rewire_optimal(state, int(rng.integers(20)))
        elif action < 0.85:
            rewire_random(state, int(rng.integers(20)), rng)
        else:
            rewire_bara(state, int(rng.integers(20)), rng)
    state.network.check_consistent()
    expected_m, expected_M = state.ledger.recount_pairs_brute_force()
    for i in range(20):
        for j in range(20):
            if i != j:
                assert (expected_m[i, j], expected_M[i, j]) == \
                    state.ledger.pair_counts(i, j)
