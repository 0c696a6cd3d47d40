"""Performance measures: approval fraction, excess differences, readership."""

from __future__ import annotations

import math

import numpy as np


def popcount(a: np.ndarray) -> np.ndarray:
    """Per-element population count for unsigned integer arrays."""
    return np.bitwise_count(a)


def approval_fraction(approvals: int, assessments: int) -> float | None:
    """Share of assessments that approved; None when nothing was assessed."""
    if approvals < 0 or assessments < 0:
        raise ValueError("counts must be non-negative")
    if approvals > assessments:
        raise ValueError("approvals cannot exceed assessments")
    if assessments == 0:
        return None
    return approvals / assessments


def windowed_approval_fraction(approvals, assessments,
                               width: int = 10) -> list[float | None]:
    """Trailing-window approval series: ratio of window sums, per step.

    This is the sum-of-approvals over sum-of-assessments within the last
    `width` steps, not a mean of per-step ratios; steps whose window saw no
    assessments yield None.
    """
    if width < 1:
        raise ValueError("window width must be >= 1")
    approvals = list(approvals)
    assessments = list(assessments)
    if len(approvals) != len(assessments):
        raise ValueError("series lengths differ")
    out: list[float | None] = []
    a_sum = 0
    n_sum = 0
    for t in range(len(approvals)):
        a_sum += approvals[t]
        n_sum += assessments[t]
        if t >= width:
            a_sum -= approvals[t - width]
            n_sum -= assessments[t - width]
        out.append(a_sum / n_sum if n_sum > 0 else None)
    return out


def excess_differences_arrays(auth_matrix: np.ndarray,
                              taste_masks: np.ndarray) -> float:
    """Mean taste-vector Hamming distance over all authority links, minus 2.

    All-distinct equal-weight vectors put the minimum pair distance at 2,
    so 0 marks a perfect assignment.  Every link counts once; since each
    user holds exactly S links this equals the per-user average as well.
    """
    linked = taste_masks[auth_matrix]
    ham = popcount(taste_masks[:, None] ^ linked)
    return float(ham.mean()) - 2.0


def excess_differences(network, tastes) -> float:
    """:func:`excess_differences_arrays` over a network and taste list."""
    masks = np.array([t.mask for t in tastes], dtype=np.uint32)
    return excess_differences_arrays(network.matrix, masks)


def expected_random_differences(dim: int, ones: int) -> float:
    """Average Hamming distance between two distinct weight-`ones` vectors.

    Closed form: a vector at "d displaced ones" from a reference sits at
    Hamming distance 2d, and there are C(ones, d) * C(dim - ones, d) of
    them among the C(dim, ones) - 1 others.
    """
    if not 0 < ones < dim:
        raise ValueError("need 0 < ones < dim")
    numerator = 2 * sum(d * math.comb(ones, d) * math.comb(dim - ones, d)
                        for d in range(1, ones + 1))
    return numerator / (math.comb(dim, ones) - 1)


def brute_force_random_differences(dim: int, ones: int) -> float:
    """All-pairs average Hamming distance by direct enumeration.

    Independent oracle for :func:`expected_random_differences`; cost grows
    as C(dim, ones)^2, keep C small.
    """
    import itertools

    masks = [sum(1 << p for p in combo)
             for combo in itertools.combinations(range(dim), ones)]
    total = 0
    pairs = 0
    for a in range(len(masks)):
        for b in range(a + 1, len(masks)):
            total += (masks[a] ^ masks[b]).bit_count()
            pairs += 1
    return total / pairs


def track_readership(events, tagged_ids, n_steps: int,
                     known_ids) -> dict[int, list[int]]:
    """Readers per step for each tagged news, from the evaluation event log.

    `events` holds ("vote", step, user, news, vote) tuples (other kinds are
    ignored); steps are 1-based.  Tagged ids must belong to `known_ids`.
    """
    known = set(known_ids)
    series: dict[int, list[int]] = {}
    for news in tagged_ids:
        if news not in known:
            raise ValueError(f"unknown news id {news}")
        series[news] = [0] * n_steps
    for ev in events:
        if ev[0] != "vote":
            continue
        _, step, _, news, _ = ev
        if news in series and 1 <= step <= n_steps:
            series[news][step - 1] += 1
    return series
