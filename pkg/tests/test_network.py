import numpy as np
import pytest

from epinews.engine import AuthorityNetwork

from conftest import fixed_network


def test_random_init_shapes_and_consistency(rng):
    net = AuthorityNetwork.random(40, 7, rng)
    assert net.matrix.shape == (40, 7)
    net.check_consistent()
    for i in range(40):
        row = net.authorities(i)
        assert len(set(row)) == 7
        assert i not in row
        assert all(0 <= j < 40 for j in row)


def test_random_init_covers_all_candidates():
    # With many draws every user id shows up as someone's authority.
    rng = np.random.default_rng(3)
    net = AuthorityNetwork.random(30, 10, rng)
    seen = set(net.matrix.ravel().tolist())
    assert seen == set(range(30))


def test_random_init_rejects_bad_sizes(rng):
    with pytest.raises(ValueError):
        AuthorityNetwork.random(5, 5, rng)
    with pytest.raises(ValueError):
        AuthorityNetwork.random(5, 0, rng)


def test_full_network_when_s_is_u_minus_1(rng):
    net = AuthorityNetwork.random(5, 4, rng)
    for i in range(5):
        assert sorted(net.authorities(i)) == [j for j in range(5) if j != i]


def test_followers_are_reverse_adjacency():
    net = fixed_network([[1, 2], [0, 2], [0, 1], [0, 1]])
    assert net.followers(0) == [1, 2, 3]
    assert net.followers(1) == [0, 2, 3]
    assert net.followers(2) == [0, 1]
    assert net.followers(3) == []
    net.check_consistent()


def test_replace_updates_both_directions():
    net = fixed_network([[1, 2], [0, 2], [0, 1], [0, 1]])
    net.replace(0, 2, 3)
    assert sorted(net.authorities(0)) == [1, 3]
    assert 0 not in net.followers(2)
    assert 0 in net.followers(3)
    net.check_consistent()


def test_replace_rejects_bad_arguments():
    net = fixed_network([[1, 2], [0, 2], [0, 1]])
    with pytest.raises(ValueError):
        net.replace(0, 9, 1)   # not an authority
    with pytest.raises(ValueError):
        net.replace(0, 1, 2)   # already an authority
    with pytest.raises(ValueError):
        net.replace(0, 1, 0)   # self


def test_set_authorities_resizes_followers():
    net = fixed_network([[1, 2], [0, 2], [0, 1], [0, 1]])
    net.set_authorities(0, [2, 3])
    assert sorted(net.authorities(0)) == [2, 3]
    assert 0 not in net.followers(1)
    assert 0 in net.followers(3)
    net.check_consistent()
    with pytest.raises(ValueError):
        net.set_authorities(0, [0, 1])
    with pytest.raises(ValueError):
        net.set_authorities(0, [1, 1])


def test_constructor_rejects_self_links_and_duplicates():
    with pytest.raises(ValueError):
        fixed_network([[0, 1], [0, 2], [0, 1]])
    with pytest.raises(ValueError):
        fixed_network([[1, 1], [0, 2], [0, 1]])
