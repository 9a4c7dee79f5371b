from itertools import combinations
from math import comb

import numpy as np
import pytest

from secretcache.secret_share import ShareVector
from secretcache.topology import (
    Association,
    KeyId,
    SubsetIndex,
    SystemParams,
    TopologyError,
    all_serving_sets,
    place_keys,
    place_keys_t0,
    place_shares,
    rounds,
    serving_sets,
)

EX2 = Association.from_groups([[1, 2, 3], [4, 5], [6, 7], [8]])


def test_system_params_memory():
    p = SystemParams.from_memory(3, 3, 2, 3)
    assert p.t == 1 and p.helper_cache_size == 3
    p = SystemParams.from_memory(8, 8, 4, 8)
    assert p.t == 2 and p.helper_cache_size == 8
    assert SystemParams.from_memory(30, 30, 6, 0).t == 0
    with pytest.raises(TopologyError):
        SystemParams.from_memory(8, 8, 4, 5)  # t = 32/13


def test_system_params_validation():
    with pytest.raises(TopologyError):
        SystemParams(2, 3, 2, 1)  # N < K
    with pytest.raises(TopologyError):
        SystemParams(4, 3, 4, 1)  # K < caches
    with pytest.raises(TopologyError):
        SystemParams(4, 4, 2, 2)  # t > caches - 1


def test_system_params_layout():
    p = SystemParams(8, 8, 4, 2, file_bits=100)
    assert p.field.m == 4 and p.n_subfiles == 3
    assert p.symbols_per_subfile == 9  # ceil(100 / 12)
    assert p.padded_file_bits == 108
    assert p.sharing.symbols_per_subfile == 9
    with pytest.raises(TopologyError):
        SystemParams(4, 4, 2, 0).sharing


def test_association_canonicalises():
    a = Association.from_groups([[3], [1, 2]])
    assert a.groups == ((1, 2), (3,))
    assert a.profile == (2, 1)
    assert a.original_labels == (2, 1)
    # ties keep input order
    b = Association.from_groups([[1], [2, 3], [4, 5]])
    assert b.groups == ((2, 3), (4, 5), (1,))
    assert b.original_labels == (2, 3, 1)


def test_association_parse_and_validation():
    a = Association.parse("1,2,3\n4,5\n6,7\n8\n")
    assert a == EX2
    assert Association.parse("1,2,3;4,5;6,7;8", sep=";") == EX2
    assert Association.parse("1,2;;3", sep=";").profile == (2, 1, 0)
    with pytest.raises(TopologyError):
        Association.from_groups([[1, 2], [2]])
    with pytest.raises(TopologyError):
        Association.from_groups([[1, 3]])
    assert EX2.cache_of(5) == 2
    assert EX2.user_at(1, 3) == 3 and EX2.user_at(4, 2) is None


def test_subset_rank_examples():
    idx = SubsetIndex(4, 2)
    assert [idx.rank(s) for s in [{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}]] == [1, 2, 3, 4, 5, 6]
    assert SubsetIndex(4, 3).rank({2, 3, 4}) == 4
    assert idx.unrank(5) == (2, 4)


@pytest.mark.parametrize("universe", range(0, 9))
def test_subset_rank_is_lexicographic_bijection(universe):
    for size in range(universe + 1):
        idx = SubsetIndex(universe, size)
        expected = list(combinations(range(1, universe + 1), size))
        assert list(idx) == expected
        assert len(idx) == len(expected)
        for r, subset in enumerate(expected, start=1):
            assert idx.rank(subset) == r
            assert idx.unrank(r) == subset


def test_subset_rank_errors():
    idx = SubsetIndex(4, 2)
    with pytest.raises(TopologyError):
        idx.rank({1})
    with pytest.raises(TopologyError):
        idx.rank({1, 5})
    with pytest.raises(TopologyError):
        idx.unrank(0)
    with pytest.raises(TopologyError):
        idx.unrank(7)


def library(params):
    return [
        ShareVector(n, np.arange(len(SubsetIndex(params.n_caches, params.t)))[:, None] + 100 * n)
        for n in range(1, params.n_files + 1)
    ]


def test_place_shares_example_two():
    p = SystemParams(8, 8, 4, 2)
    caches = place_shares(library(p), p)
    expect = {
        1: {(1, 2), (1, 3), (1, 4)},
        2: {(1, 2), (2, 3), (2, 4)},
        3: {(1, 3), (2, 3), (3, 4)},
        4: {(1, 4), (2, 4), (3, 4)},
    }
    for c in caches:
        assert {T for (_, T) in c.shares} == expect[c.cache_index]
        assert len(c.shares) == 8 * 3
        # share with label T is the one of rank phi(T)
        for (n, T), row in c.shares.items():
            assert row[0] == SubsetIndex(4, 2).rank(T) - 1 + 100 * n


def test_place_shares_example_one():
    p = SystemParams(3, 3, 2, 1)
    caches = place_shares(library(p), p)
    assert {T for (_, T) in caches[0].shares} == {(1,)}
    assert {T for (_, T) in caches[1].shares} == {(2,)}


@pytest.mark.parametrize("lam,t", [(3, 1), (4, 2), (5, 2), (5, 4)])
def test_each_share_in_exactly_t_caches(lam, t):
    p = SystemParams(lam, lam, lam, t)
    caches = place_shares(library(p), p)
    for T in SubsetIndex(lam, t):
        holders = [c.cache_index for c in caches if (1, T) in c.shares]
        assert holders == list(T)
    per_cache_bits = {c.total_symbols() * p.field.m for c in caches}
    assert per_cache_bits == {p.helper_cache_size * p.padded_file_bits}


def test_place_shares_rejects_t0():
    with pytest.raises(TopologyError):
        place_shares([], SystemParams(3, 3, 2, 0))


def test_rounds_examples():
    assert rounds(EX2) == [(1, 4, 6, 8), (2, 5, 7), (3,)]
    ded = Association.from_groups([[1], [2], [3], [4]])
    assert rounds(ded) == [(1, 2, 3, 4)]


def test_rounds_partition_users():
    a = Association.from_groups([[5, 1], [2, 6, 3], [4]])
    rs = rounds(a)
    assert sorted(u for r in rs for u in r) == list(range(1, 7))
    assert len(rs) == a.profile[0]
    assert len(rs[0]) == a.n_caches


def test_serving_sets_example_two_round_one():
    got = [(e.caches, e.users, e.multiplicity) for e in serving_sets(EX2, 2, 1)]
    assert got == [
        ((1, 2, 3), (1, 4, 6), 1),
        ((1, 2, 4), (1, 4, 8), 1),
        ((1, 3, 4), (1, 6, 8), 1),
        ((2, 3, 4), (4, 6, 8), 1),
    ]


def test_serving_sets_example_two_round_three():
    got = [(e.caches, e.users, e.multiplicity) for e in serving_sets(EX2, 2, 3)]
    assert got == [((1, 2, 3), (3,), 1), ((1, 2, 4), (3,), 2), ((1, 3, 4), (3,), 3)]


def test_serving_set_counts_per_round():
    for groups in ([[1, 2, 3], [4, 5], [6, 7], [8]], [[1, 2, 3, 4], [5], [6]], [[1], [2], [3], [4], [5]]):
        a = Association.from_groups(groups)
        lam = a.n_caches
        for t in range(1, lam):
            for j, r in enumerate(rounds(a), start=1):
                entries = serving_sets(a, t, j)
                assert len(entries) == comb(lam, t + 1) - comb(lam - len(r), t + 1)
                assert all(set(e.users) <= set(r) for e in entries)
            keys = [e.key_id for e in all_serving_sets(a, t)]
            assert len(set(keys)) == len(keys)
            assert len(keys) == sum(L * comb(lam - r, t) for r, L in enumerate(a.profile, start=1))


def test_serving_sets_bad_round():
    with pytest.raises(TopologyError):
        serving_sets(EX2, 2, 4)


def test_place_keys_example_two():
    p = SystemParams(8, 8, 4, 2)
    ks = place_keys(EX2, p, seed=3)
    assert len(ks) == 11
    held = {u: {k.users for k in ks.user_keys[u]} for u in range(1, 9)}
    assert held[1] == {(1, 4, 6), (1, 4, 8), (1, 6, 8)}
    assert held[2] == {(2, 5, 7), (2, 5), (2, 7)}
    assert ks.user_keys[3] == [KeyId(3, (3,), 1), KeyId(3, (3,), 2), KeyId(3, (3,), 3)]
    assert held[4] == {(1, 4, 6), (1, 4, 8), (4, 6, 8)}
    assert held[5] == {(2, 5, 7), (2, 5), (5, 7)}
    assert held[6] == {(1, 4, 6), (1, 6, 8), (4, 6, 8)}
    assert held[7] == {(2, 5, 7), (2, 7), (5, 7)}
    assert held[8] == {(1, 4, 8), (1, 6, 8), (4, 6, 8)}
    for kid, users in ((k, k.users) for k in ks.entries):
        for u in range(1, 9):
            assert (kid in ks.user_keys[u]) == (u in users)


def test_place_keys_example_one():
    p = SystemParams(3, 3, 2, 1)
    a = Association.from_groups([[1, 2], [3]])
    ks = place_keys(a, p, seed=0)
    assert set(ks.entries) == {KeyId(1, (1, 3), 1), KeyId(2, (2,), 1)}
    assert ks.user_keys[1] == ks.user_keys[3] == [KeyId(1, (1, 3), 1)]


@pytest.mark.parametrize("lam,per", [(2, 3), (3, 2), (4, 2), (6, 1)])
def test_place_keys_uniform_total(lam, per):
    a = Association.from_groups([[c * per + i + 1 for i in range(per)] for c in range(lam)])
    for t in range(1, lam):
        p = SystemParams(lam * per, lam * per, lam, t)
        ks = place_keys(a, p, seed=0)
        assert len(ks) == per * comb(lam, t + 1)
        # key payload per user is exactly one file
        for u in range(1, lam * per + 1):
            assert len(ks.user_keys[u]) * p.subfile_bits == p.padded_file_bits


def test_place_keys_deterministic_and_distinct():
    p = SystemParams(8, 8, 4, 2, file_bits=600)
    a = place_keys(EX2, p, seed=5)
    b = place_keys(EX2, p, seed=5)
    assert all(np.array_equal(a.entries[k], b.entries[k]) for k in a.entries)
    rows = [tuple(v) for v in a.entries.values()]
    assert len(set(rows)) == len(rows)


def test_place_keys_t0():
    p = SystemParams(4, 3, 2, 0, file_bits=64)
    a = Association.from_groups([[1, 2], [3]])
    ks = place_keys_t0(a, p, seed=1)
    assert set(ks.entries) == {KeyId(1, (k,), 1) for k in (1, 2, 3)}
    assert all(v.size * 8 == 64 for v in ks.entries.values())
    with pytest.raises(TopologyError):
        place_keys(a, p, seed=1)


def test_empty_cache_stores_shares_but_serves_nobody():
    a = Association.from_groups([[1, 2], [3], []])
    p = SystemParams(3, 3, 3, 1)
    caches = place_shares(library(p), p)
    assert len(caches[2].shares) == 3
    users = {u for e in all_serving_sets(a, 1) for u in e.users}
    assert users == {1, 2, 3}


def test_hockey_stick():
    for lam in range(1, 21):
        for t in range(lam):
            assert sum(comb(lam - r, t) for r in range(1, lam - t + 1)) == comb(lam, t + 1)
