from collections import Counter
from itertools import combinations, product
from math import comb, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secretcache.gf2m import FieldMatrix, FieldParams
from secretcache.secret_share import (
    DimensionError,
    EncryptionRandomness,
    FileData,
    SharingParams,
    ShareVector,
    draw_randomness,
    encode_file,
    leakage_rank_check,
    random_files,
    reconstruct_file,
)


def random_instance(params, seed, index=1):
    rng = np.random.default_rng(seed)
    s, q = params.symbols_per_subfile, params.field.order
    f = FileData(index, rng.integers(0, q, (params.n_subfiles, s)))
    r = EncryptionRandomness(index, rng.integers(0, q, (params.n_enc_keys, s)))
    return f, r


def test_params_counts_and_pascal():
    p = SharingParams(4, 2)
    assert (p.n_shares, p.n_subfiles, p.n_enc_keys) == (6, 3, 3)
    assert p.field.m == 4
    for lam in range(2, 12):
        for t in range(1, lam):
            p = SharingParams(lam, t)
            assert p.n_subfiles + p.n_enc_keys == p.n_shares
            assert p.field.order >= 2 * p.n_shares > p.field.order // 2


def test_params_validation():
    with pytest.raises(ValueError):
        SharingParams(3, 0)
    with pytest.raises(ValueError):
        SharingParams(3, 3)
    with pytest.raises(ValueError):
        SharingParams(4, 2, field=FieldParams(3))


def test_two_cache_shares_structure():
    p = SharingParams(2, 1)
    assert (p.n_shares, p.n_subfiles, p.n_enc_keys) == (2, 1, 1)
    g = p.generator
    # both shares mix in the key, and together they pin down (W, V)
    assert g[0, 1] != 0 and g[1, 1] != 0
    f, r = random_instance(p, 0)
    sv = encode_file(f, r, p)
    assert len(sv) == 2
    assert reconstruct_file(sv, p) == f


def test_zero_in_zero_out():
    p = SharingParams(4, 2, symbols_per_subfile=5)
    f = FileData(1, np.zeros((3, 5)))
    r = EncryptionRandomness(1, np.zeros((3, 5)))
    sv = encode_file(f, r, p)
    assert not sv.shares.any()
    assert reconstruct_file(ShareVector(1, np.zeros((6, 5))), p) == f


def test_example_two_share_size():
    p = SharingParams(4, 2, symbols_per_subfile=4)
    f, r = random_instance(p, 1)
    sv = encode_file(f, r, p)
    assert sv.shares.shape == (6, 4)
    # each share is one third of the file
    assert 3 * sv.shares[0].size == f.subfiles.size
    assert reconstruct_file(sv, p) == f


def test_encode_is_generator_times_stack():
    p = SharingParams(4, 2, symbols_per_subfile=2)
    f, r = random_instance(p, 5)
    sv = encode_file(f, r, p)
    fld = p.field
    stacked = np.concatenate([f.subfiles, r.enc_keys])
    for i in range(6):
        for pos in range(2):
            acc = 0
            for j in range(6):
                acc ^= fld.mul(p.generator[i, j], int(stacked[j, pos]))
            assert sv.shares[i, pos] == acc


def test_dimension_errors():
    p = SharingParams(4, 2)
    f, r = random_instance(p, 0)
    with pytest.raises(DimensionError):
        encode_file(FileData(1, np.zeros((2, 1))), r, p)
    with pytest.raises(DimensionError):
        encode_file(f, EncryptionRandomness(2, r.enc_keys), p)
    with pytest.raises(DimensionError):
        reconstruct_file(ShareVector(1, np.zeros((5, 1))), p)


@pytest.mark.parametrize("lam,t,s", [(2, 1, 1), (3, 1, 3), (4, 2, 2), (5, 2, 1), (5, 3, 2), (6, 3, 1)])
def test_roundtrip_randomised(lam, t, s):
    p = SharingParams(lam, t, symbols_per_subfile=s)
    for seed in range(100):
        f, r = random_instance(p, seed)
        assert reconstruct_file(encode_file(f, r, p), p) == f


@settings(max_examples=60)
@given(st.integers(2, 7).flatmap(lambda lam: st.tuples(st.just(lam), st.integers(1, lam - 1))),
       st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_roundtrip_property(lam_t, s, seed):
    lam, t = lam_t
    p = SharingParams(lam, t, symbols_per_subfile=s)
    f, r = random_instance(p, seed)
    assert reconstruct_file(encode_file(f, r, p), p) == f


def test_leakage_rank_check_small_cases():
    assert leakage_rank_check(SharingParams(2, 1))
    assert leakage_rank_check(SharingParams(4, 2))


def test_leakage_rank_check_counts_against_scalar_rank():
    # the batched check must agree with a plain loop over all subsets
    from secretcache.gf2m import rank

    p = SharingParams(4, 2)
    g = p.generator
    cols = range(p.n_subfiles, p.n_shares)
    checked = 0
    for k in range(1, p.n_enc_keys + 1):
        for rows in combinations(range(p.n_shares), k):
            assert rank(g.submatrix(rows, cols)) == k
            checked += 1
    assert checked == sum(comb(6, k) for k in range(1, 4))


def test_leakage_rank_check_detects_zero_key_column():
    p = SharingParams(4, 2)
    bad = np.array(p.generator.entries)
    bad[:, p.n_subfiles] = 0
    assert not leakage_rank_check(p, FieldMatrix(p.field, bad))


@pytest.mark.parametrize("lam", [2, 3, 4, 5])
def test_leakage_rank_check_exhaustive_up_to_five(lam):
    for t in range(1, lam):
        assert leakage_rank_check(SharingParams(lam, t))


def test_single_shares_independent_of_file_exactly():
    """Enumerate every (W, V) in GF(4): each share is uniform for every W."""
    p = SharingParams(2, 1)
    for r in range(p.n_shares):
        for w in range(4):
            seen = Counter()
            for v in range(4):
                sv = encode_file(FileData(1, [[w]]), EncryptionRandomness(1, [[v]]), p)
                seen[int(sv.shares[r, 0])] += 1
            assert seen == Counter({x: 1 for x in range(4)})


def test_threshold_subsets_uniform_example_two():
    """Any 3 of the 6 shares are uniform over GF(16)^3 for a fixed file."""
    f = FileData(1, [[7], [0], [13]])
    keys = np.array(list(product(range(16), repeat=3)), dtype=np.uint32).T  # (3, 4096)
    sv = encode_file(FileData(1, np.repeat(f.subfiles, keys.shape[1], axis=1)),
                     EncryptionRandomness(1, keys), SharingParams(4, 2, symbols_per_subfile=keys.shape[1]))
    for rows in combinations(range(6), 3):
        tuples = {tuple(sv.shares[list(rows), i]) for i in range(keys.shape[1])}
        assert len(tuples) == 16**3


def test_draw_randomness_deterministic_and_shaped():
    p = SharingParams(4, 2, symbols_per_subfile=7)
    a = draw_randomness(5, p, seed=42)
    b = draw_randomness(5, p, seed=42)
    assert len(a) == 5
    assert all(x.enc_keys.shape == (3, 7) for x in a)
    assert all(np.array_equal(x.enc_keys, y.enc_keys) for x, y in zip(a, b))
    c = draw_randomness(5, p, seed=43)
    assert not all(np.array_equal(x.enc_keys, y.enc_keys) for x, y in zip(a, c))


def test_draw_randomness_uniform_histogram():
    p = SharingParams(2, 1, symbols_per_subfile=10_000, field=FieldParams(2))
    draws = draw_randomness(1, p, seed=9)[0].enc_keys.reshape(-1)
    counts = np.bincount(draws, minlength=4)
    n, q = draws.size, 0.25
    sigma = sqrt(n * q * (1 - q))
    assert np.all(np.abs(counts - n * q) < 5 * sigma)
    chi2 = ((counts - n * q) ** 2 / (n * q)).sum()
    assert chi2 < 16.27  # 99.9% quantile, 3 degrees of freedom


def test_bytes_roundtrip_with_padding():
    data = bytes(range(37))
    f = FileData.from_bytes(1, data, n_subfiles=3, s=25, m=4)
    assert f.subfiles.shape == (3, 25)
    assert f.original_bit_length == 37 * 8
    assert f.to_bytes(4) == data
    assert FileData.from_bytes(1, data, 3, 25, 4).subfiles[0, 0] == 0  # high nibble of byte 0
    assert FileData.from_bytes(1, b"\xab", 1, 2, 4).subfiles.tolist() == [[0xA, 0xB]]
    with pytest.raises(DimensionError):
        FileData.from_bytes(1, data, 3, 2, 4)


def test_random_files_independent_streams():
    a = random_files(3, 2, 4, 5, seed=1)
    b = random_files(5, 2, 4, 5, seed=1)
    for x, y in zip(a, b):
        assert x == y
    assert all(int(f.subfiles.max()) < 32 for f in b)
