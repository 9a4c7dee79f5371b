"""Ramp secret sharing of files with a Cauchy generator matrix.

A file is cut into ``C(L-1, t)`` sub-files and stacked on top of
``C(L-1, t-1)`` uniformly random encryption vectors; multiplying the stack by
the ``C(L, t) x C(L, t)`` Cauchy matrix yields the shares.  All shares together
determine the file, while any ``C(L-1, t-1)`` of them are uniform and
independent of it.

Each sub-file is a row of ``s`` field symbols and the symbol positions are
independent linear systems, so arrays of shape ``(rows, s)`` are pushed
through the generator in one go.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np

from . import streams
from .gf2m import SYMBOL_DTYPE, FieldMatrix, FieldParams, cauchy_matrix, rank_batch, solve


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class SharingParams:
    lambda_caches: int
    t: int
    symbols_per_subfile: int = 1
    field: FieldParams = None  # type: ignore[assignment]

    def __post_init__(self):
        if not 1 <= self.t <= self.lambda_caches - 1:
            raise ValueError(f"t must be in 1..{self.lambda_caches - 1}, got {self.t}")
        if self.symbols_per_subfile < 1:
            raise ValueError("symbols_per_subfile must be positive")
        if self.field is None:
            object.__setattr__(self, "field", FieldParams.smallest_for(2 * self.n_shares))
        assert self.n_subfiles + self.n_enc_keys == self.n_shares
        if self.field.order < 2 * self.n_shares:
            raise ValueError(
                f"GF(2^{self.field.m}) is too small for {self.n_shares} shares"
            )

    @property
    def n_shares(self) -> int:
        return comb(self.lambda_caches, self.t)

    @property
    def n_subfiles(self) -> int:
        return comb(self.lambda_caches - 1, self.t)

    @property
    def n_enc_keys(self) -> int:
        return comb(self.lambda_caches - 1, self.t - 1)

    @property
    def subfile_bits(self) -> int:
        return self.symbols_per_subfile * self.field.m

    @property
    def file_bits(self) -> int:
        """Padded file size: every sub-file is exactly ``s`` symbols."""
        return self.n_subfiles * self.subfile_bits

    @cached_property
    def generator(self) -> FieldMatrix:
        return cauchy_matrix(self.n_shares, self.field)


@dataclass(frozen=True, eq=False)
class FileData:
    file_index: int
    subfiles: np.ndarray
    original_bit_length: int = None  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "subfiles", np.asarray(self.subfiles, dtype=SYMBOL_DTYPE))
        if self.subfiles.ndim != 2:
            raise DimensionError("sub-files must be a (n_subfiles, s) array")
        if self.original_bit_length is None:
            # bit width is unknown here; callers that pad always pass it
            object.__setattr__(self, "original_bit_length", -1)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FileData)
            and self.file_index == other.file_index
            and np.array_equal(self.subfiles, other.subfiles)
        )

    @classmethod
    def from_bytes(cls, file_index: int, data: bytes, n_subfiles: int, s: int, m: int) -> "FileData":
        """Split ``data`` into sub-files, zero-padding the tail."""
        bits = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))
        total = n_subfiles * s * m
        if bits.size > total:
            raise DimensionError(f"{bits.size} bits do not fit in {total}")
        padded = np.zeros(total, dtype=np.uint32)
        padded[: bits.size] = bits
        weights = (1 << np.arange(m - 1, -1, -1)).astype(np.uint32)
        syms = (padded.reshape(-1, m) * weights).sum(axis=1).astype(SYMBOL_DTYPE)
        return cls(file_index, syms.reshape(n_subfiles, s), bits.size)

    def to_bytes(self, m: int) -> bytes:
        syms = self.subfiles.reshape(-1)
        bits = ((syms[:, None] >> np.arange(m - 1, -1, -1, dtype=np.uint32)) & 1).reshape(-1)
        n = self.original_bit_length if self.original_bit_length >= 0 else bits.size
        return np.packbits(bits[:n].astype(np.uint8)).tobytes()


@dataclass(frozen=True, eq=False)
class EncryptionRandomness:
    file_index: int
    enc_keys: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "enc_keys", np.asarray(self.enc_keys, dtype=SYMBOL_DTYPE))


@dataclass(frozen=True, eq=False)
class ShareVector:
    """Shares of one file, row ``r`` being the share of rank ``r + 1``."""

    file_index: int
    shares: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shares", np.asarray(self.shares, dtype=SYMBOL_DTYPE))

    def __len__(self) -> int:
        return self.shares.shape[0]

    def __getitem__(self, rank: int) -> np.ndarray:
        """Share by 1-based rank."""
        return self.shares[rank - 1]


def _check_rows(arr: np.ndarray, rows: int, s: int, what: str) -> None:
    if arr.shape != (rows, s):
        raise DimensionError(f"{what} has shape {arr.shape}, expected {(rows, s)}")


def encode_file(file: FileData, randomness: EncryptionRandomness, params: SharingParams) -> ShareVector:
    s = params.symbols_per_subfile
    _check_rows(file.subfiles, params.n_subfiles, s, "file")
    _check_rows(randomness.enc_keys, params.n_enc_keys, s, "encryption randomness")
    if file.file_index != randomness.file_index:
        raise DimensionError("randomness belongs to a different file")
    stacked = np.concatenate([file.subfiles, randomness.enc_keys])
    return ShareVector(file.file_index, params.generator.apply(stacked))


def reconstruct_file(shares: ShareVector, params: SharingParams, original_bit_length: int = -1) -> FileData:
    _check_rows(shares.shares, params.n_shares, params.symbols_per_subfile, "share vector")
    stacked = solve(params.generator, shares.shares)
    return FileData(shares.file_index, stacked[: params.n_subfiles], original_bit_length)


def leakage_rank_check(params: SharingParams, generator: FieldMatrix | None = None, chunk: int = 20000) -> bool:
    """Exhaustively confirm that small share sets are pure noise.

    For every set A of at most ``n_enc_keys`` shares, the rows A of the
    generator restricted to the encryption-key columns must have full row
    rank; the shares in A are then uniform whatever the file is.
    """
    g = params.generator if generator is None else generator
    key_part = g.entries[:, params.n_subfiles:]
    for size in range(1, params.n_enc_keys + 1):
        subsets = np.array(list(combinations(range(params.n_shares), size)), dtype=np.intp)
        for start in range(0, len(subsets), chunk):
            block = key_part[subsets[start:start + chunk]]
            if (rank_batch(params.field, block) != size).any():
                return False
    return True


def draw_randomness(n_files: int, params: SharingParams, seed: int | None) -> list[EncryptionRandomness]:
    shape = (params.n_enc_keys, params.symbols_per_subfile)
    return [
        EncryptionRandomness(n, streams.symbols(streams.stream(seed, streams.ENCRYPTION, n), params.field.m, shape))
        for n in range(1, n_files + 1)
    ]


def random_files(n_files: int, n_subfiles: int, s: int, m: int, seed: int | None) -> list[FileData]:
    """Pseudo-random library; file ``n`` draws from its own stream."""
    return [
        FileData(n, streams.symbols(streams.stream(seed, streams.FILES, n), m, (n_subfiles, s)), n_subfiles * s * m)
        for n in range(1, n_files + 1)
    ]
