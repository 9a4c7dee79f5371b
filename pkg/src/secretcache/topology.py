"""System parameters, user-to-cache association, and the placement phases."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import ceil, comb
from typing import Callable, Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from . import streams
from .gf2m import SYMBOL_DTYPE, FieldParams
from .secret_share import SharingParams, ShareVector

# symbol width used when t = 0 and nothing is secret-shared
PLAIN_SYMBOL_BITS = 8


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class SystemParams:
    n_files: int
    n_users: int
    n_caches: int
    t: int
    file_bits: int | None = None

    def __post_init__(self):
        if not self.n_files >= self.n_users >= self.n_caches >= 1:
            raise TopologyError(
                f"need N >= K >= caches >= 1, got N={self.n_files}, K={self.n_users}, caches={self.n_caches}"
            )
        if not 0 <= self.t <= self.n_caches - 1:
            raise TopologyError(f"t must be in 0..{self.n_caches - 1}, got {self.t}")
        if self.file_bits is not None and self.file_bits < 1:
            raise TopologyError("file_bits must be positive")

    @classmethod
    def from_memory(cls, n_files: int, n_users: int, n_caches: int, memory, file_bits: int | None = None) -> "SystemParams":
        t = Fraction(n_caches) * Fraction(memory) / (Fraction(memory) + n_files)
        if t.denominator != 1:
            raise TopologyError(f"memory {memory} gives non-integer t = {t}; use memory sharing")
        return cls(n_files, n_users, n_caches, int(t), file_bits)

    @property
    def helper_cache_size(self) -> Fraction:
        return Fraction(self.n_files * self.t, self.n_caches - self.t)

    @property
    def n_subfiles(self) -> int:
        return comb(self.n_caches - 1, self.t)

    @property
    def field(self) -> FieldParams:
        if self.t == 0:
            return FieldParams(PLAIN_SYMBOL_BITS)
        return FieldParams.smallest_for(2 * comb(self.n_caches, self.t))

    @property
    def symbols_per_subfile(self) -> int:
        if self.file_bits is None:
            return 1
        return ceil(self.file_bits / (self.n_subfiles * self.field.m))

    @property
    def subfile_bits(self) -> int:
        return self.symbols_per_subfile * self.field.m

    @property
    def padded_file_bits(self) -> int:
        return self.n_subfiles * self.subfile_bits

    @property
    def sharing(self) -> SharingParams:
        if self.t == 0:
            raise TopologyError("t = 0 uses no secret sharing")
        return SharingParams(self.n_caches, self.t, self.symbols_per_subfile, self.field)


@dataclass(frozen=True)
class Association:
    """Users grouped by helper cache, caches relabelled by decreasing load.

    ``groups[i]`` is the ordered user list of cache ``i + 1`` after
    relabelling; ``original_labels[i]`` is that cache's label in the input.
    """

    groups: tuple[tuple[int, ...], ...]
    original_labels: tuple[int, ...]

    @classmethod
    def from_groups(cls, groups: Sequence[Sequence[int]]) -> "Association":
        groups = [tuple(int(u) for u in g) for g in groups]
        if not groups:
            raise TopologyError("association has no caches")
        users = sorted(u for g in groups for u in g)
        if users != list(range(1, len(users) + 1)):
            raise TopologyError("users must form a permutation of 1..K")
        order = sorted(range(len(groups)), key=lambda i: -len(groups[i]))
        return cls(tuple(groups[i] for i in order), tuple(i + 1 for i in order))

    @classmethod
    def parse(cls, text: str, sep: str = "\n") -> "Association":
        """One group per line (or per ``sep``), comma-separated user ids."""
        parts = text.strip().split(sep)
        groups = []
        for part in parts:
            part = part.strip()
            groups.append([int(u) for u in part.split(",")] if part else [])
        return cls.from_groups(groups)

    def format(self, sep: str = ";") -> str:
        return sep.join(",".join(map(str, g)) for g in self.groups)

    @property
    def profile(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    @property
    def n_caches(self) -> int:
        return len(self.groups)

    @property
    def n_users(self) -> int:
        return sum(self.profile)

    def cache_of(self, user: int) -> int:
        for lam, g in enumerate(self.groups, start=1):
            if user in g:
                return lam
        raise KeyError(user)

    def user_at(self, cache: int, j: int) -> int | None:
        """j-th user of a cache (both 1-based), or None if it has fewer."""
        g = self.groups[cache - 1]
        return g[j - 1] if j <= len(g) else None


class SubsetIndex:
    """Lexicographic ranking of the ``size``-subsets of ``{1..universe}``, from 1."""

    def __init__(self, universe: int, size: int):
        if not 0 <= size <= universe:
            raise TopologyError(f"no {size}-subsets of a {universe}-set")
        self.universe = universe
        self.size = size

    def __len__(self) -> int:
        return comb(self.universe, self.size)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return combinations(range(1, self.universe + 1), self.size)

    def rank(self, subset: Iterable[int]) -> int:
        c = sorted(subset)
        if len(c) != self.size or len(set(c)) != self.size:
            raise TopologyError(f"expected {self.size} distinct elements, got {c}")
        if c and not (1 <= c[0] and c[-1] <= self.universe):
            raise TopologyError(f"{c} is not a subset of 1..{self.universe}")
        r, prev = 1, 0
        for i, x in enumerate(c, start=1):
            for v in range(prev + 1, x):
                r += comb(self.universe - v, self.size - i)
            prev = x
        return r

    def unrank(self, rank: int) -> tuple[int, ...]:
        if not 1 <= rank <= len(self):
            raise TopologyError(f"rank {rank} outside 1..{len(self)}")
        r = rank - 1
        out, x = [], 1
        for i in range(1, self.size + 1):
            while r >= comb(self.universe - x, self.size - i):
                r -= comb(self.universe - x, self.size - i)
                x += 1
            out.append(x)
            x += 1
        return tuple(out)


@dataclass(frozen=True, eq=False)
class HelperCacheContent:
    cache_index: int
    shares: dict  # (file n, subset T) -> symbol row

    def total_symbols(self) -> int:
        return sum(v.size for v in self.shares.values())


def place_shares(library_shares: Sequence[ShareVector], params: SystemParams) -> list[HelperCacheContent]:
    if params.t == 0:
        raise TopologyError("t = 0 places nothing in helper caches; use the t = 0 delivery")
    if len(library_shares) != params.n_files:
        raise TopologyError(f"expected {params.n_files} share vectors, got {len(library_shares)}")
    idx = SubsetIndex(params.n_caches, params.t)
    caches = [HelperCacheContent(lam, {}) for lam in range(1, params.n_caches + 1)]
    for sv in library_shares:
        for r, subset in enumerate(idx, start=1):
            for lam in subset:
                caches[lam - 1].shares[(sv.file_index, subset)] = sv[r]
    stored_bits = params.n_files * comb(params.n_caches - 1, params.t - 1) * params.subfile_bits
    assert stored_bits == params.helper_cache_size * params.padded_file_bits
    for c in caches:
        assert c.total_symbols() * params.field.m == stored_bits
    return caches


def rounds(assoc: Association) -> list[tuple[int, ...]]:
    """Users served in each round: the j-th user of every cache that has one."""
    if not assoc.profile or assoc.profile[0] == 0:
        return []
    return [
        tuple(g[j] for g in assoc.groups if j < len(g))
        for j in range(assoc.profile[0])
    ]


class ServingEntry(NamedTuple):
    round: int
    caches: tuple[int, ...]  # Q, a (t+1)-subset of caches
    users: tuple[int, ...]  # chi_Q, sorted
    multiplicity: int  # l

    @property
    def key_id(self) -> "KeyId":
        return KeyId(self.round, self.users, self.multiplicity)


class KeyId(NamedTuple):
    round: int
    users: tuple[int, ...]
    multiplicity: int


def serving_sets(assoc: Association, t: int, j: int) -> list[ServingEntry]:
    if not 1 <= j <= (assoc.profile[0] if assoc.profile else 0):
        raise TopologyError(f"round {j} does not exist")
    seen: dict[tuple[int, ...], int] = {}
    out = []
    for q in SubsetIndex(assoc.n_caches, t + 1):
        chi = tuple(sorted(u for lam in q if (u := assoc.user_at(lam, j)) is not None))
        if not chi:
            continue
        seen[chi] = seen.get(chi, 0) + 1
        out.append(ServingEntry(j, q, chi, seen[chi]))
    return out


def all_serving_sets(assoc: Association, t: int) -> list[ServingEntry]:
    return [e for j in range(1, len(rounds(assoc)) + 1) for e in serving_sets(assoc, t, j)]


@dataclass(frozen=True, eq=False)
class KeyStore:
    entries: dict  # KeyId -> symbol row
    user_keys: dict  # user -> list of KeyId

    def keys_of(self, user: int) -> dict:
        return {kid: self.entries[kid] for kid in self.user_keys[user]}

    def __len__(self) -> int:
        return len(self.entries)


def _fill_keys(key_ids: Sequence[KeyId], width: int, m: int, seed, payloads) -> KeyStore:
    entries = {}
    for i, kid in enumerate(key_ids):
        if payloads is None:
            entries[kid] = streams.symbols(streams.stream(seed, streams.KEYS, i), m, width)
        else:
            entries[kid] = np.asarray(payloads(i, kid), dtype=SYMBOL_DTYPE)
    user_keys: dict[int, list[KeyId]] = {}
    for kid in key_ids:
        for u in kid.users:
            user_keys.setdefault(u, []).append(kid)
    return KeyStore(entries, user_keys)


def place_keys(
    assoc: Association,
    params: SystemParams,
    seed: int | None,
    payloads: Callable[[int, KeyId], np.ndarray] | None = None,
) -> KeyStore:
    """One fresh key per (round, serving set, multiplicity).

    ``payloads(i, key_id)`` overrides the random draw for the i-th key; the
    exhaustive secrecy checks use it to inject enumerated values.
    """
    if params.t == 0:
        raise TopologyError("t = 0 uses whole-file keys; see place_keys_t0")
    _check_assoc(assoc, params)
    ids = [e.key_id for e in all_serving_sets(assoc, params.t)]
    store = _fill_keys(ids, params.symbols_per_subfile, params.field.m, seed, payloads)
    expected = sum(L * comb(params.n_caches - r, params.t) for r, L in enumerate(assoc.profile, start=1))
    assert len(store) == expected
    for u in range(1, params.n_users + 1):
        assert len(store.user_keys.get(u, ())) == params.n_subfiles
    return store


def place_keys_t0(
    assoc: Association,
    params: SystemParams,
    seed: int | None,
    payloads: Callable[[int, KeyId], np.ndarray] | None = None,
) -> KeyStore:
    """Whole-file one-time pad per user, for the t = 0 scheme."""
    if params.t != 0:
        raise TopologyError("place_keys_t0 is only for t = 0")
    _check_assoc(assoc, params)
    ids = [KeyId(1, (k,), 1) for k in range(1, params.n_users + 1)]
    return _fill_keys(ids, params.symbols_per_subfile, params.field.m, seed, payloads)


def _check_assoc(assoc: Association, params: SystemParams) -> None:
    if assoc.n_caches != params.n_caches or assoc.n_users != params.n_users:
        raise TopologyError(
            f"association has {assoc.n_caches} caches / {assoc.n_users} users, "
            f"parameters say {params.n_caches} / {params.n_users}"
        )
