"""Rate formulas and secrecy verification.

Rates are exact ``Fraction`` values in units of files.  The exhaustive
secrecy check runs the real scheme once with one symbol position per joint
realisation of every random input, then tabulates the joint distribution of
(unrequested files, user observations) from integer counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from math import comb, log2
from typing import Iterator, Sequence

import numpy as np

from .gf2m import SYMBOL_DTYPE
from .protocol import DemandVector, simulate
from .secret_share import EncryptionRandomness, FileData
from .topology import Association, KeyId, SystemParams, all_serving_sets

MAX_BRUTE_FORCE_BITS = 24


class InstanceTooLargeError(ValueError):
    pass


def _check_profile(profile: Sequence[int], n_caches: int, t: int) -> None:
    if len(profile) != n_caches:
        raise ValueError(f"profile has {len(profile)} entries, expected {n_caches}")
    if any(x < 0 for x in profile) or any(a < b for a, b in zip(profile, profile[1:])):
        raise ValueError(f"profile {tuple(profile)} must be non-negative and non-increasing")
    if not 0 <= t <= n_caches - 1:
        raise ValueError(f"t must be in 0..{n_caches - 1}, got {t}")


def coded_transmissions(profile: Sequence[int], n_caches: int, t: int) -> int:
    """Sub-file-sized multicasts over all rounds (the rate numerator)."""
    return sum(L * comb(n_caches - r, t) for r, L in enumerate(profile, start=1))


def rate_secret(profile: Sequence[int], n_caches: int, t: int) -> Fraction:
    _check_profile(profile, n_caches, t)
    if t == 0:
        return Fraction(sum(profile))
    return Fraction(coded_transmissions(profile, n_caches, t), comb(n_caches - 1, t))


def rate_uniform(n_users: int, n_caches: int, t: int) -> Fraction:
    if n_users % n_caches:
        raise ValueError(f"{n_caches} caches do not divide {n_users} users")
    r = Fraction(n_users, t + 1)
    assert r == rate_secret([n_users // n_caches] * n_caches, n_caches, t)
    return r


def rate_dedicated_reference(n_files: int, n_users: int, memory) -> Fraction:
    """Secretive rate of the dedicated-cache scheme at per-user memory M >= 1."""
    M = Fraction(memory)
    if M < 1:
        raise ValueError("the dedicated-cache reference needs M >= 1")
    return n_users * (n_files + M - 1) / (n_files + (M - 1) * (n_users + 1))


def rate_nonsecret_reference(profile: Sequence[int], n_caches: int, t: int) -> Fraction:
    """Shared-cache rate without secrecy (uncoded placement of sub-files).

    Reference curve from prior shared-cache work, kept only for comparison.
    """
    _check_profile(profile, n_caches, t)
    return Fraction(coded_transmissions(profile, n_caches, t), comb(n_caches, t))


@dataclass(frozen=True)
class RatePoint:
    t: int
    M: Fraction
    rate: Fraction


def rate_points(profile: Sequence[int], n_caches: int, n_files: int) -> list[RatePoint]:
    return [
        RatePoint(t, Fraction(n_files * t, n_caches - t), rate_secret(profile, n_caches, t))
        for t in range(n_caches)
    ]


def lower_convex_envelope(points: Sequence[RatePoint]) -> list[RatePoint]:
    """Monotone-chain lower hull, points sorted by memory."""
    hull: list[RatePoint] = []
    for p in sorted(points, key=lambda p: p.M):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (b.M - a.M) * (p.rate - a.rate) - (b.rate - a.rate) * (p.M - a.M)
            if cross > 0:
                break
            hull.pop()
        hull.append(p)
    return hull


def rate_envelope(profile: Sequence[int], n_caches: int, n_files: int, memory) -> Fraction:
    """Memory-sharing rate at any helper-cache size in [0, N(caches-1)]."""
    M = Fraction(memory)
    top = Fraction(n_files * (n_caches - 1))
    if not 0 <= M <= top:
        raise ValueError(f"memory {memory} outside [0, {top}]")
    hull = lower_convex_envelope(rate_points(profile, n_caches, n_files))
    for a, b in zip(hull, hull[1:]):
        if a.M <= M <= b.M:
            return a.rate + (b.rate - a.rate) * (M - a.M) / (b.M - a.M)
    return hull[-1].rate


def profiles(n_users: int, n_caches: int) -> Iterator[tuple[int, ...]]:
    """Non-increasing profiles of ``n_users`` over ``n_caches`` caches (zeros allowed)."""

    def rec(left: int, slots: int, cap: int):
        if slots == 0:
            if left == 0:
                yield ()
            return
        for x in range(min(left, cap), -1, -1):
            for rest in rec(left - x, slots - 1, x):
                yield (x,) + rest

    return rec(n_users, n_caches, n_users)


def uniform_is_minimum_check(n_users: int, n_caches: int, t: int) -> bool:
    best = rate_uniform(n_users, n_caches, t)
    return all(best <= rate_secret(L, n_caches, t) for L in profiles(n_users, n_caches))


# exhaustive secrecy


@dataclass
class UserLeakage:
    demands: tuple[int, ...]
    user: int
    mutual_information: Fraction | float  # bits; exactly Fraction(0) when independent
    independent: bool


@dataclass
class SecrecyReport:
    instance: str
    realisations: int
    entries: list[UserLeakage] = field(default_factory=list)

    @property
    def max_mi(self) -> Fraction | float:
        return max((e.mutual_information for e in self.entries), default=Fraction(0))

    @property
    def perfect(self) -> bool:
        return all(e.independent for e in self.entries)


def random_bits(params: SystemParams, assoc: Association) -> int:
    m, s = params.field.m, params.symbols_per_subfile
    if params.t == 0:
        return (params.n_files + params.n_users) * s * m
    sp = params.sharing
    n_keys = len(all_serving_sets(assoc, params.t))
    return (params.n_files * (sp.n_subfiles + sp.n_enc_keys) + n_keys) * s * m


def _row_ids(rows: np.ndarray) -> np.ndarray:
    """Label each column of ``rows`` by its distinct value tuple."""
    if rows.shape[0] == 0:
        return np.zeros(rows.shape[1], dtype=np.int64)
    return np.unique(rows.T, axis=0, return_inverse=True)[1].reshape(-1)


def mutual_information(x: np.ndarray, y: np.ndarray) -> tuple[Fraction | float, bool]:
    """MI between two label arrays under the uniform measure on positions.

    Independence is decided exactly on integer counts; when it holds the MI
    is returned as ``Fraction(0)``.
    """
    n = x.size
    _, xi = np.unique(x, return_inverse=True)
    ys, yi = np.unique(y, return_inverse=True)
    cx = np.bincount(xi.reshape(-1))
    cy = np.bincount(yi.reshape(-1))
    pair = xi.reshape(-1).astype(np.int64) * len(ys) + yi.reshape(-1)
    pv, cxy = np.unique(pair, return_counts=True)
    px, py = pv // len(ys), pv % len(ys)
    lhs = [int(c) * n for c in cxy]
    rhs = [int(a) * int(b) for a, b in zip(cx[px], cy[py])]
    if lhs == rhs:
        return Fraction(0), True
    mi = sum(int(c) / n * log2(l / r) for c, l, r in zip(cxy, lhs, rhs))
    return mi, False


def verify_secrecy_bruteforce(
    params: SystemParams,
    assoc: Association,
    demands: Sequence[Sequence[int]] | None = None,
    sabotage: str | None = None,
    max_bits: int = MAX_BRUTE_FORCE_BITS,
) -> SecrecyReport:
    """Exact leakage ``I(W^{others}; Z_k, X)`` for every user by enumeration.

    ``demands`` lists the demand vectors to test; by default every vector of
    distinct demands.
    """
    bits = random_bits(params, assoc)
    if bits > max_bits:
        raise InstanceTooLargeError(f"{bits} random bits exceed the brute-force bound of {max_bits}")
    m, s = params.field.m, params.symbols_per_subfile
    P = params.n_subfiles
    Q = params.sharing.n_enc_keys if params.t else 0
    n_real = 1 << bits
    if demands is None:
        demands = list(permutations(range(1, params.n_files + 1), params.n_users))

    # realisation r: consecutive m-bit fields of r feed each random symbol
    real = np.arange(n_real, dtype=np.uint64)
    cursor = 0

    def take(rows: int) -> np.ndarray:
        nonlocal cursor
        out = np.empty((rows, s, n_real), dtype=SYMBOL_DTYPE)
        for i in range(rows):
            for j in range(s):
                out[i, j] = (real >> np.uint64(cursor)) & np.uint64((1 << m) - 1)
                cursor += m
        return out.reshape(rows, s * n_real)

    files = [FileData(n, take(P)) for n in range(1, params.n_files + 1)]
    randomness = (
        [EncryptionRandomness(n, take(Q)) for n in range(1, params.n_files + 1)] if params.t else None
    )
    key_ids = (
        [e.key_id for e in all_serving_sets(assoc, params.t)]
        if params.t
        else [KeyId(1, (k,), 1) for k in range(1, params.n_users + 1)]
    )
    key_rows = {kid: take(1)[0] for kid in key_ids}
    assert cursor == bits

    wide = SystemParams(params.n_files, params.n_users, params.n_caches, params.t, P * s * n_real * m)
    assert wide.field == params.field and wide.symbols_per_subfile == s * n_real

    report = SecrecyReport(
        f"N={params.n_files} K={params.n_users} caches={params.n_caches} t={params.t} "
        f"m={m} s={s} profile={assoc.profile}" + (f" sabotage={sabotage}" if sabotage else ""),
        n_real,
    )
    for d in demands:
        dv = DemandVector.for_params(d, params)
        run = simulate(
            wide, assoc, dv, seed=None, files=files, randomness=randomness,
            key_payloads=lambda i, kid: key_rows[kid], sabotage=sabotage,
        )
        for k in range(1, params.n_users + 1):
            view = run.view(k)
            obs = [v for v in view.shares.values()] + [v for v in view.keys.values()]
            obs += [tx.payload for tx in view.transcript]
            y = _row_ids(_per_realisation(obs, s, n_real))
            others = [f.subfiles for f in files if f.file_index != dv[k]]
            x = _row_ids(_per_realisation(others, s, n_real))
            mi, indep = mutual_information(x, y)
            report.entries.append(UserLeakage(dv.d, k, mi, indep))
    return report


def _per_realisation(rows: Sequence[np.ndarray], s: int, n_real: int) -> np.ndarray:
    """Stack symbol rows into a (features, realisations) array."""
    if not rows:
        return np.zeros((0, n_real), dtype=SYMBOL_DTYPE)
    arr = np.concatenate([np.asarray(r).reshape(-1, s, n_real) for r in rows])
    return arr.reshape(-1, n_real)
