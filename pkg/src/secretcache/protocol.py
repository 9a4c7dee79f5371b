"""Delivery phase, per-user decoding, and the eavesdropping analysis.

``simulate`` wires the phases together (encode, place shares, place keys,
deliver) for one instance.  ``attempt_eavesdrop`` reruns the same code path on
symbolic inputs: every unknown (sub-file, encryption symbol, key) gets its own
symbol position set to 1, so each produced symbol row *is* the coefficient
row of that observation over the unknowns.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, comb
from typing import Callable, Sequence

import numpy as np

from .gf2m import SYMBOL_DTYPE, FieldMatrix, rank
from .secret_share import (
    EncryptionRandomness,
    FileData,
    ShareVector,
    draw_randomness,
    encode_file,
    random_files,
    reconstruct_file,
)
from .topology import (
    Association,
    HelperCacheContent,
    KeyId,
    KeyStore,
    SubsetIndex,
    SystemParams,
    all_serving_sets,
    place_keys,
    place_keys_t0,
    place_shares,
    rounds,
)

SABOTAGE_MODES = ("no-keys", "no-shares-encryption")

TRANSCRIPT_MAGIC = "secretcache-transcript 1"


class DemandError(ValueError):
    pass


class DecodeError(RuntimeError):
    pass


class InsufficientTransmissionsError(DecodeError):
    pass


class UnknownKeyError(DecodeError, KeyError):
    pass


@dataclass(frozen=True)
class DemandVector:
    d: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))
        if len(set(self.d)) != len(self.d):
            raise DemandError("distinct demands required")

    @classmethod
    def for_params(cls, d: Sequence[int], params: SystemParams) -> "DemandVector":
        dv = cls(tuple(d))
        if len(dv.d) != params.n_users:
            raise DemandError(f"expected {params.n_users} demands, got {len(dv.d)}")
        if not all(1 <= x <= params.n_files for x in dv.d):
            raise DemandError(f"demands must lie in 1..{params.n_files}")
        return dv

    def __getitem__(self, user: int) -> int:
        """Demand of a 1-based user id."""
        return self.d[user - 1]

    def __len__(self) -> int:
        return len(self.d)


@dataclass(frozen=True, eq=False)
class Transmission:
    round: int
    caches: tuple[int, ...]
    users: tuple[int, ...]
    multiplicity: int
    payload: np.ndarray

    @property
    def key_id(self) -> KeyId:
        return KeyId(self.round, self.users, self.multiplicity)


@dataclass(frozen=True, eq=False)
class Transcript:
    transmissions: tuple[Transmission, ...]
    demands: DemandVector
    params: SystemParams
    association: Association
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.transmissions)

    def __iter__(self):
        return iter(self.transmissions)

    @property
    def bits(self) -> int:
        return sum(tx.payload.size for tx in self.transmissions) * self.params.field.m

    @property
    def rate(self) -> Fraction:
        """Transmitted bits over the (padded) file size."""
        return Fraction(self.bits, self.params.padded_file_bits)

    def per_round(self) -> list[int]:
        counts: dict[int, int] = {}
        for tx in self.transmissions:
            counts[tx.round] = counts.get(tx.round, 0) + 1
        return [counts[j] for j in sorted(counts)]

    def dumps(self) -> str:
        p = self.params
        lines = [
            TRANSCRIPT_MAGIC,
            f"files={p.n_files} users={p.n_users} caches={p.n_caches} t={p.t} "
            f"m={p.field.m} symbols={p.symbols_per_subfile} file_bits={p.file_bits or 'none'}",
            "profile=" + ",".join(map(str, self.association.profile)),
            "association=" + self.association.format(),
            "demands=" + ",".join(map(str, self.demands.d)),
            f"seed={'none' if self.seed is None else self.seed}",
        ]
        for tx in self.transmissions:
            q = ",".join(map(str, tx.caches)) or "-"
            lines.append(
                f"j={tx.round} Q={q} chi={','.join(map(str, tx.users))} "
                f"l={tx.multiplicity} payload={pack_payload(tx.payload, p.field.m)}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Transcript":
        lines = text.strip("\n").split("\n")
        if lines[0] != TRANSCRIPT_MAGIC:
            raise ValueError("not a transcript")
        head = dict(kv.split("=", 1) for kv in lines[1].split())
        fb = None if head["file_bits"] == "none" else int(head["file_bits"])
        params = SystemParams(int(head["files"]), int(head["users"]), int(head["caches"]), int(head["t"]), fb)
        assoc = Association.from_groups(
            [[int(u) for u in g.split(",")] if g else [] for g in lines[3].split("=", 1)[1].split(";")]
        )
        demands = DemandVector(tuple(int(x) for x in lines[4].split("=", 1)[1].split(",")))
        seed_s = lines[5].split("=", 1)[1]
        seed = None if seed_s == "none" else int(seed_s)
        m, s = int(head["m"]), int(head["symbols"])
        txs = []
        for line in lines[6:]:
            rec = dict(kv.split("=", 1) for kv in line.split())
            q = () if rec["Q"] == "-" else tuple(int(x) for x in rec["Q"].split(","))
            txs.append(
                Transmission(
                    int(rec["j"]), q, tuple(int(x) for x in rec["chi"].split(",")),
                    int(rec["l"]), unpack_payload(rec["payload"], m, s),
                )
            )
        return cls(tuple(txs), demands, params, assoc, seed)


def pack_payload(symbols: np.ndarray, m: int) -> str:
    """Symbols as one big-endian integer, first symbol most significant."""
    value = 0
    for x in np.asarray(symbols).reshape(-1):
        value = (value << m) | int(x)
    n_bytes = ceil(symbols.size * m / 8)
    return value.to_bytes(n_bytes, "big").hex()


def unpack_payload(hex_str: str, m: int, s: int) -> np.ndarray:
    value = int.from_bytes(bytes.fromhex(hex_str), "big")
    mask = (1 << m) - 1
    return np.array([(value >> (m * (s - 1 - i))) & mask for i in range(s)], dtype=SYMBOL_DTYPE)


def deliver(
    demands: DemandVector,
    library_shares: Sequence[ShareVector],
    keystore: KeyStore,
    assoc: Association,
    params: SystemParams,
    seed: int | None = None,
) -> Transcript:
    if params.t == 0:
        raise ValueError("t = 0 has no coded delivery; use deliver_t0")
    demands = DemandVector.for_params(demands.d, params)
    by_file = {sv.file_index: sv for sv in library_shares}
    idx = SubsetIndex(params.n_caches, params.t)
    txs = []
    for e in all_serving_sets(assoc, params.t):
        payload = keystore.entries[e.key_id].copy()
        for lam in e.caches:
            u = assoc.user_at(lam, e.round)
            if u is not None and u in e.users:
                rest = tuple(c for c in e.caches if c != lam)
                payload ^= by_file[demands[u]][idx.rank(rest)]
        txs.append(Transmission(e.round, e.caches, e.users, e.multiplicity, payload))
    lam, t = params.n_caches, params.t
    assert len(txs) == sum(comb(lam, t + 1) - comb(lam - len(r), t + 1) for r in rounds(assoc))
    return Transcript(tuple(txs), demands, params, assoc, seed)


def deliver_t0(
    demands: DemandVector,
    files: Sequence[FileData],
    keystore: KeyStore,
    assoc: Association,
    params: SystemParams,
    seed: int | None = None,
) -> Transcript:
    """Each user's file under its own whole-file one-time pad."""
    if params.t != 0:
        raise ValueError("deliver_t0 is only for t = 0")
    demands = DemandVector.for_params(demands.d, params)
    by_file = {f.file_index: f for f in files}
    txs = []
    for k in range(1, params.n_users + 1):
        kid = KeyId(1, (k,), 1)
        payload = by_file[demands[k]].subfiles.reshape(-1) ^ keystore.entries[kid]
        txs.append(Transmission(1, (), (k,), 1, payload))
    return Transcript(tuple(txs), demands, params, assoc, seed)


@dataclass(frozen=True, eq=False)
class UserView:
    user: int
    cache: int
    shares: dict  # (file, subset) -> row, from the user's helper cache
    keys: dict  # KeyId -> row, from the user's private cache
    transcript: Transcript

    @property
    def association(self) -> Association:
        return self.transcript.association


def build_view(user: int, caches: Sequence[HelperCacheContent] | None, keystore: KeyStore, transcript: Transcript) -> UserView:
    lam = transcript.association.cache_of(user)
    shares = dict(caches[lam - 1].shares) if caches else {}
    return UserView(user, lam, shares, keystore.keys_of(user), transcript)


def decode(view: UserView, params: SystemParams) -> FileData:
    k = view.user
    tr = view.transcript
    want = tr.demands[k]
    bits = params.file_bits or params.padded_file_bits
    mine = [tx for tx in tr if k in tx.users]

    def key_for(tx: Transmission) -> np.ndarray:
        try:
            return view.keys[tx.key_id]
        except KeyError:
            raise UnknownKeyError(f"user {k} holds no key for {tx.key_id}") from None

    if params.t == 0:
        if len(mine) != 1:
            raise InsufficientTransmissionsError(f"user {k} expected 1 transmission, found {len(mine)}")
        plain = mine[0].payload ^ key_for(mine[0])
        return FileData(want, plain.reshape(1, -1), bits)

    sp = params.sharing
    idx = SubsetIndex(params.n_caches, params.t)
    assoc = view.association
    rows = np.zeros((sp.n_shares, sp.symbols_per_subfile), dtype=SYMBOL_DTYPE)
    filled = np.zeros(sp.n_shares, dtype=bool)
    for (n, subset), row in view.shares.items():
        if n == want:
            rows[idx.rank(subset) - 1] = row
            filled[idx.rank(subset) - 1] = True
    for tx in mine:
        x = tx.payload ^ key_for(tx)
        for lam in tx.caches:
            u = assoc.user_at(lam, tx.round)
            if u is not None and u != k and u in tx.users:
                rest = tuple(c for c in tx.caches if c != lam)
                x ^= view.shares[(tr.demands[u], rest)]
        missing = idx.rank(c for c in tx.caches if c != view.cache) - 1
        if filled[missing]:
            raise DecodeError(f"share {idx.unrank(missing + 1)} of file {want} recovered twice")
        rows[missing] = x
        filled[missing] = True
    if not filled.all():
        raise InsufficientTransmissionsError(
            f"user {k} is missing {int((~filled).sum())} of {sp.n_shares} shares"
        )
    return reconstruct_file(ShareVector(want, rows), sp, bits)


@dataclass(eq=False)
class Run:
    """Every artefact of one end-to-end execution."""

    params: SystemParams
    association: Association
    files: list[FileData]
    randomness: list[EncryptionRandomness] | None
    shares: list[ShareVector] | None
    caches: list[HelperCacheContent] | None
    keystore: KeyStore
    transcript: Transcript

    def view(self, user: int) -> UserView:
        return build_view(user, self.caches, self.keystore, self.transcript)

    def decode_all(self) -> dict[int, bool]:
        ok = {}
        by_file = {f.file_index: f for f in self.files}
        for k in range(1, self.params.n_users + 1):
            try:
                got = decode(self.view(k), self.params)
                ok[k] = got == by_file[self.transcript.demands[k]]
            except DecodeError:
                ok[k] = False
        return ok


def simulate(
    params: SystemParams,
    assoc: Association,
    demands: DemandVector | Sequence[int] | None = None,
    seed: int | None = 0,
    files: Sequence[FileData] | None = None,
    randomness: Sequence[EncryptionRandomness] | None = None,
    key_payloads: Callable[[int, KeyId], np.ndarray] | None = None,
    sabotage: str | None = None,
) -> Run:
    """Run placement and delivery for one instance; demands default to 1..K."""
    if sabotage is not None and sabotage not in SABOTAGE_MODES:
        raise ValueError(f"unknown sabotage mode {sabotage!r}")
    if demands is None:
        demands = range(1, params.n_users + 1)
    if not isinstance(demands, DemandVector):
        demands = DemandVector.for_params(demands, params)
    s, m = params.symbols_per_subfile, params.field.m
    if files is None:
        files = random_files(params.n_files, params.n_subfiles, s, m, seed)
    files = list(files)
    if sabotage == "no-keys":
        key_payloads = lambda i, kid: np.zeros(s, dtype=SYMBOL_DTYPE)  # noqa: E731

    if params.t == 0:
        keystore = place_keys_t0(assoc, params, seed, key_payloads)
        transcript = deliver_t0(demands, files, keystore, assoc, params, seed)
        return Run(params, assoc, files, None, None, None, keystore, transcript)

    sp = params.sharing
    if randomness is None:
        randomness = draw_randomness(params.n_files, sp, seed)
    randomness = list(randomness)
    if sabotage == "no-shares-encryption":
        randomness = [EncryptionRandomness(r.file_index, np.zeros_like(r.enc_keys)) for r in randomness]
    shares = [encode_file(f, r, sp) for f, r in zip(files, randomness)]
    caches = place_shares(shares, params)
    keystore = place_keys(assoc, params, seed, key_payloads)
    transcript = deliver(demands, shares, keystore, assoc, params, seed)
    return Run(params, assoc, files, randomness, shares, caches, keystore, transcript)


@dataclass(frozen=True)
class ObservationSystem:
    """Coefficient rows of everything one user sees, over all unknowns."""

    matrix: FieldMatrix
    columns: tuple  # ("W", n, p) | ("V", n, q) | ("T", KeyId)

    def cols_of(self, kind: str, file_index: int | None = None) -> list[int]:
        return [
            i for i, c in enumerate(self.columns)
            if c[0] == kind and (file_index is None or c[1] == file_index)
        ]

    def without(self, cols: Sequence[int]) -> FieldMatrix:
        keep = [i for i in range(len(self.columns)) if i not in set(cols)]
        return self.matrix.submatrix(range(self.matrix.rows), keep)


def symbolic_run(params: SystemParams, assoc: Association, demands, sabotage: str | None = None):
    """``simulate`` with one-hot symbolic inputs; returns (run, column labels)."""
    P = params.n_subfiles
    Q = params.sharing.n_enc_keys if params.t else 0
    key_ids = (
        [e.key_id for e in all_serving_sets(assoc, params.t)]
        if params.t
        else [KeyId(1, (k,), 1) for k in range(1, params.n_users + 1)]
    )
    columns = []
    for n in range(1, params.n_files + 1):
        columns += [("W", n, p) for p in range(1, P + 1)]
        columns += [("V", n, q) for q in range(1, Q + 1)]
    columns += [("T", kid) for kid in key_ids]
    width = len(columns)
    pos = {c: i for i, c in enumerate(columns)}
    sym = SystemParams(params.n_files, params.n_users, params.n_caches, params.t, P * width * params.field.m)
    assert sym.symbols_per_subfile == width and sym.field == params.field
    eye = np.eye(width, dtype=SYMBOL_DTYPE)

    files = [FileData(n, eye[[pos[("W", n, p)] for p in range(1, P + 1)]]) for n in range(1, params.n_files + 1)]
    randomness = None
    if params.t:
        randomness = [
            EncryptionRandomness(n, eye[[pos[("V", n, q)] for q in range(1, Q + 1)]].reshape(Q, width))
            for n in range(1, params.n_files + 1)
        ]
    run = simulate(
        sym, assoc, demands, seed=None, files=files, randomness=randomness,
        key_payloads=lambda i, kid: eye[pos[("T", kid)]], sabotage=sabotage,
    )
    return run, tuple(columns)


def observation_system(run: Run, columns: tuple, user: int) -> ObservationSystem:
    view = run.view(user)
    rows = list(view.shares.values()) + list(view.keys.values()) + [tx.payload for tx in view.transcript]
    mat = np.stack(rows) if rows else np.zeros((0, len(columns)), dtype=SYMBOL_DTYPE)
    return ObservationSystem(FieldMatrix(run.params.field, mat), columns)


@dataclass(frozen=True)
class EavesdropEvidence:
    user: int
    target_file: int
    unknowns: int
    observation_rank: int
    leaked: int  # dimensions of the target's sub-files fixed by the observations
    deficit: int  # sub-file dimensions the observations leave free

    @property
    def decodable(self) -> bool:
        return self.deficit == 0


def leakage(system: ObservationSystem, target_cols: Sequence[int]) -> int:
    """Symbols of information the rows carry about the target columns.

    With all unknowns uniform, ``H(obs) = rank(A)`` and
    ``H(obs | target) = rank(A without target columns)``, in field symbols.
    """
    return rank(system.matrix) - rank(system.without(target_cols))


def attempt_eavesdrop(
    view: UserView, target_file: int, params: SystemParams, sabotage: str | None = None,
    memo: dict | None = None,
) -> EavesdropEvidence:
    """How far user ``view.user`` is from pinning down ``target_file``.

    Returns the rank deficit per symbol position: the number of sub-file
    dimensions of the target that remain undetermined.  Zero means the user
    can decode the file.  Pass the same ``memo`` dict across calls on one
    transcript to reuse the symbolic run.
    """
    tr = view.transcript
    key = (tr.demands.d, sabotage)
    if memo is not None and key in memo:
        run, columns = memo[key]
    else:
        run, columns = symbolic_run(params, tr.association, tr.demands, sabotage)
        if memo is not None:
            memo[key] = (run, columns)
    system = observation_system(run, columns, view.user)
    target = system.cols_of("W", target_file)
    leaked = leakage(system, target)
    return EavesdropEvidence(
        view.user, target_file, len(columns), rank(system.matrix), leaked, len(target) - leaked
    )
