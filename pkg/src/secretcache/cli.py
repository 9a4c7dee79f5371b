"""Command line: ``secretcache run | rate | verify``.

Scenario config is flat ``key = value`` text::

    files = 3            # N (defaults to K)
    users = 3            # K (defaults to the association's size)
    caches = 2           # defaults to the number of association groups
    t = 1                # or: memory = 3
    association = 1,2;3  # or: association_file = path (one line per cache)
    demands = 1,2,3      # default 1..K
    seed = 7
    file_bits = 96       # or: payload = a.bin,b.bin,c.bin
    transcript = out.txt
    summary = summary.txt

Exit status: 0 success, 1 invariant or verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from pathlib import Path

from .analysis import (
    MAX_BRUTE_FORCE_BITS,
    random_bits,
    rate_nonsecret_reference,
    rate_secret,
    verify_secrecy_bruteforce,
)
from .protocol import SABOTAGE_MODES, DemandVector, attempt_eavesdrop, simulate
from .secret_share import FileData, leakage_rank_check
from .topology import Association, SystemParams

CSV_COLUMNS = [
    "t", "M", "M_exact", "M_plus_1",
    "rate_secret", "rate_secret_exact", "rate_nonsecret", "rate_nonsecret_exact",
]


class UsageError(Exception):
    pass


def fmt_decimal(x: Fraction) -> str:
    return f"{float(x):.6f}"


def fmt_exact(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def read_config(path: str | Path) -> dict[str, str]:
    cfg = {}
    base = Path(path).parent
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        cfg[k] = v
    cfg["_base"] = str(base)
    return cfg


@dataclass
class Scenario:
    params: SystemParams
    association: Association
    demands: DemandVector
    seed: int | None
    files: list[FileData] | None
    transcript_path: Path | None
    summary_path: Path | None


def load_scenario(cfg: dict[str, str], seed=None, demands=None, out=None) -> Scenario:
    base = Path(cfg.get("_base", "."))
    if "association" in cfg:
        assoc = Association.parse(cfg["association"], sep=";")
    elif "association_file" in cfg:
        assoc = Association.parse((base / cfg["association_file"]).read_text())
    else:
        raise UsageError("config needs 'association' or 'association_file'")
    K = int(cfg.get("users", assoc.n_users))
    caches = int(cfg.get("caches", assoc.n_caches))

    payloads = None
    if "payload" in cfg:
        payloads = [(base / p).read_bytes() for p in cfg["payload"].split(",")]
    N = int(cfg.get("files", len(payloads) if payloads else K))
    if payloads is not None and len(payloads) != N:
        raise ValueError(f"{len(payloads)} payload files given for N={N}")
    file_bits = int(cfg["file_bits"]) if "file_bits" in cfg else None
    if payloads is not None:
        file_bits = max(8, 8 * max(len(p) for p in payloads))

    if "t" in cfg:
        params = SystemParams(N, K, caches, int(cfg["t"]), file_bits)
    elif "memory" in cfg:
        params = SystemParams.from_memory(N, K, caches, Fraction(cfg["memory"]), file_bits)
    else:
        raise UsageError("config needs 't' or 'memory'")

    files = None
    if payloads is not None:
        m, s = params.field.m, params.symbols_per_subfile
        files = [FileData.from_bytes(n, data, params.n_subfiles, s, m) for n, data in enumerate(payloads, start=1)]

    if seed is None and "seed" in cfg:
        seed = int(cfg["seed"])
    if seed is None:
        seed = 0
    d = demands if demands is not None else (_ints(cfg["demands"]) if "demands" in cfg else list(range(1, K + 1)))
    dv = DemandVector.for_params(d, params)

    tpath = Path(out) if out else (base / cfg["transcript"] if "transcript" in cfg else None)
    spath = base / cfg["summary"] if "summary" in cfg else None
    return Scenario(params, assoc, dv, seed, files, tpath, spath)


def cmd_run(args) -> int:
    sc = load_scenario(read_config(args.config), args.seed, args.demands, args.out)
    p, a = sc.params, sc.association
    run = simulate(p, a, sc.demands, seed=sc.seed, files=sc.files)
    ok = run.decode_all()
    tr = run.transcript
    measured = tr.rate
    lines = [
        f"instance: N={p.n_files} K={p.n_users} caches={p.n_caches} t={p.t} "
        f"M={fmt_exact(p.helper_cache_size) if p.t else 0} profile={','.join(map(str, a.profile))} seed={sc.seed}",
        "cache labels (relabelled <- original): "
        + " ".join(f"{i}<-{o}" for i, o in enumerate(a.original_labels, start=1)),
        f"transmissions: {len(tr)}",
        "per round: " + ",".join(map(str, tr.per_round())),
        f"rate: {fmt_exact(measured)} ({fmt_decimal(measured)})",
        f"formula rate: {fmt_exact(rate_secret(a.profile, p.n_caches, p.t))}",
    ]
    for k in range(1, p.n_users + 1):
        lines.append(f"user {k}: cache {a.cache_of(k)}, demand {sc.demands[k]}, {'pass' if ok[k] else 'FAIL'}")
    lines.append(f"decoded: {sum(ok.values())}/{p.n_users}")
    summary = "\n".join(lines) + "\n"
    sys.stdout.write(summary)
    if sc.transcript_path:
        sc.transcript_path.write_text(tr.dumps())
    if sc.summary_path:
        sc.summary_path.write_text(summary)
    return 0 if all(ok.values()) else 1


def rate_rows(profile: list[int], n_caches: int, n_files: int, ts) -> list[dict[str, str]]:
    rows = []
    for t in ts:
        M = Fraction(n_files * t, n_caches - t)
        rs = rate_secret(profile, n_caches, t)
        rn = rate_nonsecret_reference(profile, n_caches, t)
        rows.append({
            "t": str(t), "M": fmt_decimal(M), "M_exact": fmt_exact(M), "M_plus_1": fmt_decimal(M + 1),
            "rate_secret": fmt_decimal(rs), "rate_secret_exact": fmt_exact(rs),
            "rate_nonsecret": fmt_decimal(rn), "rate_nonsecret_exact": fmt_exact(rn),
        })
    return rows


def cmd_rate(args) -> int:
    profile = sorted(_ints(args.profile), reverse=True)
    n_caches = args.caches or len(profile)
    if len(profile) < n_caches:
        profile += [0] * (n_caches - len(profile))
    n_files = args.files or sum(profile)
    ts = [args.t] if args.t is not None else range(n_caches)
    rows = rate_rows(profile, n_caches, n_files, ts)
    w = csv.DictWriter(sys.stdout, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return 0


def cmd_verify(args) -> int:
    sc = load_scenario(read_config(args.config), args.seed, args.demands)
    p, a = sc.params, sc.association
    passed = True

    if p.t == 0:
        print("rank check: n/a (t = 0, no secret sharing)")
    else:
        good = leakage_rank_check(p.sharing)
        passed &= good
        print(f"rank check: {'pass' if good else 'FAIL'} (shares={p.sharing.n_shares}, threshold={p.sharing.n_enc_keys})")

    run = simulate(p, a, sc.demands, seed=sc.seed, files=sc.files)
    memo: dict = {}
    worst = None
    pairs = 0
    for k in range(1, p.n_users + 1):
        view = run.view(k)
        for n in range(1, p.n_files + 1):
            if n == sc.demands[k]:
                continue
            ev = attempt_eavesdrop(view, n, p, sabotage=args.sabotage, memo=memo)
            pairs += 1
            if worst is None or ev.deficit < worst.deficit:
                worst = ev
    if worst is None:
        print("eavesdrop: n/a (no unrequested files)")
    else:
        good = worst.deficit > 0
        passed &= good
        print(
            f"eavesdrop: {'pass' if good else 'FAIL'} ({pairs} user/file pairs, min deficit {worst.deficit} "
            f"at user {worst.user} vs file {worst.target_file}, leaked {worst.leaked})"
        )

    bits = random_bits(p, a)
    if bits > MAX_BRUTE_FORCE_BITS:
        print(f"mutual information: out of bounds ({bits} random bits > {MAX_BRUTE_FORCE_BITS})")
    else:
        demands = (
            list(permutations(range(1, p.n_files + 1), p.n_users)) if args.all_demands else [sc.demands.d]
        )
        rep = verify_secrecy_bruteforce(p, a, demands, sabotage=args.sabotage)
        good = rep.perfect
        passed &= good
        mi = rep.max_mi
        shown = fmt_exact(mi) if isinstance(mi, Fraction) else f"{mi:.6f}"
        print(
            f"mutual information: {'pass' if good else 'FAIL'} (max {shown} bits over "
            f"{len(demands)} demand vector(s), {rep.realisations} realisations)"
        )
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="secretcache", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(sp):
        sp.add_argument("--config", required=True, help="scenario config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--demands", type=_ints, help="comma-separated demand vector")

    run = sub.add_parser("run", help="place, deliver and decode one scenario")
    scenario_flags(run)
    run.add_argument("--out", help="transcript output path")
    run.set_defaults(func=cmd_run)

    rate = sub.add_parser("rate", help="rate table as CSV")
    rate.add_argument("--profile", required=True, help="users per cache, comma-separated")
    rate.add_argument("--caches", type=int)
    rate.add_argument("--files", type=int)
    g = rate.add_mutually_exclusive_group()
    g.add_argument("--t", type=int)
    g.add_argument("--sweep", action="store_true", help="all t = 0..caches-1 (default)")
    rate.set_defaults(func=cmd_rate)

    verify = sub.add_parser("verify", help="secrecy checks")
    scenario_flags(verify)
    verify.add_argument("--sabotage", choices=SABOTAGE_MODES)
    verify.add_argument("--all-demands", action="store_true", help="brute-force every distinct demand vector")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, AssertionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
