"""
Three users, two helper caches
==============================

Two users share cache 1 and a third user sits alone on cache 2.  Each cache
holds enough for three files, which puts every share in exactly one cache.
"""

from secretcache import Association, SystemParams, simulate

params = SystemParams.from_memory(n_files=3, n_users=3, n_caches=2, memory=3)
assoc = Association.from_groups([[1, 2], [3]])
print("t =", params.t, " field GF(2^%d)" % params.field.m, " profile", assoc.profile)

run = simulate(params, assoc, demands=[1, 2, 3], seed=7)

# two rounds: users 1 and 3 share the first multicast, user 2 gets the second
for tx in run.transcript:
    print(f"round {tx.round}: caches {tx.caches} serve users {tx.users}")

print("rate:", run.transcript.rate)
print("decoded:", run.decode_all())

# users 1 and 2 read the same helper cache, yet the key on round 2 keeps
# user 1 from learning anything about file 2
from secretcache import attempt_eavesdrop

ev = attempt_eavesdrop(run.view(1), 2, params)
print(f"user 1 vs file 2: leaked {ev.leaked}, undetermined {ev.deficit}")
