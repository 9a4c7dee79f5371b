"""
Checking secrecy three ways
===========================

1. every small set of shares is pure noise (rank of the key columns);
2. symbolic eavesdropping on a full transcript;
3. exact mutual information on an instance small enough to enumerate.
"""

from secretcache import Association, SharingParams, SystemParams, attempt_eavesdrop, simulate
from secretcache.analysis import verify_secrecy_bruteforce
from secretcache.secret_share import leakage_rank_check

for lam in range(2, 6):
    print(lam, [leakage_rank_check(SharingParams(lam, t)) for t in range(1, lam)])

params = SystemParams.from_memory(8, 8, 4, 8)
assoc = Association.from_groups([[1, 2, 3], [4, 5], [6, 7], [8]])
run = simulate(params, assoc, seed=1)
memo = {}
deficits = {
    (k, n): attempt_eavesdrop(run.view(k), n, params, memo=memo).deficit
    for k in range(1, 9) for n in range(1, 9) if n != k
}
print("smallest eavesdrop deficit:", min(deficits.values()))

# the same shape as the first demo, but every random input enumerated
small = SystemParams(3, 3, 2, 1)
groups = Association.from_groups([[1, 2], [3]])
report = verify_secrecy_bruteforce(small, groups)
print(report.instance, "->", "perfect" if report.perfect else "LEAKS", report.max_mi)

# drop the transmission keys and user 1 learns user 2's file
leaky = verify_secrecy_bruteforce(small, groups, [(1, 2, 3)], sabotage="no-keys")
for e in leaky.entries:
    print(f"  no keys, user {e.user}: {float(e.mutual_information):.3f} bits")
