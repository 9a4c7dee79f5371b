"""
Eight users on four caches
==========================

Profile (3, 2, 2, 1) with t = 2: three delivery rounds and eleven multicasts,
each a third of a file long.
"""

from secretcache import Association, SystemParams, simulate

params = SystemParams.from_memory(8, 8, 4, 8, file_bits=3000)
assoc = Association.from_groups([[1, 2, 3], [4, 5], [6, 7], [8]])
run = simulate(params, assoc, seed=2024)

print("per round:", run.transcript.per_round())
print("rate:", run.transcript.rate, "=", float(run.transcript.rate))

for k in (1, 3, 6, 8):
    view = run.view(k)
    labels = sorted({T for (_, T) in view.shares})
    keys = [(kid.users, kid.multiplicity) for kid in view.keys]
    print(f"user {k}: cache {view.cache} shares {labels} keys {keys}")

assert all(run.decode_all().values())

# the transcript is plain text and round-trips
from secretcache import Transcript

text = run.transcript.dumps()
print(text.splitlines()[6][:60], "...")
assert Transcript.loads(text).dumps() == text
