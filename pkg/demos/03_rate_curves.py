"""
Rate against memory
===================

N = K = 30 users on six caches.  The uniform profile is compared with a
skewed one, with and without the secrecy requirement.  Memory on the x axis
is helper-cache size plus the one unit of keys every user keeps.
"""

from fractions import Fraction

import numpy as np

from secretcache.analysis import rate_envelope, rate_nonsecret_reference, rate_points

N, caches = 30, 6
profiles = {"uniform": (5, 5, 5, 5, 5, 5), "skewed": (13, 8, 4, 2, 2, 1)}

for name, L in profiles.items():
    print(name)
    for p in rate_points(L, caches, N):
        rn = rate_nonsecret_reference(L, caches, p.t)
        print(f"  t={p.t}  M+1={float(p.M + 1):7.2f}  secret={float(p.rate):6.3f}  plain={float(rn):6.3f}")

# memory sharing between integer points
grid = np.linspace(0, N * (caches - 1), 9)
env = [rate_envelope(profiles["skewed"], caches, N, Fraction(x).limit_denominator()) for x in grid]
print("envelope:", [round(float(r), 3) for r in env])

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    for name, L in profiles.items():
        pts = rate_points(L, caches, N)
        plt.plot([float(p.M + 1) for p in pts], [float(p.rate) for p in pts], "o-", label=name)
    plt.xlabel("M + 1")
    plt.ylabel("rate (files)")
    plt.legend()
    plt.savefig("rate_curves.png")
