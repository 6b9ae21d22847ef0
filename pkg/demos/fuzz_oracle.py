"""Differential test of the propagator against brute-force enumeration.

Each trial draws a few tasks with small domains, enumerates every placement
that satisfies the capacity at every time point, and checks that the
propagator neither removed one of them nor failed while one exists.
"""

import sys

from gencumul.oracle import differential_test

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
trials = int(sys.argv[2]) if len(sys.argv) > 2 else 2000

cex, stats = differential_test(seed, trials)
print(stats)
if cex is None:
    print("no counterexample")
else:
    print(cex.to_text())
