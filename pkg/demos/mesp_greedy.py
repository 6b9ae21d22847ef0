"""Greedy first-solution search on generated energy-maximisation instances.

Usage: python demos/mesp_greedy.py [n ...]
"""

import sys
import time

from gencumul import build_mesp, check_solution, generate_mesp

sizes = [int(a) for a in sys.argv[1:]] or [6, 50, 400]
for n in sizes:
    for seed in range(3):
        inst = generate_mesp(n, seed)
        t0 = time.perf_counter()
        stats, sol = build_mesp(inst).solve()
        secs = time.perf_counter() - t0
        violations, energy = check_solution("mesp", inst, sol)
        used = sum(sol["present"])
        print(f"n={n:5} seed={seed}  energy={energy:6}  present={used:5}  "
              f"backtracks={stats.backtracks:3}  valid={not violations}  {secs:.2f} s")
