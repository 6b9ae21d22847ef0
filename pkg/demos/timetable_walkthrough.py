"""Build the profile of three tasks, then run one timetabling pass.

A and B are required, C is optional and may have a negative height. The
resource must stay in [0, 1] wherever some task runs.
"""

from gencumul import Engine, initialize_timeline, make_interval, timetable_filter
from gencumul.cumul import CumulTask


def task(eng, name, s, d, e, c, optional=False):
    iv = make_interval(eng, s, d, e, optional=optional, name=name)
    return CumulTask(iv, eng.int_var(*c, name=f"{name}.c"))


def show(tasks):
    for t in tasks:
        iv = t.iv
        p = {True: "present", False: "absent", None: "optional"}[iv.presence.value]
        print(f"  {iv.name}: {p:8} s=[{iv.s_min},{iv.s_max}] d=[{iv.d_min},{iv.d_max}] "
              f"e=[{iv.e_min},{iv.e_max}] c=[{t.c.lo},{t.c.hi}]")


eng = Engine()
tasks = [
    task(eng, "A", (0, 1), (3, 4), (3, 4), (1, 2)),
    task(eng, "B", (2, 4), (3, 4), (5, 7), (2, 2)),
    task(eng, "C", (3, 8), (1, 3), (4, 9), (-2, 1), optional=True),
]
eng.fixpoint()
print("before:")
show(tasks)

print("\ntimeline (time, Pmin, Pmax, #fixed parts):")
for row in initialize_timeline(tasks, 0, 1).as_tuples():
    print(" ", row)

# B is fixed on [4,5) with height 2, so something negative has to be there
timetable_filter(tasks, 0, 1)
eng.fixpoint()
print("\nafter one pass:")
show(tasks)
