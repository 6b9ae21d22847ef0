"""Turn a cumulative-function expression into signed tasks."""

from gencumul import Engine, flatten, make_interval, pulse, step, step_at_end, step_at_start

eng = Engine()
a = make_interval(eng, (0, 4), (2, 3), (2, 7), name="A")
b = make_interval(eng, (1, 5), (2, 2), (3, 7), name="B")
c = make_interval(eng, (0, 3), (1, 4), (1, 7), name="C")

f = step_at_start(a, 2) - (pulse(b, 1) + step_at_end(c, 1)) + step(3, 4)
for t in flatten(f, eng, horizon=20):
    iv = t.iv
    print(f"{iv.name or '?':>6}: s=[{iv.s_min},{iv.s_max}] e=[{iv.e_min},{iv.e_max}] c=[{t.c.lo},{t.c.hi}]")

# steps become tasks that run until the horizon and share the start variable
print("\nA' shares A.start:", flatten(step_at_start(a, 2), eng, 20)[0].iv.start is a.start)
