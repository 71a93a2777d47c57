# Copyright 2026 The mabe-lab Authors
# SPDX-License-Identifier: Apache-2.0
#
# High-precision reference values frozen into the C++ unit tests.
# Run: python3 tests/oracles/compute_oracles.py
from mpmath import mp, mpf, exp, log, findroot

mp.dps = 40


def softmax(q):
    m = max(q)
    e = [exp(v - m) for v in q]
    s = sum(e)
    return [v / s for v in e]


def dual(q):
    p = softmax(q)
    eq = sum(a * b for a, b in zip(p, q))
    factors = [1 + v - eq for v in q]
    raw = [a * f for a, f in zip(p, factors)]
    clipped = [min(max(r, 0), 1) for r in raw]
    z = sum(clipped)
    return [c / z for c in clipped], factors, z, sum(raw)


def gap(undesired):
    # single desired action at q=0, `undesired` tokens tied at u = EQ - 1
    f = lambda u: u + 1 + undesired * exp(u)
    lo, hi = mpf(-10), mpf(0)
    for _ in range(200):
        mid = (lo + hi) / 2
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return -(lo + hi) / 2


q10 = [mpf(1), mpf(0)]
p = softmax(q10)
eq = p[0]
print("softmax(1,0)", p)
print("lse(1,0)", log(1 + exp(1)))
print("expected_q", eq)
print("dual(1,0)", dual(q10))
print("dual(3,0)", dual([mpf(3), mpf(0)]))
print("mle(1,0,y=0)", [1 - p[0], -p[1]])
cov = [p[0] * (1 - eq), p[1] * (0 - eq)]
print("cov(1,0)", cov)
print("mabe lambda=0", [1 - p[0] - cov[0], -p[1] - cov[1]])
print("mabe lambda=2", [1 - p[0] + cov[0], -p[1] + cov[1]])
print("softmax(2,0)", softmax([mpf(2), mpf(0)]))
for m in (1, 2, 3):
    g = gap(m)
    eu = exp(-g)
    print(f"gap undesired={m}", g, "p*", [1 / (1 + m * eu), eu / (1 + m * eu)], "J*", g - 1)
print("3 ln(1/4)", 3 * log(mpf(1) / 4))
