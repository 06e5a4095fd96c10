"""Relative-error oracle in 50-digit decimal arithmetic.

Prints the case table frozen into tests/acceptance.cpp.
"""
from decimal import Decimal, getcontext

getcontext().prec = 50
OFFSET = Decimal("1e-100")

CASES = [
    (["1", "2", "3"], ["1", "2", "3"]),
    (["0", "0"], ["0", "0"]),
    (["0", "0", "0"], ["3e-112", "4e-112", "0"]),
    (["1", "2"], ["0", "0"]),
    (["1", "0"], ["1.000001", "0"]),
    (["3", "4"], ["3", "5"]),
    (["1", "1", "1", "1"], ["2", "2", "2", "2"]),
    (["1", "-1"], ["-1", "1"]),
    (["10"], ["13"]),
    (["1e-3", "2e-3"], ["1.1e-3", "2e-3"]),
    (["1e10", "1e10"], ["10000000001", "1e10"]),
    (["2.5", "-1.5", "0.5"], ["2.4", "-1.6", "0.45"]),
    (["100", "200", "300"], ["101", "198", "303"]),
    (["1"], ["-1"]),
    (["5", "12"], ["0", "0"]),
    (["1", "2", "3", "4", "5"], ["1", "2", "3", "4", "6"]),
    (["0.1", "0.2", "0.3"], ["0.1", "0.2", "0.3000000003"]),
    (["7"], ["7.00000007"]),
    (["1e-50", "2e-50"], ["2e-50", "4e-50"]),
    (["6.02214076e23", "1.380649e-23"], ["6.022140766022140760e23", "1.380649e-23"]),
]


def norm(v):
    return sum(x * x for x in v).sqrt()


for orig, pred in CASES:
    o = [Decimal(x) for x in orig]
    p = [Decimal(x) for x in pred]
    d = norm([a - b for a, b in zip(o, p)]) / (norm(o) + OFFSET)
    print("{%s}, {%s}, %.17e" % (", ".join(orig), ", ".join(pred), d))
