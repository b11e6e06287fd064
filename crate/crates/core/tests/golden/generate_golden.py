"""Regenerates constants.json with mpmath at 40 significant digits.

gamma: Euler-Maclaurin on g(x) = (ln x)^d / x with N = 200 and eight Bernoulli
corrections, checked against mpmath's Stieltjes constants for d in {0, 1}.
eta (+-1 walk): the same Euler-Maclaurin scheme over m for (log 2m)^d / (2m) * C(2m, m) / 4^m.

The "paper" logarithm is ln(max(n, e)); it only changes the n = 1, 2 terms.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40


def gamma_pure(d):
    d = mp.mpf(d)
    g = lambda x: mp.log(x) ** d / x if x > 1 else (mp.mpf(1) if d == 0 else mp.mpf(0))
    n = 200
    head = mp.fsum(g(mp.mpf(j)) for j in range(1, n))
    integral = mp.log(n) ** (d + 1) / (d + 1)
    em = head + g(mp.mpf(n)) / 2 - integral
    for k in range(1, 9):
        em -= mp.bernoulli(2 * k) / mp.factorial(2 * k) * mp.diff(g, n, 2 * k - 1)
    return em


def weight_shift(d, conv):
    if conv == "pure-ln":
        return mp.mpf(0)
    d = mp.mpf(d)
    zero_pow = mp.mpf(1) if d == 0 else mp.mpf(0)
    return (1 - zero_pow) + (1 - mp.log(2) ** d) / 2


def eta_rademacher_pure(d):
    d = mp.mpf(d)
    f = lambda m: mp.log(2 * m) ** d / (2 * m) * mp.gamma(m + mp.mpf(1) / 2) / (mp.sqrt(mp.pi) * mp.gamma(m + 1))
    n = 200
    em = mp.fsum(f(mp.mpf(m)) for m in range(1, n)) + f(mp.mpf(n)) / 2 + mp.quad(f, [n, 10 * n, 100 * n, 10**4 * n, mp.inf])
    for k in range(1, 9):
        em -= mp.bernoulli(2 * k) / mp.factorial(2 * k) * mp.diff(f, n, 2 * k - 1)
    return em


def main():
    assert abs(gamma_pure(0) - mp.euler) < mp.mpf(10) ** -30
    assert abs(gamma_pure(1) - mp.stieltjes(1)) < mp.mpf(10) ** -30
    assert abs(eta_rademacher_pure(0) - mp.log(2)) < mp.mpf(10) ** -20
    out = {"gamma": [], "eta_rademacher": []}
    for conv in ("paper", "pure-ln"):
        for d in (0, 0.5, 1):
            v = gamma_pure(d) + weight_shift(d, conv)
            out["gamma"].append({"delta": d, "convention": conv, "value": mp.nstr(v, 25)})
        for d in (0, 1):
            # Only n = 2 is affected: the return probability there is 1/2.
            v = eta_rademacher_pure(d)
            if conv == "paper" and d != 0:
                v += (1 - mp.log(2) ** d) / 2 * mp.mpf(1) / 2
            out["eta_rademacher"].append({"delta": d, "convention": conv, "value": mp.nstr(v, 25)})
    path = Path(__file__).with_name("constants.json")
    path.write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main()
