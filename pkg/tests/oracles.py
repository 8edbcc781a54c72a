"""Brute-force reference implementations used by the unit and acceptance tests."""

import itertools
import math
from fractions import Fraction

import numpy as np


def exact_tails(n, s, p):
    """P[Bin(n, p) >= s] and P[Bin(n, p) <= s] for a rational ``p``, summed exactly."""
    q = 1 - p
    pmf = [math.comb(n, i) * p**i * q ** (n - i) for i in range(n + 1)]
    return float(sum(pmf[s:])), float(sum(pmf[: s + 1]))


def auc_oracle(proba, y):
    pos = [p for p, t in zip(proba, y) if t == 1]
    neg = [p for p, t in zip(proba, y) if t == 0]
    wins = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a in pos for b in neg)
    return wins / (len(pos) * len(neg))


def sign(x):
    return (x > 0) - (x < 0)


def average_ranks(x):
    return [sum(v < xi for v in x) + (sum(v == xi for v in x) + 1) / 2 for xi in x]


def spearman_oracle(a, b):
    ra, rb = average_ranks(a), average_ranks(b)
    ma, mb = sum(ra) / len(ra), sum(rb) / len(rb)
    cov = sum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    return cov / math.sqrt(sum((x - ma) ** 2 for x in ra) * sum((y - mb) ** 2 for y in rb))


def kendall_oracle(a, b):
    pairs = list(itertools.combinations(range(len(a)), 2))
    s = sum(sign(a[i] - a[j]) * sign(b[i] - b[j]) for i, j in pairs)
    ta = sum(a[i] != a[j] for i, j in pairs)
    tb = sum(b[i] != b[j] for i, j in pairs)
    return s / math.sqrt(ta * tb)


def weighted_oracle(a, b):
    # zero-based position of each element when a is sorted descending (ties keep input order)
    order = sorted(range(len(a)), key=lambda i: (-a[i], i))
    r = {i: pos for pos, i in enumerate(order)}
    pairs = list(itertools.combinations(range(len(a)), 2))
    w = {(i, j): 1 / (1 + r[i]) + 1 / (1 + r[j]) for i, j in pairs}
    s = sum(w[p] * sign(a[p[0]] - a[p[1]]) * sign(b[p[0]] - b[p[1]]) for p in pairs)
    ta = sum(w[p] for p in pairs if a[p[0]] != a[p[1]])
    tb = sum(w[p] for p in pairs if b[p[0]] != b[p[1]])
    return s / math.sqrt(ta * tb)


def sorted_pairing(a, b):
    return float(np.mean(np.abs(np.sort(a) - np.sort(b))))


def mmd_oracle(x, y):
    pooled = list(x) + list(y)
    dists = [abs(p - q) for p, q in itertools.combinations(pooled, 2)]
    sigma = float(np.median(dists))
    k = lambda p, q: math.exp(-((p - q) ** 2) / (2 * sigma**2))  # noqa: E731
    kxx = sum(k(p, q) for p in x for q in x) / len(x) ** 2
    kyy = sum(k(p, q) for p in y for q in y) / len(y) ** 2
    kxy = sum(k(p, q) for p in x for q in y) / (len(x) * len(y))
    return math.sqrt(max(kxx + kyy - 2 * kxy, 0.0))


def ecdf_oracle(a, b):
    """sup |F_a - F_b| by direct counting at every observed point, in exact arithmetic."""
    best = Fraction(0)
    for t in list(a) + list(b):
        fa = Fraction(sum(x <= t for x in a), len(a))
        fb = Fraction(sum(x <= t for x in b), len(b))
        best = max(best, abs(fa - fb))
    return float(best)
