"""Slow, independent reference computations used to check the fast paths."""

import itertools
import math

import numpy as np


def weak_compositions(total, parts, max_part=None):
    """All tuples of ``parts`` nonnegative ints summing to ``total``."""
    hi = total if max_part is None else min(total, max_part)
    for c in itertools.product(range(hi + 1), repeat=parts):
        if sum(c) == total:
            yield c


def tau_direct(Q, a, b):
    Qa = np.linalg.matrix_power(Q, a)
    Qb = np.linalg.matrix_power(Q, b)
    return float(np.trace(Qa @ Qb.T)) / Q.shape[0]


def phi_enumerate(Q, l1, l2):
    """Sum over T and composition pairs with ``sum + T - 1 = l``."""
    total = 0.0
    for T in range(1, min(l1, l2) + 2):
        for a in weak_compositions(l1 - T + 1, T):
            for b in weak_compositions(l2 - T + 1, T):
                total += math.prod(tau_direct(Q, x, y) for x, y in zip(a, b))
    return total


def kappa_enumerate(B, L, strict=False, max_part=None):
    """Max over p <= L and entries of the composition sum, to the power 1/p."""
    n = B.shape[0]
    d = max(int((B != 0).sum(axis=1).max()), int((B != 0).sum(axis=0).max()))
    if max_part is not None:
        cap = min(L, max_part)
    else:
        cap = L if d <= 1 else min(L, math.floor(math.log(n) / (6 * math.log(d)) + 1e-12))
    powers = [np.linalg.matrix_power(B, k) for k in range(cap + 1)]
    best = 0.0
    for p in range(1, L + 1):
        for x in range(n):
            for y in range(n):
                A = 0.0
                for k in range(1, p + 1):
                    for lam in itertools.product(range(cap + 1), repeat=k):
                        if sum(lam) != p or (strict and min(lam) == 0):
                            continue
                        A += math.prod(powers[t][x, y] for t in lam)
                if A > 0:
                    best = max(best, A ** (1.0 / p))
    return best


def random_regular_dense(rng, n, d=None):
    """Nonnegative delta-regular matrix: a random positive mix of permutation matrices."""
    d = d or int(rng.integers(1, 4))
    Q = np.zeros((n, n))
    for w in rng.random(d) + 0.1:
        Q[np.arange(n), rng.permutation(n)] += w
    return Q
