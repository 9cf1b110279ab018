"""The sparsity functional kappa_L and the support depth.

For an entry ``(x, y)`` and budget ``p``,

    A(x, y, p) = sum over k <= p and compositions l_1 + ... + l_k = p,
                 each part at most the depth cap, of prod_t (B^l_t)[x, y]

and ``kappa_L = max_{p <= L, x, y} A(x, y, p) ** (1 / p)``. Parts may be zero
by default (weak compositions); ``strict=True`` requires every part >= 1.
The sum is evaluated per entry by a knapsack-style recursion over the
number of parts, vectorised across all supported entries at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .matcore import zero_one_norm_star
from .moments import matrix_powers

UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class KappaResult:
    kappa_L: float
    L: int
    support_depth: float | str
    argmax: tuple[int, int, int] | None
    strict: bool = False


def support_depth(B):
    """``ln(n) / (6 ln d*)``, or ``UNBOUNDED`` when ``d* <= 1``."""
    if B.n <= 1:
        raise ValidationError("support depth needs n >= 2")
    d = zero_one_norm_star(B)
    if d <= 1:
        return UNBOUNDED
    return math.log(B.n) / (6.0 * math.log(d))


def part_cap(depth, L):
    if depth == UNBOUNDED:
        return L
    # tolerate rounding in exact-log cases such as n = d**6
    return min(L, int(math.floor(depth + 1e-12)))


def _entry_values(B, cap):
    """Stack ``(B^l)[x, y]`` for ``l = 0..cap`` over entries where any is nonzero."""
    powers = matrix_powers(B, cap)
    support = abs(powers[0])
    for p in powers[1:]:
        support = support + abs(p)
    xs, ys = support.nonzero()
    order = np.lexsort((ys, xs))
    xs, ys = xs[order], ys[order]
    e = np.stack([np.asarray(p[xs, ys], dtype=float).ravel() for p in powers])
    return xs, ys, e


def composition_sums(e, L, strict=False):
    """``A[p]`` for ``p = 0..L`` given part weights ``e[l]`` (any trailing shape).

    ``G[k][p]`` sums the products over compositions of ``p`` into ``k`` parts;
    ``A[p] = sum_{k=1..p} G[k][p]``. ``A[0]`` is left at zero.
    """
    cap = e.shape[0] - 1
    shape = e.shape[1:]
    lo = 1 if strict else 0
    G = np.zeros((L + 1,) + shape)
    G[0] = 1.0
    A = np.zeros((L + 1,) + shape)
    for k in range(1, L + 1):
        nxt = np.zeros_like(G)
        for p in range(L + 1):
            for lam in range(lo, min(p, cap) + 1):
                nxt[p] += e[lam] * G[p - lam]
        G = nxt
        # only p >= k counts towards A
        A[k:] += G[k:]
    return A


def kappa_L(B, L, strict=False, max_part=None):
    """Max over ``p <= L`` and entries of ``A(x, y, p) ** (1/p)``.

    Parts are capped at ``floor(support_depth(B))``; ``max_part`` replaces
    that cap, which is mostly useful for exercising small matrices whose
    depth floors to zero.
    """
    if L < 1:
        raise ValidationError("L must be at least 1")
    depth = support_depth(B)
    cap = part_cap(depth, L) if max_part is None else min(L, max_part)
    if B.nnz == 0 or (strict and cap < 1):
        return KappaResult(0.0, L, depth, None, strict)
    xs, ys, e = _entry_values(B, cap)
    if len(xs) == 0:
        return KappaResult(0.0, L, depth, None, strict)
    A = composition_sums(e, L, strict)
    best, arg = 0.0, None
    for p in range(1, L + 1):
        i = int(np.argmax(A[p]))
        val = float(A[p][i]) ** (1.0 / p)
        if val > best:
            best, arg = val, (p, int(xs[i]), int(ys[i]))
    return KappaResult(best, L, depth, arg, strict)


def kappa(B, L_cap, strict=False, max_part=None):
    """Finite-budget stand-in for ``sup_L kappa_L``; monotone in ``L_cap``."""
    return kappa_L(B, L_cap, strict, max_part)
