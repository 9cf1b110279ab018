"""Trace table and the composition recursion for Phi(p^l1 (p*)^l2).

With ``p = u + q`` (``u`` a Haar unitary free from ``q`` over the
diagonal, ``q`` a copy of ``Q``), expanding both powers into words
``q^a1 u q^a2 ... u q^aT`` and pairing matching positions gives

    F(l1, l2) = sum_T sum_{a in C(T, l1), b in C(T, l2)} prod_t tau(a_t, b_t)

where ``C(T, l)`` holds the weak compositions ``(a_1..a_T)`` with
``sum(a) + T - 1 = l`` and ``tau(a, b) = Tr_N(Q^a (Q^T)^b)``. T runs up to
``min(l1, l2) + 1``; the top term is the pure ``u^l`` word. Splitting off the
first block gives the recursion used here:

    F(m, n) = tau(m, n) + sum_{a<m, b<n} tau(a, b) F(m-a-1, n-b-1),  F(0, 0) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import RangeError, ValidationError
from .matcore import DENSE_CAP, rescale_for_convex

MAGNITUDE_CAP = 1e150


@dataclass(frozen=True, eq=False)
class TraceTable:
    l_max: int
    tau: np.ndarray
    n: int


@dataclass(frozen=True, eq=False)
class MomentTable:
    L: int
    F: np.ndarray

    def rho(self, l1, l2):
        """``F(l1, l2) ** (1 / (l1 + l2))``."""
        if l1 + l2 == 0:
            return 1.0
        return float(self.F[l1, l2] ** (1.0 / (l1 + l2)))


def matrix_powers(Q, l_max, cap=MAGNITUDE_CAP):
    """``[Q^0, ..., Q^l_max]``, dense up to ``DENSE_CAP`` and CSR above it."""
    if Q.n <= DENSE_CAP:
        A = Q.to_dense()
        cur = np.eye(Q.n)
    else:
        A = Q.to_csr()
        cur = sp.identity(Q.n, format="csr")
    powers = [cur]
    for a in range(1, l_max + 1):
        cur = cur @ A
        top = float(np.max(np.abs(cur.data if sp.issparse(cur) else cur), initial=0.0))
        if top > cap:
            raise RangeError(f"max entry of Q^{a} is {top:.3g}, above cap {cap:.3g}")
        powers.append(cur)
    return powers


def trace_table(Q, l_max, cap=MAGNITUDE_CAP):
    """``tau[a, b] = <Q^a, Q^b>_F / n`` for ``0 <= a, b <= l_max``."""
    if l_max < 0:
        raise ValidationError("l_max must be nonnegative")
    if Q.n == 0:
        raise ValidationError("empty matrix")
    powers = matrix_powers(Q, l_max, cap)
    tau = np.empty((l_max + 1, l_max + 1))
    for a in range(l_max + 1):
        for b in range(a, l_max + 1):
            pa, pb = powers[a], powers[b]
            if sp.issparse(pa):
                val = float(pa.multiply(pb).sum())
            else:
                val = float(np.vdot(pa, pb))
            tau[a, b] = tau[b, a] = val / Q.n
    tau.setflags(write=False)
    return TraceTable(l_max, tau, Q.n)


def phi_moment_table(tau, L):
    """All ``F(l1, l2)`` for ``l1, l2 <= L`` by the first-block recursion."""
    if L < 0:
        raise ValidationError("L must be nonnegative")
    if L > tau.l_max:
        raise ValidationError(f"L={L} exceeds trace table depth {tau.l_max}")
    t = tau.tau
    F = np.zeros((L + 1, L + 1))
    F[0, 0] = 1.0
    # tau is symmetric, so fill m <= n and mirror to keep F exactly symmetric
    for m in range(L + 1):
        for n in range(max(m, 1), L + 1):
            acc = t[m, n]
            if m:
                # F[m-1-a, n-1-b] for a < m, b < n is F[:m, :n] flipped on both axes
                acc += float(np.sum(t[:m, :n] * F[m - 1 :: -1, n - 1 :: -1]))
            F[m, n] = F[n, m] = acc
    F.setflags(write=False)
    return MomentTable(L, F)


def rho_ell(Q, ell):
    """Trace proxy ``F(ell, ell) ** (1 / 2 ell)`` for the norm of ``(u + q)^ell``."""
    if ell < 1:
        raise ValidationError("ell must be at least 1")
    F = phi_moment_table(trace_table(Q, ell), ell)
    return F.rho(ell, ell)


def rho_ell_convex(Q, r, ell):
    """Proxy for the norm term of ``(1 - r) u + r q`` via ``(1 - r)(u + q')``."""
    return (1.0 - r) * rho_ell(rescale_for_convex(Q, r), ell)
