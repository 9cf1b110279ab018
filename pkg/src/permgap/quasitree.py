"""Lazy simulation of the random quasi-tree realising ``u`` and ``q``.

Vertices are tuples ``(k0, e1, k1, ..., en, kn)`` with signs ``e = +1`` (a
``u`` move) or ``-1`` (a ``u*`` move). Dropping the last index gives the key
of the copy of ``range(n)`` the vertex lives in; the root copy has key
``()``. Every copy/sign pair owns a uniform permutation ``j`` drawn on first
use: ``j(v, e)`` is the vertex of the child copy ``v + (e,)`` that is glued
to ``v``.

``u`` moves a vertex to its glued child, except when the vertex is itself
the glued point of a ``u*`` child, in which case ``u`` returns to the
parent. ``u*`` is the mirror image. ``q`` acts as ``Q`` on the last index.
Vectors are plain dicts ``vertex -> amplitude``; words are applied right to
left, like operator composition.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import RangeError, ValidationError
from .matcore import SparseMatrix, make_rng

LETTERS = "uUqQpP"
_ADJOINT = str.maketrans("uUqQpP", "UuQqPp")
_TOKEN = re.compile(r"\s*([uUqQpP])\s*(?:\^?\s*(\d+))?")

DEFAULT_MAX_SUPPORT = 2_000_000


def parse_word(text):
    """``"p3 P3"`` or ``"p^3P^3"`` -> ``"pppPPP"``."""
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValidationError(f"bad word at position {pos}: {text!r}")
        out.append(m.group(1) * int(m.group(2) or 1))
        pos = m.end()
    return "".join(out)


def adjoint_word(word):
    return word[::-1].translate(_ADJOINT)


def depth(v):
    return (len(v) - 1) // 2


def inner(a, b):
    if len(a) > len(b):
        a, b = b, a
    return sum(x * b.get(v, 0.0) for v, x in a.items())


def norm(a):
    return math.sqrt(sum(x * x for x in a.values()))


def root_vector(k):
    return {(k,): 1.0}


class LazyPermutationStore:
    """``(copy key, sign) -> permutation``, drawn from ``rng`` on first touch."""

    def __init__(self, n, rng):
        self.n = n
        self.rng = rng
        self.perms = {}

    def perm(self, copy_key, eps):
        key = (copy_key, eps)
        p = self.perms.get(key)
        if p is None:
            p = self.perms[key] = self.rng.permutation(self.n).tolist()
        return p

    def j(self, v, eps):
        return self.perm(v[:-1], eps)[v[-1]]

    def __len__(self):
        return len(self.perms)


def _columns(B):
    """``cols[k] = [(k', B[k', k]), ...]`` so that ``B e_k = sum B[k', k] e_k'``."""
    if not isinstance(B, SparseMatrix):
        # coefficients need not be nonnegative here
        a = np.asarray(B, dtype=float)
        r, c = np.nonzero(a)
        B = SparseMatrix.from_triplets(a.shape[0], r, c, a[r, c], allow_negative=True)
    cols = [[] for _ in range(B.n)]
    for r, c, x in zip(B.rows.tolist(), B.cols.tolist(), B.vals.tolist()):
        cols[c].append((r, x))
    return cols


class Simulator:
    """One random quasi-tree over ``Q`` plus Monte Carlo estimators.

    The store is reset per trial; trial ``t`` draws from the ``t``-th child of
    ``SeedSequence(seed)`` so results do not depend on evaluation order.
    """

    def __init__(self, Q, seed=0, max_support=DEFAULT_MAX_SUPPORT):
        if Q.n < 1:
            raise ValidationError("Q must have n >= 1")
        self.Q = Q
        self.n = Q.n
        self.seed = seed
        self.max_support = max_support
        self._cols = {"q": _columns(Q), "Q": _columns(Q.transpose())}
        self.store = LazyPermutationStore(self.n, make_rng(seed))

    def reset(self, rng):
        self.store = LazyPermutationStore(self.n, rng)

    # operators

    def apply_u(self, vec, eps=1):
        j = self.store.j
        out = {}
        for v, a in vec.items():
            if len(v) > 1 and v[-2] != eps and v[-1] == j(v[:-2], -eps):
                w = v[:-2]
            else:
                w = v + (eps, j(v, eps))
            out[w] = out.get(w, 0.0) + a
        return out

    def apply_u_star(self, vec):
        return self.apply_u(vec, -1)

    def apply_matrix(self, vec, B, out=None):
        cols = B if isinstance(B, list) else _columns(B)
        out = {} if out is None else out
        for v, a in vec.items():
            head = v[:-1]
            for k2, x in cols[v[-1]]:
                w = head + (k2,)
                out[w] = out.get(w, 0.0) + x * a
        return out

    def apply_q(self, vec):
        return self.apply_matrix(vec, self._cols["q"])

    def apply_q_star(self, vec):
        return self.apply_matrix(vec, self._cols["Q"])

    def apply_p(self, vec, adjoint=False):
        out = self.apply_u(vec, -1 if adjoint else 1)
        return self.apply_matrix(vec, self._cols["Q" if adjoint else "q"], out)

    def apply_letter(self, vec, letter):
        if isinstance(letter, (SparseMatrix, np.ndarray)):
            return self.apply_matrix(vec, letter)
        if letter == "u":
            return self.apply_u(vec, 1)
        if letter == "U":
            return self.apply_u(vec, -1)
        if letter in "qQ":
            return self.apply_matrix(vec, self._cols[letter])
        if letter == "p":
            return self.apply_p(vec)
        if letter == "P":
            return self.apply_p(vec, adjoint=True)
        raise ValidationError(f"unknown letter {letter!r}")

    def apply_word(self, vec, word):
        """Apply ``word`` (string over ``uUqQpP`` or a token list) right to left."""
        if isinstance(word, str):
            word = parse_word(word) if not set(word) <= set(LETTERS) else word
        for letter in reversed(list(word)):
            vec = self.apply_letter(vec, letter)
            if len(vec) > self.max_support:
                raise RangeError(f"vector support {len(vec)} exceeds {self.max_support}")
        return vec

    # estimators

    def _trial_rngs(self, trials):
        return [make_rng(s) for s in np.random.SeedSequence(self.seed).spawn(trials)]

    def _root_moment(self, word, alpha):
        """``<word e_alpha, e_alpha>`` via ``<R e, L* e>`` with ``word = L R``."""
        half = len(word) // 2
        left, right = word[:half], word[half:]
        e = root_vector(alpha)
        r_vec = self.apply_word(e, right)
        left_adj = adjoint_word(left)
        if left_adj == right:
            return inner(r_vec, r_vec)
        return inner(r_vec, self.apply_word(e, left_adj))

    def estimate_phi(self, word, trials, roots="sample"):
        """Monte Carlo ``Phi(word)``: mean and standard error over trials.

        ``roots="sample"`` draws one uniform root index per trial;
        ``roots="all"`` averages the exact root average within each trial,
        which removes the root-sampling noise.
        """
        if trials < 1:
            raise ValidationError("trials must be at least 1")
        if roots not in ("sample", "all"):
            raise ValidationError("roots must be 'sample' or 'all'")
        word = parse_word(word)
        vals = np.empty(trials)
        for t, rng in enumerate(self._trial_rngs(trials)):
            if roots == "sample":
                alpha = int(rng.integers(self.n))
                self.reset(rng)
                vals[t] = self._root_moment(word, alpha)
            else:
                self.reset(rng)
                vals[t] = sum(self._root_moment(word, a) for a in range(self.n)) / self.n
        mean = float(vals.mean())
        stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        return mean, stderr

    def estimate_norm_power(self, ell, trials=20, iters=2):
        """Lower estimate of ``||(u + q)^ell|| ** (1/ell)``.

        Per trial, power-iterates ``(p*)^ell p^ell`` from a random root basis
        vector on one sampled tree and keeps the best Rayleigh quotient. The
        support grows like ``(2n)^(2 ell iters)``; keep ``n`` and ``ell`` small.
        """
        if ell < 1:
            raise ValidationError("ell must be at least 1")
        if trials < 1 or iters < 1:
            raise ValidationError("trials and iters must be at least 1")
        fwd, bwd = "p" * ell, "P" * ell
        best = 0.0
        for rng in self._trial_rngs(trials):
            alpha = int(rng.integers(self.n))
            self.reset(rng)
            v = root_vector(alpha)
            for it in range(iters):
                w = self.apply_word(v, fwd)
                nv2 = inner(v, v)
                best = max(best, (inner(w, w) / nv2) ** (1.0 / (2 * ell)))
                if it + 1 < iters:
                    v = self.apply_word(w, bwd)
                    nv = norm(v)
                    if nv == 0.0:
                        break
                    v = {k: x / nv for k, x in v.items()}
        return best
