"""Sparse matrix and permutation primitives.

Indices are 0-based everywhere in memory. Matrix Market files on disk are
1-based, as the format requires; permutation files store 0-based images,
one per line.

Matrices are real and entrywise nonnegative, so the adjoint is the
transpose.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import ValidationError

DENSE_CAP = 2048
DEFAULT_TOL = 1e-9


def make_rng(seed):
    """Return the package RNG: numpy's PCG64 ``Generator``.

    ``seed`` may be an int, a ``SeedSequence`` or an existing generator.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square nonnegative matrix stored as canonical coordinate triplets.

    Build through :meth:`from_triplets` or :meth:`from_dense`; both sort by
    (row, col), merge duplicates and drop explicit zeros.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @classmethod
    def from_triplets(cls, n, rows, cols, vals, *, allow_negative=False):
        n = int(n)
        if n < 0:
            raise ValidationError(f"dimension must be nonnegative, got {n}")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=float).ravel()
        if not (len(rows) == len(cols) == len(vals)):
            raise ValidationError("rows, cols and vals must have equal length")
        if len(rows) and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
            raise ValidationError(f"index out of range for dimension {n}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("matrix entries must be finite")
        if not allow_negative and np.any(vals < 0):
            raise ValidationError("matrix entries must be nonnegative")
        coo = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
        coo.sum_duplicates()
        keep = coo.data != 0
        order = np.lexsort((coo.col[keep], coo.row[keep]))
        return cls(
            n,
            _frozen(coo.row[keep][order], np.int64),
            _frozen(coo.col[keep][order], np.int64),
            _frozen(coo.data[keep][order], float),
        )

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {a.shape}")
        r, c = np.nonzero(a)
        return cls.from_triplets(a.shape[0], r, c, a[r, c])

    @classmethod
    def from_scipy(cls, m):
        m = sp.coo_matrix(m)
        if m.shape[0] != m.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {m.shape}")
        return cls.from_triplets(m.shape[0], m.row, m.col, m.data)

    @classmethod
    def zeros(cls, n):
        return cls.from_triplets(n, [], [], [])

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls.from_triplets(n, idx, idx, np.ones(n))

    @property
    def nnz(self):
        return len(self.vals)

    def to_dense(self):
        a = np.zeros((self.n, self.n))
        a[self.rows, self.cols] = self.vals
        return a

    def to_csr(self):
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.n, self.n))

    def transpose(self):
        return SparseMatrix.from_triplets(self.n, self.cols, self.rows, self.vals)

    T = property(transpose)

    def scaled(self, c):
        if c < 0:
            raise ValidationError("scale factor must be nonnegative")
        return SparseMatrix.from_triplets(self.n, self.rows, self.cols, self.vals * c)

    def row_sums(self):
        return np.bincount(self.rows, weights=self.vals, minlength=self.n)

    def col_sums(self):
        return np.bincount(self.cols, weights=self.vals, minlength=self.n)

    def __add__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        if other.n != self.n:
            raise ValidationError(f"dimension mismatch: {self.n} vs {other.n}")
        return SparseMatrix.from_triplets(
            self.n,
            np.concatenate([self.rows, other.rows]),
            np.concatenate([self.cols, other.cols]),
            np.concatenate([self.vals, other.vals]),
        )

    def same_as(self, other):
        """Exact structural and numerical equality."""
        return (
            self.n == other.n
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.vals, other.vals)
        )

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz})"


@dataclass(frozen=True, eq=False)
class Permutation:
    """Bijection ``x -> map[x]`` on ``range(n)``."""

    n: int
    map: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.map, dtype=np.int64)
        if m.shape != (self.n,) or not np.array_equal(np.sort(m), np.arange(self.n)):
            raise ValidationError("map is not a bijection on range(n)")
        object.__setattr__(self, "map", _frozen(m, np.int64))

    @classmethod
    def identity(cls, n):
        return cls(n, np.arange(n))

    def matrix(self):
        """Permutation matrix with ``M[x, y] = 1`` iff ``map[x] == y``."""
        return SparseMatrix.from_triplets(self.n, np.arange(self.n), self.map, np.ones(self.n))

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.map, other.map)

    def __hash__(self):
        return hash(self.map.tobytes())

    def __repr__(self):
        return f"Permutation({self.map.tolist()})"


@dataclass(frozen=True)
class RegularityReport:
    is_regular: bool
    delta: float
    max_row_dev: float
    max_col_dev: float


def validate_regular(Q, tol=DEFAULT_TOL):
    """Check that all row and column sums of ``Q`` agree.

    ``delta`` is the mean row sum. For a bistochastic matrix it is 1.
    """
    if Q.n == 0:
        raise ValidationError("empty matrix")
    if tol < 0:
        raise ValidationError("tolerance must be nonnegative")
    rs, cs = Q.row_sums(), Q.col_sums()
    delta = float(rs.mean())
    row_dev = float(np.max(np.abs(rs - delta)))
    col_dev = float(np.max(np.abs(cs - delta)))
    return RegularityReport(max(row_dev, col_dev) <= tol, delta, row_dev, col_dev)


def sample_permutation(n, seed):
    """Uniform permutation of ``range(n)``.

    numpy's ``Generator.permutation`` is a Fisher-Yates shuffle, so the law
    is exactly uniform over S_n given an unbiased bit stream.
    """
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    return Permutation(n, make_rng(seed).permutation(n))


def inf_norm_star(B):
    """max of the largest absolute row sum and the largest absolute column sum."""
    if B.n == 0:
        return 0.0
    a = np.abs(B.vals)
    rs = np.bincount(B.rows, weights=a, minlength=B.n)
    cs = np.bincount(B.cols, weights=a, minlength=B.n)
    return float(max(rs.max(), cs.max()))


def zero_one_norm_star(B):
    """Largest number of nonzeros in any row or column."""
    if B.n == 0:
        return 0
    rc = np.bincount(B.rows, minlength=B.n)
    cc = np.bincount(B.cols, minlength=B.n)
    return int(max(rc.max(), cc.max()))


def perfect_matching(n, s):
    """The involution ``S U S^T`` with ``U`` the block-diagonal swap matrix.

    ``S`` is the permutation matrix of ``s``; so ``x`` and ``y`` are matched
    exactly when ``s(x)`` and ``s(y)`` form a block ``{2i, 2i+1}``.
    """
    if n < 2 or n % 2:
        raise ValidationError(f"perfect matching needs an even positive n, got {n}")
    if s.n != n:
        raise ValidationError("permutation dimension does not match n")
    inv = np.empty(n, dtype=np.int64)
    inv[s.map] = np.arange(n)
    partner = inv[s.map ^ 1]
    return SparseMatrix.from_triplets(n, np.arange(n), partner, np.ones(n))


def build_P(M, Q, r):
    """``(1 - r) M + r Q`` as a sparse matrix."""
    if not 0.0 <= r <= 1.0:
        raise ValidationError(f"r must lie in [0, 1], got {r}")
    if M.n != Q.n:
        raise ValidationError(f"dimension mismatch: {M.n} vs {Q.n}")
    if r == 0.0:
        return M.matrix()
    if r == 1.0:
        return Q
    return M.matrix().scaled(1.0 - r) + Q.scaled(r)


def build_sum(M, Q):
    """Unnormalized ``M + Q``, the form used when ``Q`` is delta-regular."""
    if M.n != Q.n:
        raise ValidationError(f"dimension mismatch: {M.n} vs {Q.n}")
    return M.matrix() + Q


def rescale_for_convex(Q, r):
    """``Q' = r / (1 - r) * Q`` so that ``(1 - r) M + r Q = (1 - r)(M + Q')``."""
    if not 0.0 < r < 1.0:
        raise ValidationError(f"r must lie strictly inside (0, 1), got {r}")
    return Q.scaled(r / (1.0 - r))


# generators


def random_bistochastic(n, d, seed):
    """Average of ``d`` independent uniform permutation matrices."""
    if d < 1:
        raise ValidationError("d must be at least 1")
    rng = make_rng(seed)
    rows = np.tile(np.arange(n), d)
    cols = np.concatenate([rng.permutation(n) for _ in range(d)])
    return SparseMatrix.from_triplets(n, rows, cols, np.full(n * d, 1.0 / d))


def sinkhorn_bistochastic(n, seed, iters=500, tol=1e-14):
    """Dense bistochastic matrix by Sinkhorn scaling of uniform(0, 1) entries."""
    rng = make_rng(seed)
    a = rng.random((n, n)) + 1e-3
    for _ in range(iters):
        a /= a.sum(axis=1, keepdims=True)
        a /= a.sum(axis=0, keepdims=True)
        if np.max(np.abs(a.sum(axis=1) - 1.0)) < tol:
            break
    return SparseMatrix.from_dense(a)


def random_regular(n, d, seed, normalize=True):
    """Sum of ``d`` independent random perfect matchings (a d-regular multigraph).

    With ``normalize`` the result is divided by ``d`` and is bistochastic.
    """
    rng = make_rng(seed)
    q = SparseMatrix.zeros(n)
    for _ in range(d):
        q = q + perfect_matching(n, Permutation(n, rng.permutation(n)))
    return q.scaled(1.0 / d) if normalize else q


# file I/O


def read_matrix_market(path):
    if not Path(path).is_file():
        raise ValidationError(f"{path}: no such file")
    try:
        m = scipy.io.mmread(str(path))
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    if not sp.issparse(m):
        return SparseMatrix.from_dense(m)
    return SparseMatrix.from_scipy(m)


def write_matrix_market(path_or_buf, Q):
    coo = sp.coo_matrix((Q.vals, (Q.rows, Q.cols)), shape=(Q.n, Q.n))
    if isinstance(path_or_buf, (str, Path)):
        scipy.io.mmwrite(str(path_or_buf), coo, field="real", symmetry="general")
    else:
        scipy.io.mmwrite(path_or_buf, coo, field="real", symmetry="general")


def matrix_market_string(Q):
    buf = io.BytesIO()
    write_matrix_market(buf, Q)
    return buf.getvalue().decode()


def read_permutation(path):
    text = Path(path).read_text().split()
    try:
        images = [int(t) for t in text]
    except ValueError as exc:
        raise ValidationError(f"{path}: permutation file must hold integers") from exc
    return Permutation(len(images), images)


def write_permutation(path, perm):
    Path(path).write_text("".join(f"{int(x)}\n" for x in perm.map))


def operator_norm(Q, iters=1000, tol=1e-12, seed=0):
    """Spectral norm ``sqrt(lambda_max(Q Q^T))`` by power iteration."""
    if Q.nnz == 0:
        return 0.0
    A = Q.to_csr()
    x = make_rng(seed).random(Q.n) + 0.5
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = A.T @ (A @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        new = math.sqrt(ny)
        x = y / ny
        if abs(new - est) <= tol * new:
            return new
        est = new
    return est
