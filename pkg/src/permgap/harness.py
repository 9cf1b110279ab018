"""Monte Carlo stress tests of the certified bound and spectrum dumps."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .certificate import certify, certify_convex, epsilon
from .errors import ConvergenceError, ValidationError
from .matcore import (
    DEFAULT_TOL,
    DENSE_CAP,
    SparseMatrix,
    build_P,
    build_sum,
    make_rng,
    sample_permutation,
    validate_regular,
    zero_one_norm_star,
)

SCHEMA_VERSION = 1
DEFAULT_C0 = 0.5


def _dense(P):
    return P.to_dense() if isinstance(P, SparseMatrix) else np.asarray(P, dtype=float)


def _top_row_sum(a):
    return float(np.max(np.abs(a).sum(axis=1))) if a.size else 0.0


def restricted_eigenvalues(P, dense_cap=DENSE_CAP):
    """Spectrum of ``P`` with the single eigenvalue nearest the top row sum removed."""
    n = P.n if isinstance(P, SparseMatrix) else np.shape(P)[0]
    if n > dense_cap:
        raise ValidationError(f"n={n} exceeds the dense cap {dense_cap}")
    a = _dense(P)
    ev = np.linalg.eigvals(a)
    i = int(np.argmin(np.abs(ev - _top_row_sum(a))))
    return np.delete(ev, i)


def _power_apply(A, x, ell, transpose=False):
    """``(Pi A Pi)^ell x`` normalised, and the log of its norm."""
    op = A.T if transpose else A
    log_scale = 0.0
    y = x - x.mean()
    for _ in range(ell):
        y = op @ y
        y = y - y.mean()
        s = np.linalg.norm(y)
        if s == 0.0:
            return y, -math.inf
        log_scale += math.log(s)
        y = y / s
    return y, log_scale


def _norm_of_power(A, ell, x, iters=200, log_tol=1e-9):
    """``log ||(Pi A Pi)^ell||`` by power iteration on ``B^T B``, warm-started at ``x``.

    Returns the estimate and the last right vector, for the next warm start.
    """
    prev = -math.inf
    for _ in range(iters):
        y, s1 = _power_apply(A, x, ell)
        if s1 == -math.inf:
            return -math.inf, x
        x, s2 = _power_apply(A, y, ell, transpose=True)
        if s2 == -math.inf:
            return s1, x
        if abs(s1 - prev) <= log_tol:
            return s1, x
        prev = s1
    return prev, x


def second_eigmod(P, method="dense", tol=1e-3, *, dense_cap=DENSE_CAP, max_ell=4096, seed=0):
    """Second largest eigenvalue modulus of ``P``.

    ``dense`` drops the eigenvalue nearest the top row sum from the full
    spectrum. ``power_norm`` returns ``||(Pi P Pi)^ell|| ** (1/ell)`` with
    ``Pi`` the projector onto the complement of constants, doubling ``ell``
    until successive values agree to ``tol`` (relative). That is an upper
    proxy: it bounds the spectral radius on the complement from above.
    """
    if method == "dense":
        ev = restricted_eigenvalues(P, dense_cap)
        return float(np.max(np.abs(ev))) if ev.size else 0.0
    if method != "power_norm":
        raise ValidationError(f"unknown method {method!r}")
    A = P.to_csr() if isinstance(P, SparseMatrix) else np.asarray(P, dtype=float)
    if A.shape[0] < 2:
        return 0.0
    x = make_rng(seed).standard_normal(A.shape[0])
    x -= x.mean()
    x /= np.linalg.norm(x)
    prev = None
    ell = 1
    while ell <= max_ell:
        # the root only needs log_norm / ell to well below tol
        log_norm, x = _norm_of_power(A, ell, x, log_tol=1e-2 * tol * ell)
        if log_norm == -math.inf:
            return 0.0
        est = math.exp(log_norm / ell)
        if prev is not None and abs(est - prev) <= tol * est:
            return est
        prev = est
        ell *= 2
    raise ConvergenceError(f"power_norm did not settle within ell={max_ell}", best_estimate=prev)


def default_ell(n, d_star, c0=DEFAULT_C0):
    """``max(1, round((1 - c0) ln n / (6 ln d*)))``."""
    if d_star < 2:
        raise ValidationError(f"d* must be at least 2, got {d_star}")
    if n < 3:
        raise ValidationError(f"n must be at least 3, got {n}")
    x = (1.0 - c0) * math.log(n) / (6.0 * math.log(d_star))
    return max(1, math.floor(x + 0.5))


@dataclass
class TrialReport:
    trials: int
    n: int
    r: float | None
    ell0: int
    rho: float
    lambda2_samples: list[float]
    exceed_count: int
    max_ratio: float
    seed: int
    certificate: dict = field(default_factory=dict)
    norm_samples: list[float] | None = None
    epsilon: float | None = None
    threshold_eps: float | None = None
    exceed_count_eps: int | None = None

    def recheck(self):
        """Recompute the aggregates from the samples; True when they match."""
        ex = sum(1 for x in self.lambda2_samples if x > self.rho)
        mr = max(x / self.rho for x in self.lambda2_samples)
        return ex == self.exceed_count and mr == self.max_ratio

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["lambda2_samples"] = sorted(self.lambda2_samples)
        if self.norm_samples is not None:
            d["norm_samples"] = sorted(self.norm_samples)
        return {"schema_version": SCHEMA_VERSION, **d}


def _certificate_for(Q, r, ell0, kappa_cap, tol):
    if r is None:
        return certify(Q, ell0, kappa_cap, tol=tol)
    if r == 0.0:
        # pure permutation: only the u term survives
        return dataclasses.replace(certify(SparseMatrix.zeros(Q.n), ell0, kappa_cap), r=0.0)
    if 0.0 < r < 1.0:
        return certify_convex(Q, r, ell0, kappa_cap, tol=tol)
    raise ValidationError(f"r must lie in [0, 1) or be None, got {r}")


def run_trials(Q, r, ell0, trials, seed, *, kappa_cap=None, method="dense", with_norm=False,
               c1=None, c0=DEFAULT_C0, alpha=0.5, tol=DEFAULT_TOL, dense_cap=DENSE_CAP):
    """Sample ``M`` ``trials`` times and compare ``|lambda_2|`` against ``rho(ell0)``.

    ``r=None`` uses the unnormalised ``M + Q``; otherwise ``(1 - r) M + r Q``.
    Trial ``t`` draws its permutation from the ``t``-th child of
    ``SeedSequence(seed)``.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    if not validate_regular(Q, tol).is_regular:
        raise ValidationError("Q is not regular")
    cert = _certificate_for(Q, r, ell0, kappa_cap or ell0, tol)
    lam, norms = [], []
    for child in np.random.SeedSequence(seed).spawn(trials):
        M = sample_permutation(Q.n, make_rng(child))
        P = build_sum(M, Q) if r is None else build_P(M, Q, r)
        lam.append(second_eigmod(P, method, dense_cap=dense_cap))
        if with_norm:
            norms.append(second_eigmod(P, "power_norm"))
    rho = cert.rho
    report = TrialReport(
        trials=trials,
        n=Q.n,
        r=r,
        ell0=ell0,
        rho=rho,
        lambda2_samples=lam,
        exceed_count=sum(1 for x in lam if x > rho),
        max_ratio=max(x / rho for x in lam),
        seed=seed,
        certificate=cert.to_dict(),
        norm_samples=norms if with_norm else None,
    )
    d = zero_one_norm_star(Q)
    if c1 is not None and d >= 2 and Q.n >= 3:
        eps = epsilon(Q.n, d, c0, c1, alpha).epsilon
        report.epsilon = eps
        report.threshold_eps = (1.0 + eps) * rho
        report.exceed_count_eps = sum(1 for x in lam if x > report.threshold_eps)
    return report


@dataclass
class SpectrumDump:
    eigenvalues: list[tuple[float, float]]
    circle_radius: float | None

    def to_csv(self):
        lines = ["re,im"]
        lines += [f"{re!r},{im!r}" for re, im in self.eigenvalues]
        return "\n".join(lines) + "\n"

    def metadata(self):
        mods = [math.hypot(re, im) for re, im in self.eigenvalues]
        return {
            "schema_version": SCHEMA_VERSION,
            "count": len(self.eigenvalues),
            "circle_radius": self.circle_radius,
            "max_modulus": max(mods) if mods else 0.0,
            "inside_radius": (
                sum(1 for m in mods if m <= self.circle_radius)
                if self.circle_radius is not None
                else None
            ),
        }


def dump_spectrum(P, circle_radius=None, dense_cap=DENSE_CAP):
    """Restricted spectrum of ``P`` as ``(re, im)`` pairs, sorted."""
    ev = restricted_eigenvalues(P, dense_cap)
    pairs = sorted((float(z.real), float(z.imag)) for z in ev)
    return SpectrumDump(pairs, circle_radius)
