"""Assemble rho(l0) = max(norm term, 2 kappa, inf-norm*) and regime flags."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from . import kappa as _kappa
from .errors import ValidationError
from .matcore import (
    DEFAULT_TOL,
    DENSE_CAP,
    inf_norm_star,
    operator_norm,
    rescale_for_convex,
    validate_regular,
    zero_one_norm_star,
)
from .moments import rho_ell, rho_ell_convex


class Estimator(str, Enum):
    TRACE_PROXY = "trace_proxy"
    QUASITREE = "quasitree"


DOMINANT_ORDER = ("norm", "kappa", "delta")


@dataclass(frozen=True)
class Certificate:
    rho: float
    norm_proxy: float
    two_kappa: float
    delta_star: float
    ell0: int
    r: float | None
    dominant_term: str
    estimator_kind: str
    kappa_cap: int
    kappa_argmax: tuple[int, int, int] | None = None

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EpsilonParams:
    c0: float
    c1: float
    alpha: float
    n: float
    d_star: float
    epsilon: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class RegimeFlags:
    sparsity_ok: bool
    norm_bounded: bool
    convex_small_r: bool | None
    bistochastic_fifth: bool | None
    expander_ok: bool | None
    # inputs the predicates were evaluated on
    d_star: int
    delta: float
    op_norm: float
    K: float
    second_eigmod: float | None

    def to_dict(self):
        return asdict(self)


def _assemble(norm_proxy, two_kappa, delta_star, **meta):
    parts = dict(zip(DOMINANT_ORDER, (norm_proxy, two_kappa, delta_star)))
    rho = max(parts.values())
    # ties resolve in DOMINANT_ORDER
    dominant = next(k for k in DOMINANT_ORDER if parts[k] == rho)
    return Certificate(
        rho=rho,
        norm_proxy=norm_proxy,
        two_kappa=two_kappa,
        delta_star=delta_star,
        dominant_term=dominant,
        **meta,
    )


def _check_inputs(Q, ell0, kappa_cap, tol):
    if ell0 < 1:
        raise ValidationError("ell0 must be at least 1")
    if kappa_cap < 1:
        raise ValidationError("kappa_cap must be at least 1")
    rep = validate_regular(Q, tol)
    if not rep.is_regular:
        raise ValidationError(
            f"Q is not regular: row dev {rep.max_row_dev:.3g}, col dev {rep.max_col_dev:.3g}"
        )
    return rep


def _norm_term(Q, ell0, estimator, qt_options):
    estimator = Estimator(estimator)
    if estimator is Estimator.TRACE_PROXY:
        return rho_ell(Q, ell0)
    from .quasitree import Simulator

    opts = dict(trials=20, iters=2, seed=0)
    opts.update(qt_options or {})
    sim = Simulator(Q, opts.pop("seed"))
    return sim.estimate_norm_power(ell0, **opts)


def certify(Q, ell0, kappa_cap, estimator=Estimator.TRACE_PROXY, *, tol=DEFAULT_TOL,
            strict=False, qt_options=None):
    """Deterministic bound for ``M + Q`` restricted to the complement of constants."""
    _check_inputs(Q, ell0, kappa_cap, tol)
    kr = _kappa.kappa(Q, kappa_cap, strict)
    return _assemble(
        _norm_term(Q, ell0, estimator, qt_options),
        2.0 * kr.kappa_L,
        inf_norm_star(Q),
        ell0=ell0,
        r=None,
        estimator_kind=Estimator(estimator).value,
        kappa_cap=kappa_cap,
        kappa_argmax=kr.argmax,
    )


def certify_convex(Q, r, ell0, kappa_cap, estimator=Estimator.TRACE_PROXY, *,
                   tol=DEFAULT_TOL, strict=False, qt_options=None):
    """Bound for ``(1 - r) M + r Q``, computed as ``(1 - r)`` times the bound for ``M + Q'``."""
    if not 0.0 < r < 1.0:
        raise ValidationError(f"r must lie strictly inside (0, 1), got {r}")
    _check_inputs(Q, ell0, kappa_cap, tol)
    kr = _kappa.kappa(Q, kappa_cap, strict)
    if Estimator(estimator) is Estimator.TRACE_PROXY:
        norm = rho_ell_convex(Q, r, ell0)
    else:
        norm = (1.0 - r) * _norm_term(rescale_for_convex(Q, r), ell0, estimator, qt_options)
    return _assemble(
        norm,
        2.0 * r * kr.kappa_L,
        r * inf_norm_star(Q),
        ell0=ell0,
        r=r,
        estimator_kind=Estimator(estimator).value,
        kappa_cap=kappa_cap,
        kappa_argmax=kr.argmax,
    )


def epsilon(n, d_star, c0=0.5, c1=1.0, alpha=0.5):
    """``12 c1 ln(d*) / ((1 - c0) ln(n)^alpha)``; informational only, c1 is unknown."""
    if not 0.0 < c0 < 1.0:
        raise ValidationError("c0 must lie in (0, 1)")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    if c1 <= 0:
        raise ValidationError("c1 must be positive")
    if d_star < 2:
        raise ValidationError(f"d* must be at least 2, got {d_star}")
    if n < 3:
        raise ValidationError(f"n must be at least 3, got {n}")
    eps = 12.0 * c1 * math.log(d_star) / ((1.0 - c0) * math.log(n) ** alpha)
    return EpsilonParams(c0, c1, alpha, n, d_star, eps)


def classify_regime(Q, r=None, K=None, *, tol=DEFAULT_TOL, dense_cap=DENSE_CAP):
    """Evaluate the hypotheses under which the bound is expected to hold."""
    from .harness import second_eigmod

    n = Q.n
    d = zero_one_norm_star(Q)
    rep = validate_regular(Q, tol)
    delta = rep.delta
    op = operator_norm(Q)
    if K is None:
        K = op
    sparsity_ok = n >= 2 and d <= math.exp(math.sqrt(math.log(n)))
    convex_small_r = None if r is None else bool(r < 1.0 / (4.0 * delta + 1.0))
    bistochastic_fifth = None if r is None else bool(abs(delta - 1.0) <= tol and r < 0.2)
    lam2 = None
    expander_ok = None
    if n <= dense_cap and n >= 2:
        lam2 = second_eigmod(Q, "dense")
        expander_ok = bool(lam2 < 1.0 / 16.0)
    return RegimeFlags(
        sparsity_ok=bool(sparsity_ok),
        norm_bounded=bool(op <= K * (1.0 + 1e-12)),
        convex_small_r=convex_small_r,
        bistochastic_fifth=bistochastic_fifth,
        expander_ok=expander_ok,
        d_star=d,
        delta=delta,
        op_norm=op,
        K=float(K),
        second_eigmod=lam2,
    )


def is_consistent(cert, rtol=0.0):
    """Re-check ``rho == max(components)`` and the dominant label from the record alone."""
    comps = (cert.norm_proxy, cert.two_kappa, cert.delta_star)
    if not np.isclose(cert.rho, max(comps), rtol=rtol, atol=0.0):
        return False
    expected = next(k for k, v in zip(DOMINANT_ORDER, comps) if v == max(comps))
    return expected == cert.dominant_term
