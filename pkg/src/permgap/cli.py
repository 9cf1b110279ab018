"""Command line entry point: ``permgap <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 convergence error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .certificate import certify, certify_convex, classify_regime, epsilon
from .errors import ConvergenceError, ValidationError
from .harness import SCHEMA_VERSION, default_ell, dump_spectrum, run_trials
from .kappa import kappa_L
from .matcore import (
    Permutation,
    SparseMatrix,
    build_P,
    build_sum,
    matrix_market_string,
    perfect_matching,
    random_bistochastic,
    random_regular,
    read_matrix_market,
    read_permutation,
    sample_permutation,
    sinkhorn_bistochastic,
    validate_regular,
    zero_one_norm_star,
)
from .moments import phi_moment_table, rho_ell, rho_ell_convex, trace_table
from .quasitree import Simulator, parse_word


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args):
    if not args.matrix:
        raise ValidationError("--matrix is required")
    return read_matrix_market(args.matrix)


def _ell0(args, Q):
    if args.ell0 is not None:
        return args.ell0
    d = zero_one_norm_star(Q)
    return default_ell(Q.n, d) if d >= 2 and Q.n >= 3 else 1


def cmd_generate(args):
    n, seed = args.n, args.seed
    kind = args.kind
    if kind == "permutation":
        perm = sample_permutation(n, seed)
        _emit(args, "".join(f"{x}\n" for x in perm.map.tolist()))
        return
    if kind == "matching":
        Q = perfect_matching(n, sample_permutation(n, seed))
    elif kind == "bistochastic":
        Q = random_bistochastic(n, args.d, seed)
    elif kind == "sinkhorn":
        Q = sinkhorn_bistochastic(n, seed)
    elif kind == "regular":
        Q = random_regular(n, args.d, seed, normalize=not args.unnormalized)
    elif kind == "identity":
        Q = SparseMatrix.identity(n)
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown kind {kind}")
    _emit(args, matrix_market_string(Q))


def cmd_certify(args):
    Q = _load(args)
    ell0 = _ell0(args, Q)
    cap = args.kappa_cap or ell0
    if args.r is None:
        cert = certify(Q, ell0, cap, args.estimator, strict=args.strict)
    else:
        cert = certify_convex(Q, args.r, ell0, cap, args.estimator, strict=args.strict)
    flags = classify_regime(Q, args.r, args.K)
    d = zero_one_norm_star(Q)
    eps = None
    if d >= 2 and Q.n >= 3:
        eps = epsilon(Q.n, d, args.c0, args.c1, args.alpha).to_dict()
    doc = {
        "schema_version": SCHEMA_VERSION,
        "certificate": cert.to_dict(),
        "regime": flags.to_dict(),
        "epsilon": eps,
    }
    _emit(args, _dumps(doc))


def cmd_moments(args):
    Q = _load(args)
    L = args.L if args.L is not None else _ell0(args, Q)
    F = phi_moment_table(trace_table(Q, L), L).F
    if args.format == "json":
        _emit(args, _dumps({"schema_version": SCHEMA_VERSION, "L": L, "F": F.tolist()}))
        return
    rows = ["l1,l2,phi"]
    rows += [f"{a},{b},{float(F[a, b])!r}" for a in range(L + 1) for b in range(L + 1)]
    _emit(args, "\n".join(rows) + "\n")


def cmd_kappa(args):
    Q = _load(args)
    L = args.L if args.L is not None else _ell0(args, Q)
    res = kappa_L(Q, L, strict=args.strict)
    delta = validate_regular(Q).delta
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kappa_L": res.kappa_L,
        "L": res.L,
        "strict": res.strict,
        "support_depth": res.support_depth,
        "argmax": list(res.argmax) if res.argmax else None,
        "delta": delta,
        "envelope": 4.0 * delta,
        "envelope_ok": res.kappa_L <= 4.0 * delta + 1e-9,
    }
    _emit(args, _dumps(doc))


def cmd_trials(args):
    Q = _load(args)
    ell0 = _ell0(args, Q)
    report = run_trials(
        Q, args.r, ell0, args.trials, args.seed,
        kappa_cap=args.kappa_cap, method=args.method, with_norm=args.with_norm,
        c1=args.c1, c0=args.c0, alpha=args.alpha,
    )
    _emit(args, _dumps(report.to_dict()))


def cmd_spectrum(args):
    Q = _load(args)
    M = read_permutation(args.perm) if args.perm else sample_permutation(Q.n, args.seed)
    if not isinstance(M, Permutation) or M.n != Q.n:
        raise ValidationError("permutation dimension does not match the matrix")
    P = build_sum(M, Q) if args.r is None else build_P(M, Q, args.r)
    radius = args.radius
    if radius is None:
        ell0 = _ell0(args, Q) if args.ell0 is None else args.ell0
        radius = rho_ell(Q, ell0) if args.r is None else rho_ell_convex(Q, args.r, ell0)
    dump = dump_spectrum(P, radius)
    meta = {**dump.metadata(), "n": Q.n, "r": args.r, "seed": args.seed}
    if args.format == "json":
        _emit(args, _dumps({**meta, "eigenvalues": [list(z) for z in dump.eigenvalues]}))
        return
    _emit(args, dump.to_csv())
    if args.out:
        Path(args.out).with_suffix(".json").write_text(_dumps(meta))
    else:
        sys.stderr.write(_dumps(meta))


def cmd_oracle(args):
    Q = _load(args)
    word = parse_word(args.word)
    sim = Simulator(Q, args.seed)
    mean, stderr = sim.estimate_phi(word, args.trials, roots=args.roots)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "word": word,
        "trials": args.trials,
        "roots": args.roots,
        "seed": args.seed,
        "mean": mean,
        "stderr": stderr,
    }
    _emit(args, _dumps(doc))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--matrix", help="Matrix Market file holding Q")
    common.add_argument("--r", type=float, default=None, help="mixing weight; omit for M + Q")
    common.add_argument("--ell0", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=["json", "csv"], default=None)

    parser = argparse.ArgumentParser(prog="permgap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a test matrix or permutation")
    p.add_argument("--kind", required=True,
                   choices=["matching", "bistochastic", "sinkhorn", "regular", "identity", "permutation"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--unnormalized", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("certify", parents=[common], help="compute rho(ell0) and regime flags")
    p.add_argument("--kappa-cap", type=int, default=None)
    p.add_argument("--estimator", choices=["trace_proxy", "quasitree"], default="trace_proxy")
    p.add_argument("--strict", action="store_true", help="kappa with parts >= 1")
    p.add_argument("--c0", type=float, default=0.5)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--K", type=float, default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("moments", parents=[common], help="Phi(p^l1 p*^l2) table")
    p.add_argument("--L", type=int, default=None)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("kappa", parents=[common], help="kappa_L with argmax and envelope")
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("trials", parents=[common], help="Monte Carlo exceedance report")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--kappa-cap", type=int, default=None)
    p.add_argument("--method", choices=["dense", "power_norm"], default="dense")
    p.add_argument("--with-norm", action="store_true", help="also record power_norm estimates")
    p.add_argument("--c0", type=float, default=0.5)
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--alpha", type=float, default=0.5)
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("spectrum", parents=[common], help="restricted spectrum of one sample")
    p.add_argument("--perm", default=None, help="permutation file; sampled from --seed if absent")
    p.add_argument("--radius", type=float, default=None)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("oracle", parents=[common], help="quasi-tree estimate of Phi(word)")
    p.add_argument("--word", required=True, help="e.g. 'p3P3', letters uUqQpP, capital = adjoint")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--roots", choices=["sample", "all"], default="sample")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        best = exc.best_estimate
        extra = "" if best is None or math.isnan(best) else f" (best estimate {best!r})"
        print(f"error: {exc}{extra}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
