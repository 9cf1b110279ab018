"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines.
"""

import itertools
import math
import time

import numpy as np
import pytest

from oracles import kappa_enumerate, phi_enumerate
from permgap.harness import restricted_eigenvalues, run_trials
from permgap.kappa import kappa_L
from permgap.matcore import (
    SparseMatrix,
    build_sum,
    perfect_matching,
    random_bistochastic,
    random_regular,
    sample_permutation,
    validate_regular,
)
from permgap.moments import phi_moment_table, rho_ell, rho_ell_convex, trace_table
from permgap.quasitree import Simulator, root_vector

RADIUS = 1.05 * math.sqrt(3)


def report(name, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def _random_stochastic_mix(rng, n):
    """Positive convex mix of random permutation matrices."""
    k = int(rng.integers(1, 4))
    w = rng.random(k) + 0.1
    w /= w.sum()
    A = np.zeros((n, n))
    for x in w:
        A[np.arange(n), rng.permutation(n)] += x
    return A


def test_dp_matches_enumeration():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 7))
        A = _random_stochastic_mix(rng, n)
        F = phi_moment_table(trace_table(SparseMatrix.from_dense(A), 5), 5).F
        for l1, l2 in itertools.product(range(6), repeat=2):
            worst = max(worst, abs(F[l1, l2] - phi_enumerate(A, l1, l2)))
    took = time.perf_counter() - t0
    report("recursion vs enumeration", worst <= 1e-12 and took < 10,
           f"max abs error {worst:.2e} over 20 matrices, {took:.1f}s")


def test_kappa_matches_enumeration_and_envelope():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    mismatches = 0
    worst_rel = 0.0
    for i in range(20):
        n = int(rng.integers(2, 6))
        # small integer entries keep every product and sum exact in floating point
        A = rng.integers(0, 3, size=(n, n)).astype(float)
        if i % 4 == 0:
            A = sample_permutation(n, i).matrix().to_dense()
        B = SparseMatrix.from_dense(A)
        for L in range(1, 5):
            for cap in (None, 1, 2, 3):
                for strict in (False, True):
                    got = kappa_L(B, L, strict=strict, max_part=cap).kappa_L
                    want = kappa_enumerate(A, L, strict=strict, max_part=cap)
                    mismatches += got != want
        R = rng.random((n, n))
        for L in range(1, 5):
            got = kappa_L(SparseMatrix.from_dense(R), L, max_part=3).kappa_L
            want = kappa_enumerate(R, L, max_part=3)
            worst_rel = max(worst_rel, abs(got - want) / max(want, 1e-300))

    ratios = []
    for i in range(50):
        n = int(rng.integers(2, 65))
        kind = i % 3
        if kind == 0:
            Q = random_bistochastic(n, 1, i)
        elif kind == 1:
            Q = random_regular(64, 2, i)
        else:
            Q = random_bistochastic(n, int(rng.integers(2, 5)), i)
        delta = validate_regular(Q).delta
        ratios.append(kappa_L(Q, 8).kappa_L / (4 * delta))
    took = time.perf_counter() - t0
    ok = mismatches == 0 and worst_rel <= 1e-12 and max(ratios) <= 1 + 1e-9 and took < 30
    report("kappa recursion vs enumeration, 4 delta envelope", ok,
           f"{mismatches} exact mismatches, real-valued rel error {worst_rel:.1e}, "
           f"max kappa/(4 delta) {max(ratios):.3f} over 50 matrices, {took:.1f}s")


def test_quasitree_oracle():
    t0 = time.perf_counter()
    Q = random_bistochastic(5, 2, 3)
    F = phi_moment_table(trace_table(Q, 3), 3).F
    gaps = []
    for ell in (1, 2, 3):
        mean, se = Simulator(Q, 100 + ell).estimate_phi("p" * ell + "P" * ell, 20_000)
        # a zero stderr means every trial gave the same value; compare it directly
        gaps.append((abs(mean - F[ell, ell]), max(3 * se, 1e-12), se))

    rng = np.random.default_rng(5)
    star_err = 0.0
    for n in range(1, 7):
        A = rng.random((n, n)) * (rng.random((n, n)) < 0.7)
        sim = Simulator(SparseMatrix.from_dense(A), n)
        mats = {"q": A, "Q": A.T}
        for length in range(1, 6):
            for word in map("".join, itertools.product("qQ", repeat=length)):
                prod = np.linalg.multi_dot([np.eye(n)] + [mats[c] for c in word] + [np.eye(n)])
                mean, _ = sim.estimate_phi(word, 1, roots="all")
                star_err = max(star_err, abs(mean - np.trace(prod) / n))

    unitary_ok = True
    sim = Simulator(random_bistochastic(4, 2, 0), 1)
    for alpha in range(4):
        for word in map("".join, itertools.product("uUq", repeat=4)):
            v = sim.apply_word(root_vector(alpha), word)
            for w in (sim.apply_u_star(sim.apply_u(v)), sim.apply_u(sim.apply_u_star(v))):
                keys = set(v) | set(w)
                unitary_ok &= all(abs(v.get(k, 0) - w.get(k, 0)) <= 1e-12 for k in keys)
    took = time.perf_counter() - t0
    ok = all(g <= lim for g, lim, _ in gaps) and star_err <= 1e-12 and unitary_ok and took < 120
    report("quasi-tree oracle", ok,
           f"|mean - F| / stderr = {', '.join(f'{g / se:.2f}' if se else f'{g:.0e} (se 0)' for g, _, se in gaps)} "
           f"for l = 1..3; q-word error "
           f"{star_err:.1e}; unitarity {'exact' if unitary_ok else 'broken'}; {took:.1f}s")


def test_alternating_words_vanish():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    nonzero = 0
    for w in range(100):
        n = int(rng.integers(2, 7))
        sim = Simulator(random_bistochastic(n, 2, w), w)
        word = []
        for _ in range(int(rng.integers(1, 5))):
            a = int(rng.integers(1, 4)) * (1 if rng.random() < 0.5 else -1)
            word += ["u" if a > 0 else "U"] * abs(a)
            b = rng.standard_normal((n, n))
            np.fill_diagonal(b, 0.0)
            word.append(b)
        for alpha in range(n):
            out = sim.apply_word(root_vector(alpha), word)
            nonzero += out.get((alpha,), 0.0) != 0.0
    took = time.perf_counter() - t0
    report("alternating centred words", nonzero == 0 and took < 60,
           f"{nonzero} nonzero root products over 100 words, {took:.1f}s")


def test_perfect_matching_figure():
    t0 = time.perf_counter()
    n = 600
    worst = 0.0
    rhos = []
    for seed in range(10):
        Q = perfect_matching(n, sample_permutation(n, 1000 + seed))
        ev = restricted_eigenvalues(build_sum(sample_permutation(n, seed), Q))
        worst = max(worst, float(np.max(np.abs(ev))))
        rhos.append(rho_ell(Q, 20))
    took = time.perf_counter() - t0
    ok = worst <= RADIUS and all(1 < r <= RADIUS for r in rhos) and took < 300
    report("perfect matching at n = 600", ok,
           f"max |lambda| {worst:.4f}, rho_20 in [{min(rhos):.4f}, {max(rhos):.4f}], "
           f"limit {RADIUS:.4f}, {took:.1f}s")


def test_convex_regime():
    t0 = time.perf_counter()
    exceed, total, worst = 0, 0, 0.0
    for seed in range(10):
        Q = random_bistochastic(200, 3, seed)
        rep = run_trials(Q, 0.1, 20, 20, seed)
        exceed += rep.exceed_count
        total += rep.trials
        worst = max(worst, rep.max_ratio)
    took = time.perf_counter() - t0
    report("convex regime r = 0.1, n = 200", exceed == 0 and took < 300,
           f"{exceed}/{total} samples above rho(20), max ratio {worst:.4f}, {took:.1f}s")


def test_convex_lower_bound():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = math.inf
    for i in range(50):
        n = int(rng.integers(1, 40))
        Q = random_bistochastic(n, int(rng.integers(1, 5)), i)
        r = float(rng.uniform(1e-6, 1 - 1e-6))
        ell = int(rng.integers(1, 15))
        worst = min(worst, rho_ell_convex(Q, r, ell) - (1 - r))
    took = time.perf_counter() - t0
    report("convex proxy lower bound", worst >= -1e-12 and took < 10,
           f"min rho - (1 - r) = {worst:.3e} over 50 triples, {took:.1f}s")
