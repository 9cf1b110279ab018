import math

import numpy as np
import pytest

from permgap.errors import ConvergenceError, ValidationError
from permgap.harness import (
    TrialReport,
    default_ell,
    dump_spectrum,
    restricted_eigenvalues,
    run_trials,
    second_eigmod,
)
from permgap.matcore import (
    Permutation,
    SparseMatrix,
    build_P,
    random_bistochastic,
    sample_permutation,
)


class TestSecondEigmod:
    def test_identity(self):
        assert second_eigmod(SparseMatrix.identity(5)) == 1.0

    def test_uniform(self):
        P = SparseMatrix.from_dense(np.full((6, 6), 1 / 6))
        assert second_eigmod(P) == pytest.approx(0.0, abs=1e-12)
        assert second_eigmod(P, "power_norm") == pytest.approx(0.0, abs=1e-12)

    def test_five_cycle(self):
        P = Permutation(5, [1, 2, 3, 4, 0]).matrix()
        ev = restricted_eigenvalues(P)
        assert len(ev) == 4
        assert np.allclose(np.abs(ev), 1.0)
        assert second_eigmod(P) == pytest.approx(1.0, abs=1e-12)

    def test_dense_cap(self):
        with pytest.raises(ValidationError):
            second_eigmod(SparseMatrix.identity(10), dense_cap=5)

    def test_unknown_method(self):
        with pytest.raises(ValidationError):
            second_eigmod(SparseMatrix.identity(3), "magic")

    def test_power_norm_gives_up(self):
        n = 20
        P = build_P(sample_permutation(n, 0), random_bistochastic(n, 2, 1), 0.3)
        with pytest.raises(ConvergenceError) as info:
            second_eigmod(P, "power_norm", tol=1e-12, max_ell=4)
        assert info.value.best_estimate >= second_eigmod(P)

    @pytest.mark.parametrize("seed", range(8))
    def test_power_norm_upper_bounds_dense(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(8, 65))
        Q = random_bistochastic(n, int(rng.integers(1, 4)), seed)
        P = build_P(sample_permutation(n, seed + 1), Q, 0.3)
        dense = second_eigmod(P)
        power = second_eigmod(P, "power_norm")
        assert power >= dense * (1 - 1e-6)
        assert power < dense * 1.10


class TestDefaultEll:
    def test_exact_logs(self):
        assert default_ell(math.exp(12), math.exp(2), c0=0.0) == 1

    def test_n600(self):
        x = 0.5 * math.log(600) / (6 * math.log(2))
        assert default_ell(600, 2, 0.5) == max(1, round(x)) == 1

    def test_large(self):
        assert default_ell(1e12, 2, 0.0) == round(math.log(1e12) / (6 * math.log(2)))

    def test_monotone_in_d(self):
        vals = [default_ell(1e9, d, 0.1) for d in range(2, 30)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("n,d", [(600, 1), (2, 3)])
    def test_domain(self, n, d):
        with pytest.raises(ValidationError):
            default_ell(n, d)


class TestRunTrials:
    def test_pure_permutation(self):
        Q = random_bistochastic(7, 2, 0)
        rep = run_trials(Q, 0.0, 3, 6, seed=1)
        assert rep.rho == 1.0
        assert all(x == pytest.approx(1.0, abs=1e-9) for x in rep.lambda2_samples)

    def test_bistochastic_samples_bounded(self):
        rep = run_trials(random_bistochastic(30, 3, 1), 0.3, 4, 5, seed=2)
        assert rep.trials == 5 and len(rep.lambda2_samples) == 5
        assert all(0.0 <= x <= 1.0 + 1e-9 for x in rep.lambda2_samples)
        assert rep.recheck()
        assert rep.epsilon is None

    def test_consistency_and_order_independence(self):
        rep = run_trials(random_bistochastic(20, 2, 3), None, 3, 7, seed=4, with_norm=True)
        assert rep.recheck()
        d = rep.to_dict()
        assert d["lambda2_samples"] == sorted(rep.lambda2_samples)
        assert d["schema_version"] == 1
        assert len(d["norm_samples"]) == 7
        rep.exceed_count += 1
        assert not rep.recheck()

    def test_reproducible(self):
        Q = random_bistochastic(15, 2, 0)
        a = run_trials(Q, 0.2, 2, 4, seed=9).to_dict()
        b = run_trials(Q, 0.2, 2, 4, seed=9).to_dict()
        assert a == b

    def test_epsilon_threshold(self):
        Q = random_bistochastic(40, 3, 0)
        rep = run_trials(Q, None, 2, 3, seed=0, c1=0.01)
        assert rep.epsilon > 0
        assert rep.threshold_eps == pytest.approx((1 + rep.epsilon) * rep.rho)
        assert rep.exceed_count_eps <= rep.exceed_count

    def test_errors(self):
        Q = random_bistochastic(5, 2, 0)
        with pytest.raises(ValidationError):
            run_trials(Q, 0.1, 2, 0, seed=0)
        with pytest.raises(ValidationError):
            run_trials(Q, 1.0, 2, 1, seed=0)
        bad = SparseMatrix.from_dense([[0.5, 0.5], [0.5, 0.4]])
        with pytest.raises(ValidationError):
            run_trials(bad, 0.1, 2, 1, seed=0)


class TestSpectrum:
    def test_identity3(self):
        dump = dump_spectrum(SparseMatrix.identity(3), 1.0)
        assert dump.eigenvalues == [(1.0, 0.0), (1.0, 0.0)]
        assert dump.to_csv() == "re,im\n1.0,0.0\n1.0,0.0\n"

    def test_conjugate_pairs(self):
        n = 40
        P = build_P(sample_permutation(n, 0), random_bistochastic(n, 2, 1), 0.4)
        dump = dump_spectrum(P, 1.0)
        assert len(dump.eigenvalues) == n - 1
        ev = np.array([complex(*z) for z in dump.eigenvalues])
        for z in ev[np.abs(ev.imag) > 1e-9]:
            assert np.min(np.abs(ev - z.conjugate())) < 1e-8

    def test_metadata(self):
        meta = dump_spectrum(SparseMatrix.identity(4), 0.5).metadata()
        assert meta["count"] == 3 and meta["inside_radius"] == 0
        assert meta["max_modulus"] == 1.0
        assert dump_spectrum(SparseMatrix.identity(4)).metadata()["inside_radius"] is None

    def test_report_type(self):
        rep = TrialReport(1, 2, None, 1, 2.0, [1.0], 0, 0.5, 0)
        assert rep.recheck()
