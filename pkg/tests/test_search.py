from __future__ import annotations

import math

import numpy as np
import pytest

from meanrisk.core import DenseCovariance, DiagonalCovariance, ExplicitSet, MeanRiskInstance, mean_risk_value
from meanrisk.instgen import GridSpec, generate_grid
from meanrisk.netflow.mrni import MRNIMinimizer, mrni_instance
from meanrisk.oracle import BruteForceMinimizer, evaluate_f
from meanrisk.search import (
    SearchConfig,
    binary_local_search,
    certify_local_min,
    global_scan,
    init_bracket,
    parametric_exact,
    solve,
    trace_csv,
)

from oracles import brute_mean_risk, residual_vectors


@pytest.fixture
def two_point():
    return MeanRiskInstance(
        np.array([0.0, 1.0]), DiagonalCovariance([10.0, 5.0]), 1.0, ExplicitSet([[0, 1], [1, 0]])
    )


def random_explicit(rng, n=None):
    n = n or int(rng.integers(2, 13))
    k = int(rng.integers(1, min(2**n, 80) + 1))
    codes = rng.choice(2**n, size=k, replace=False)
    P = (codes[:, None] >> np.arange(n)) & 1
    A = rng.normal(size=(n, n))
    return MeanRiskInstance(rng.uniform(-1, 3, n), DenseCovariance(A @ A.T), float(rng.uniform(0.1, 3)), ExplicitSet(P))


class TestBracket:
    def test_two_point(self, two_point):
        t_min, t_max, xbar, _ = init_bracket(two_point, BruteForceMinimizer())
        assert t_min == 0.0 and list(xbar) == [1, 0] and t_max == pytest.approx(math.sqrt(10))

    def test_riskless_returns_immediately(self):
        inst = MeanRiskInstance(np.array([1.0, 0.5]), DiagonalCovariance([0.0, 0.0]), 2.0, ExplicitSet([[1, 0], [0, 1]]))
        sol = binary_local_search(inst, BruteForceMinimizer())
        assert list(sol.x) == [0, 1] and sol.iterations == 0 and sol.termination == "riskless"

    def test_two_arc_bracket(self):
        from meanrisk.instgen import read_instance

        doc = read_instance("data/two_arcs.mri")
        inst = doc.instance().with_omega(0.0)
        _, t_max, xbar, res = init_bracket(inst, MRNIMinimizer())
        assert res.detail.interdicted == (0,)
        assert t_max == pytest.approx(0.5)


class TestLocalSearch:
    def test_two_point_defaults(self, two_point):
        sol = binary_local_search(two_point, BruteForceMinimizer())
        assert list(sol.x) == [0, 1]
        assert sol.value == pytest.approx(1 + math.sqrt(5), abs=1e-12)
        ts = [r.t for r in sol.trace]
        assert ts[:2] == pytest.approx([math.sqrt(10) / 2, 0.75 * math.sqrt(10)])
        assert [r.sign for r in sol.trace[:2]] == [-1, 1]

    def test_two_point_converges_to_local_minimum(self, two_point):
        sol = binary_local_search(two_point, BruteForceMinimizer(), SearchConfig(gap_tol=1e-12))
        assert sol.trace[-1].t == pytest.approx(math.sqrt(5), abs=1e-5)

    def test_singleton_has_zero_gap(self):
        inst = MeanRiskInstance(np.array([1.0, 2.0]), DiagonalCovariance([3.0, 4.0]), 1.3, ExplicitSet([[1, 1]]))
        sol = binary_local_search(inst, BruteForceMinimizer(), SearchConfig(gap_tol=1e-12))
        assert sol.termination in ("derivative", "gap")
        assert sol.trace[-1].t == pytest.approx(math.sqrt(7), rel=1e-5)
        assert sol.gap_certificate == pytest.approx(0.0, abs=1e-12)

    def test_rejects_zero_omega(self, two_point):
        with pytest.raises(ValueError):
            binary_local_search(two_point.with_omega(0.0), BruteForceMinimizer())
        assert list(solve(two_point.with_omega(0.0), BruteForceMinimizer()).x) == [1, 0]

    @pytest.mark.parametrize("kw", [
        dict(derivative_eps=0.0), dict(gap_tol=0.0), dict(gap_tol=1.0), dict(max_iters=0), dict(bracket_tol=-1.0),
    ])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            SearchConfig(**kw)

    def test_invariants_on_random_instances(self):
        rng = np.random.default_rng(21)
        derivative_stops = 0
        for _ in range(60):
            inst = random_explicit(rng)
            sol = binary_local_search(inst, BruteForceMinimizer(), SearchConfig(gap_tol=1e-12))
            values = [r.mr for r in sol.trace]
            running = np.minimum.accumulate(values)
            for row, best in zip(sol.trace, running):
                assert best <= row.f + 1e-9
            assert sol.value == pytest.approx(min(values), abs=0) if values else True
            if sol.termination == "derivative":
                derivative_stops += 1
                t = sol.trace[-1].t
                ev = evaluate_f(BruteForceMinimizer(), inst, t)
                assert abs(t * t - inst.cov.quad_form(ev.x)) <= 1e-6 * t * t
            assert global_scan(inst).value <= sol.value + 1e-12
        assert derivative_stops > 0

    def test_deterministic_trace(self):
        rng = np.random.default_rng(8)
        inst = random_explicit(rng, 10)
        a = binary_local_search(inst, BruteForceMinimizer())
        b = binary_local_search(inst, BruteForceMinimizer())
        assert a.trace == b.trace and list(a.x) == list(b.x)

    def test_trace_csv(self, two_point):
        text = trace_csv(binary_local_search(two_point, BruteForceMinimizer()).trace)
        lines = text.splitlines()
        assert lines[0] == "iteration,t,f,mr,sign"
        assert lines[1].startswith("1,1.58113883") and lines[1].endswith(",-1")

    def test_grid_within_five_percent(self):
        g = generate_grid(GridSpec(3, 3, seed=4, epsilon=0.05))
        inst = mrni_instance(g.network, g.omega, g.cov)
        sol = solve(inst, MRNIMinimizer())
        best = brute_mean_risk(inst.c, inst.cov.dense(), inst.omega, residual_vectors(g.network))
        assert sol.value <= 1.05 * best + 1e-9


class TestCertify:
    def test_values(self, two_point):
        assert certify_local_min(two_point, [0, 1], math.sqrt(5)) == pytest.approx(0.0, abs=1e-12)
        assert certify_local_min(two_point, [0, 1], 2.5) == pytest.approx(3.25 - 1 - math.sqrt(5), abs=1e-12)
        assert certify_local_min(two_point, [1, 0], math.sqrt(10)) == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(ValueError):
            certify_local_min(two_point, [0, 1], 0.0)


class TestExact:
    def test_two_point(self, two_point):
        for sol in (global_scan(two_point), parametric_exact(two_point, BruteForceMinimizer())):
            assert list(sol.x) == [1, 0] and sol.value == pytest.approx(math.sqrt(10), abs=1e-12)

    def test_zero_omega(self, two_point):
        assert global_scan(two_point.with_omega(0.0)).value == 0.0

    def test_global_scan_equals_brute_force(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            inst = random_explicit(rng, 10)
            best = min(mean_risk_value(inst, row) for row in inst.feasible.points)
            assert global_scan(inst).value == best

    def test_parametric_matches_scan(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            inst = random_explicit(rng)
            assert parametric_exact(inst, BruteForceMinimizer()).value == pytest.approx(global_scan(inst).value, rel=1e-9, abs=1e-12)

    def test_parametric_on_correlated_grid(self):
        g = generate_grid(GridSpec(3, 3, seed=2, correlated=True, m=5, epsilon=0.05))
        inst = mrni_instance(g.network, g.omega, g.cov)
        best = brute_mean_risk(inst.c, inst.cov.dense(), inst.omega, residual_vectors(g.network))
        assert parametric_exact(inst, MRNIMinimizer()).value == pytest.approx(best, rel=1e-9)
