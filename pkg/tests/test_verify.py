"""Order and stability checks: comparison, envelopes, resolvent, corpus.

Closed forms used as oracles below:

  twin linear decay      u2 - u1 = (u20 - u10) E_gamma(-t^gamma)
  unit forcing gap       v - u   = t^gamma E_{gamma, 1+gamma}(-t^gamma)
  normalized twin ratio  y       = E_gamma(-t^gamma)   (f = -u)
                         y       = E_gamma(+t^gamma)   (f = +u)

The resolvent reference numbers were measured on this code path and
are frozen an order of magnitude above the observed values; the hard
ceilings (1e-3) come from the check's contract.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracode.expressions import parse
from fracode.fracops import Mesh, SampledFn, default_grading
from fracode.solver import FracProblem, solve
from fracode.specfun import MLQuery, ResolventQuery, mittag_leffler, resolvent
from fracode.verify import (
    CORPUS_SEED,
    VIOLATION_TOL,
    check_comparison,
    check_resolvent,
    check_subsupersolution,
    corpus_problems,
    max_principle_defect,
    run_corpus,
    stability_experiment,
)

E_HALF_AT_MINUS_1 = 0.42758357615581


def ml(alpha, z, beta=1.0):
    return mittag_leffler(MLQuery(alpha=alpha, beta=beta, z=z))


class TestCheckComparison:
    def test_linear_decay_margin_tracks_ml(self):
        rep = check_comparison("-1*u", 0.5, 1.0, 2.0)
        assert rep.trials == 1
        assert rep.violations == 0
        # margin is tightest at t = 1 where the gap is E_{1/2}(-1)
        assert abs(rep.min_margin - E_HALF_AT_MINUS_1) < 2e-5

    def test_margin_scales_with_initial_gap(self):
        rep = check_comparison("-1*u", 0.5, 0.0, 3.0)
        assert abs(rep.min_margin - 3.0 * E_HALF_AT_MINUS_1) < 6e-5

    def test_equal_starts_zero_margin(self):
        rep = check_comparison("-1*u", 0.5, 1.5, 1.5)
        assert rep.min_margin == 0.0
        assert rep.violations == 0

    def test_rejects_unordered_starts(self):
        with pytest.raises(ValueError, match="u10 <= u20"):
            check_comparison("-1*u", 0.5, 2.0, 1.0)

    @pytest.mark.parametrize("gamma", [0.3, 0.5, 0.8])
    def test_positive_margin_across_orders(self, gamma):
        rep = check_comparison("sin(t) - u", gamma, 0.5, 1.0, n=128)
        assert rep.min_margin > 0.0
        assert rep.violations == 0

    def test_truncated_paths_compared_on_common_window(self):
        # log(u) turns unevaluable once u crosses 0; both paths truncate
        rep = check_comparison("log(u)", 0.5, 0.4, 0.5, n=128)
        assert rep.min_margin > 0.0
        assert rep.violations == 0


class TestCheckSubSuperSolution:
    def test_zero_forcing_identical_paths(self):
        rep = check_subsupersolution("-1*u", "0", 0.5, 1.0)
        assert rep.min_margin == 0.0
        assert rep.violations == 0

    def test_unit_forcing_separates(self):
        rep = check_subsupersolution("-1*u", "1", 0.5, 1.0)
        assert rep.min_margin > 0.0
        assert rep.violations == 0

    def test_separation_matches_closed_form(self):
        gamma = 0.5
        mesh = Mesh.graded(1.0, 512, default_grading(gamma))
        u = solve(FracProblem.from_rhs(gamma, "-1*u", 1.0, 1.0), mesh)
        v = solve(FracProblem.from_rhs(gamma, "(-1*u) + (1)", 1.0, 1.0), mesh)
        t = mesh.nodes[1:]
        want = t**gamma * np.array(
            [ml(gamma, -float(s) ** gamma, beta=1.0 + gamma) for s in t]
        )
        assert np.abs((v.values - u.values)[1:] - want).max() < 1e-5

    def test_forced_gap_on_pre_blowup_window(self):
        rep = check_subsupersolution("u^2", "0.1", 0.5, 1.0, T=0.15, n=512)
        assert rep.min_margin > 0.0
        assert rep.violations == 0

    def test_time_dependent_forcing(self):
        # the forced gap grows like t^{2+gamma}, which underflows
        # ulp(u0) on the first graded cells; 0.0 there is honest
        rep = check_subsupersolution("-1*u", "t^2", 0.5, 1.0)
        assert rep.min_margin >= 0.0
        assert rep.violations == 0

    def test_rejects_negative_forcing(self):
        with pytest.raises(ValueError, match="negative at"):
            check_subsupersolution("-1*u", "-1", 0.5, 1.0)

    def test_rejects_sign_indefinite_forcing(self):
        with pytest.raises(ValueError, match="negative at"):
            check_subsupersolution("-1*u", "u", 0.5, 1.0)

    def test_rejects_unevaluable_forcing(self):
        with pytest.raises(ValueError, match="nowhere evaluable"):
            check_subsupersolution("-1*u", "log(-1 - t^2)", 0.5, 1.0)


class TestStabilityExperiment:
    def test_linear_decay_matches_ml(self):
        rep = stability_experiment("-1*u", 0.5, 1.0, 2.0)
        t = rep.y_path.mesh.nodes
        exact = np.array([ml(0.5, -float(s) ** 0.5) for s in t])
        assert np.abs(rep.y_path.values - exact).max() < 2e-5
        assert rep.min_y == rep.y_path.values[-1] > 0.0
        assert rep.sup_ratio == 1.0
        assert rep.ml_envelope_ok
        assert abs(rep.lipschitz - 1.0) < 1e-6
        assert rep.eq_residual < 1e-4
        assert rep.underflow_nodes == ()

    def test_zero_rhs_frozen_ratio(self):
        rep = stability_experiment("0", 0.5, 1.0, 2.0)
        assert np.all(rep.y_path.values == 1.0)
        assert rep.eq_residual == 0.0
        assert rep.min_y == rep.sup_ratio == 1.0
        assert rep.ml_envelope_ok

    def test_growth_tracks_ml_from_below(self):
        rep = stability_experiment("u", 0.5, 1.0, 2.0)
        t = rep.y_path.mesh.nodes
        exact = np.array([ml(0.5, float(s) ** 0.5) for s in t])
        assert np.abs(rep.y_path.values - exact).max() < 1e-3
        assert rep.y_path.values[-1] > 4.5  # E_{1/2}(1) ~ 5.01
        assert rep.ml_envelope_ok
        assert rep.min_y == 1.0

    def test_bistable_drift(self):
        rep = stability_experiment("u - u^3", 0.6, 0.1, 0.11, T=2.0)
        assert rep.min_y > 0.0
        assert math.isfinite(rep.sup_ratio)
        assert rep.sup_ratio < 5.0
        assert rep.ml_envelope_ok
        assert rep.eq_residual < 1e-3

    @pytest.mark.parametrize("f", ["-1*u", "u", "sin(u)"])
    def test_ratio_starts_at_one(self, f):
        rep = stability_experiment(f, 0.5, 0.5, 1.0, n=64)
        assert rep.y_path.values[0] == 1.0

    def test_orientation_of_gap_is_irrelevant(self):
        rep = stability_experiment("-1*u", 0.5, 2.0, 1.0)
        assert rep.y_path.values[0] == 1.0
        assert abs(rep.min_y - E_HALF_AT_MINUS_1) < 2e-5

    def test_rejects_equal_starts(self):
        with pytest.raises(ValueError, match="distinct initial values"):
            stability_experiment("-1*u", 0.5, 1.0, 1.0)


class TestCheckResolvent:
    def test_reference_case(self):
        rep = check_resolvent(1.0, 0.5, 1.0, 4096)
        assert rep.max_residual <= 1e-3  # contract ceiling
        assert rep.max_residual < 1e-5  # measured 1.96e-6
        assert rep.min_r > 0.0
        assert rep.ml_identity_dev <= 1e-3
        assert rep.ml_identity_dev < 1e-6  # measured 6.4e-8
        assert rep.lam == 1.0 and rep.gamma == 0.5 and rep.T == 1.0

    def test_min_r_is_tail_value(self):
        # r_lam decreases, so the minimum sits at the horizon
        rep = check_resolvent(1.0, 0.5, 1.0, 512)
        tail = resolvent(ResolventQuery(lam=1.0, gamma=0.5, t=1.0))
        assert rep.min_r == pytest.approx(tail, rel=1e-12)

    def test_residual_halves_under_doubling(self):
        res = [check_resolvent(1.0, 0.5, 1.0, n).max_residual for n in (1024, 2048, 4096)]
        assert res[0] / res[1] > 1.8
        assert res[1] / res[2] > 1.8

    def test_identity_dev_converges(self):
        dev = [check_resolvent(1.0, 0.5, 1.0, n).ml_identity_dev for n in (1024, 2048, 4096)]
        assert dev[0] / dev[1] > 1.8
        assert dev[1] / dev[2] > 1.8

    @pytest.mark.parametrize(
        "lam, gamma, ceiling",
        [(1.0, 0.3, 1e-3), (2.0, 0.8, 1e-4)],
    )
    def test_other_orders(self, lam, gamma, ceiling):
        rep = check_resolvent(lam, gamma, 1.0, 1024)
        assert rep.max_residual < ceiling
        assert rep.min_r > 0.0
        assert rep.ml_identity_dev < 1e-4

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError, match="lam > 0"):
            check_resolvent(0.0, 0.5)


class TestMaxPrincipleDefect:
    def test_steady_forcing_unit_derivative(self):
        # u solves D u = 1, every node is a running maximum
        path = solve(FracProblem.from_rhs(0.5, "1", 0.0, 1.0), Mesh.uniform(1.0, 256))
        d = max_principle_defect(path, 0.5)
        assert abs(d - 1.0) < 1e-2

    def test_forced_oscillation(self):
        path = solve(
            FracProblem.from_rhs(0.5, "sin(6.283185307179586*t)", 0.0, 3.0),
            Mesh.uniform(3.0, 512),
        )
        d = max_principle_defect(path, 0.5)
        assert 0.0 <= d < 1.0

    def test_decaying_path_is_vacuous(self):
        path = solve(
            FracProblem.from_rhs(0.5, "-1*u", 1.0, 1.0), Mesh.graded(1.0, 128, 4.0)
        )
        assert max_principle_defect(path, 0.5) == math.inf

    def test_flat_path_zero_defect(self):
        path = solve(FracProblem.from_rhs(0.5, "0", 2.0, 1.0), Mesh.uniform(1.0, 64))
        assert max_principle_defect(path, 0.5) == 0.0

    @given(
        data=st.data(),
        gamma=st.floats(0.05, 0.95),
        n=st.integers(4, 48),
    )
    @settings(max_examples=60, deadline=None)
    def test_nonnegative_for_arbitrary_data(self, data, gamma, n):
        # summation by parts makes this a mesh-free identity, so any
        # sampled values on any mesh must pass up to roundoff
        gaps = data.draw(
            st.lists(st.floats(1e-6, 2.0), min_size=n, max_size=n)
        )
        vals = data.draw(
            st.lists(st.floats(-50.0, 50.0), min_size=n + 1, max_size=n + 1)
        )
        mesh = Mesh(np.concatenate([[0.0], np.cumsum(gaps)]))
        path = SampledFn(mesh, np.asarray(vals))
        scale = 1.0 + np.abs(path.values).max()
        assert max_principle_defect(path, gamma) >= -1e-9 * scale


class TestCorpus:
    def test_deterministic(self):
        assert corpus_problems(5, 8) == corpus_problems(5, 8)

    def test_seed_changes_problems(self):
        assert corpus_problems(5, 8) != corpus_problems(6, 8)

    def test_problem_shapes(self):
        probs = corpus_problems()
        assert len(probs) == 100
        for k, p in enumerate(probs):
            assert p.index == k
            assert p.gamma == (0.3, 0.5, 0.8)[k % 3]
            assert 0.1 <= p.u20 - p.u10 <= 1.0
            assert max(abs(p.u10), abs(p.u20)) <= 2.5
            assert p.T == 1.0
            parse(p.rhs)  # must round-trip through the grammar

    def test_reduced_corpus_is_clean(self):
        rep = run_corpus(seed=CORPUS_SEED, trials=12, n=128)
        assert rep.comparison.trials == 12
        assert rep.comparison.violations == 0
        assert rep.comparison.min_margin > 0.0
        assert rep.min_y > 0.0
        assert rep.all_envelopes_ok
        assert len(rep.records) == 12

    def test_records_mirror_problems(self):
        probs = corpus_problems(CORPUS_SEED, 6)
        rep = run_corpus(seed=CORPUS_SEED, trials=6, n=64)
        for p, r in zip(probs, rep.records):
            assert (r.index, r.gamma, r.rhs) == (p.index, p.gamma, p.rhs)
            assert (r.u10, r.u20) == (p.u10, p.u20)
            assert r.min_margin >= VIOLATION_TOL
            assert r.min_y > 0.0

    def test_aggregate_matches_records(self):
        rep = run_corpus(seed=11, trials=6, n=64)
        assert rep.comparison.min_margin == min(r.min_margin for r in rep.records)
        assert rep.comparison.violations == sum(r.violations for r in rep.records)
        assert rep.min_y == min(r.min_y for r in rep.records)
