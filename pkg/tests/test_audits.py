import math

import numpy as np
import pytest

from weakhyp.audits import (GlaeserViolationError, derivative_bound_audit,
                            embedding_check, faa_di_bruno_check,
                            glaeser_audit_a, local_glaeser_constant,
                            metric_admissibility_audit,
                            weight_admissibility_audit, _compositions_count,
                            _fd_mixed)
from weakhyp.spectral import bracket
from weakhyp.symbols import PhaseMetric, SymbolB


class TestGlaeserAudit:
    def test_matches_brute_force_oracle(self, coeff):
        # independent path: finite-difference slope on the same lattice
        ts = np.linspace(0.0, coeff.T, 24)
        xs = np.linspace(coeff.x0 - coeff.r, coeff.x0 + coeff.r, 257)
        h = 1e-7
        best = 0.0
        for t in ts:
            a = coeff.a(t, xs)
            da = (coeff.a(t, xs + h) - coeff.a(t, xs - h)) / (2 * h)
            mask = a >= 1e-14
            best = max(best, np.max(da[mask] ** 2 / a[mask]))
        rep = glaeser_audit_a(coeff)
        assert rep.constant == pytest.approx(best, rel=1e-5)

    def test_plateau_value_is_four(self, coeff):
        # on the plateau a = t + (x-x0)^2, so the ratio is 4q/(t+q) <= 4,
        # saturated at t = 0 on the plateau edge
        rep = glaeser_audit_a(coeff)
        assert rep.constant == pytest.approx(4.0, rel=1e-9)
        t_w, x_w = rep.witness
        assert t_w == 0.0
        assert abs(abs(x_w - coeff.x0) - coeff.r) < 1e-12

    def test_stable_under_grid_refinement(self, coeff):
        c1 = glaeser_audit_a(coeff, n_t=24, n_x=257).constant
        c2 = glaeser_audit_a(coeff, n_t=48, n_x=513).constant
        assert abs(c2 - c1) <= 0.1 * c1

    def test_symmetry_point_has_zero_ratio(self, coeff):
        # at x = x0 the slope vanishes while a = t > 0
        assert coeff.dx_a(0.1 * coeff.T, coeff.x0) == pytest.approx(0.0, abs=1e-15)


class TestDerivativeBoundAudit:
    def test_order_zero_ratio_is_one(self, sb_c1):
        rep = derivative_bound_audit(sb_c1, 0, 0, n_x=11, n_xi=11)
        assert rep.constant == pytest.approx(1.0, rel=1e-12)

    def test_xi_derivative_bounded_by_half_c_plus_one(self, sb_c1):
        # closed form at the corner: |d_xi b| = (c/2) b <xi>^(-1) * |xi|<xi>^(-c-1) * <xi>^c
        rep = derivative_bound_audit(sb_c1, 0, 1, n_x=21, n_xi=21)
        assert rep.constant <= sb_c1.c / 2 + 1.0

    def test_x_derivative_matches_analytic_oracle(self, sb_c1):
        # oracle: exact d_x b = -1/2 d_x a b^3, same lattice, same ratio
        coeff = sb_c1.coeff
        xs = np.linspace(coeff.x0 - coeff.r, coeff.x0 + coeff.r, 21)
        xis = np.concatenate([
            -np.geomspace(1.0, 128.0, 10), [0.0], np.geomspace(1.0, 128.0, 10)])
        b = sb_c1.b(0.0, xs[:, None], xis[None, :])
        oracle = np.max(np.abs(sb_c1.dx_b(0.0, xs[:, None], xis[None, :])) / b**2)
        rep = derivative_bound_audit(sb_c1, 1, 0, n_x=21, n_xi=21)
        assert rep.constant == pytest.approx(oracle, rel=1e-5)

    def test_constants_stable_under_sample_refinement(self, sb_c1):
        for alpha, beta in ((1, 0), (0, 1), (1, 1), (2, 0), (0, 2)):
            c1 = derivative_bound_audit(sb_c1, alpha, beta, n_x=21, n_xi=21).constant
            c2 = derivative_bound_audit(sb_c1, alpha, beta, n_x=41, n_xi=41).constant
            assert abs(c2 - c1) <= 0.1 * c1

    def test_rejects_high_orders(self, sb_c1):
        with pytest.raises(ValueError):
            derivative_bound_audit(sb_c1, 3, 2)


class TestFaaDiBruno:
    def test_composition_count_small_case(self):
        # compositions of 3 into 2 positive parts: (1,2), (2,1)
        assert _compositions_count(3, 2) == 2
        assert _compositions_count(3, 2) == math.comb(2, 1)

    def test_sqrt_coefficients(self):
        from fractions import Fraction
        c1 = Fraction(-1, 2)
        c2 = c1 * (Fraction(-1, 2) - 1)
        assert c1 == Fraction(-1, 2)
        assert c2 == Fraction(3, 4)
        assert c2 == Fraction(-1, 4) ** 2 * Fraction(math.factorial(4),
                                                     math.factorial(2))

    def test_full_check_passes(self):
        assert faa_di_bruno_check(k_max=8, alpha_max=8).passed

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            faa_di_bruno_check(k_max=9)


class TestMetricAdmissibility:
    def test_report_finite_and_uncertainty_holds(self, sb_c1):
        pm = PhaseMetric(sb_c1)
        rep = metric_admissibility_audit(pm, n_pairs=4000)
        assert rep["slow_variation"].passed
        assert rep["slow_variation"].constant >= 1.0
        assert rep["uncertainty"].passed
        assert rep["uncertainty"].constant >= 1.0 - 1e-9
        assert rep["temperance"].passed
        assert rep["temperance"].extras["N"] >= 1

    def test_uncertainty_saturated_at_c_two(self, coeff):
        pm = PhaseMetric(SymbolB(coeff, c=2.0))
        rep = metric_admissibility_audit(pm, n_pairs=1000)
        assert rep["uncertainty"].constant == pytest.approx(1.0, abs=1e-9)

    def test_invalid_c_flagged(self, coeff):
        pm = PhaseMetric(SymbolB(coeff, c=2.5, allow_invalid=True))
        rep = metric_admissibility_audit(pm, n_pairs=1000)
        assert rep["uncertainty"].constant < 1.0
        assert rep["uncertainty"].passed  # the audit correctly detects it

    def test_weight_ratio_doubling_bound(self, sb_c1):
        # at the corner b is the pure bracket power, so doubling xi costs
        # at most 2^(c/2) with margin
        for xi in (4.0, 16.0, 64.0):
            r = sb_c1.b(0.0, 0.5, 2 * xi) / sb_c1.b(0.0, 0.5, xi)
            assert r <= 2.0 ** (sb_c1.c / 2) * 1.01

    def test_weight_admissibility_fit(self, sb_c1):
        rep = weight_admissibility_audit(PhaseMetric(sb_c1), n_pairs=10_000)
        assert rep.passed
        assert rep.constant < np.inf
        assert rep.extras["N"] >= 1


class TestEmbeddings:
    @staticmethod
    def _bracket_probe(m):
        def probe(alpha, beta, x, xi):
            if alpha > 0:
                return 0.0
            h = 1e-4 * float(bracket(xi))
            return _fd_mixed(lambda _x, _xi: float(bracket(_xi)) ** m,
                             x, xi, 0, beta, 1.0, h)
        return probe

    def test_bracket_power_passes_flat_to_metric(self, sb_c1):
        m = 0.7
        rep = embedding_check(sb_c1, m, self._bracket_probe(m),
                              mode="flat_to_metric")
        assert rep.passed

    def test_higher_order_symbol_fails_budget(self, sb_c1):
        rep = embedding_check(sb_c1, 0.7, self._bracket_probe(1.7),
                              mode="flat_to_metric")
        assert not rep.passed

    def test_b_passes_metric_to_flat_with_m_half_c(self, sb_c1):
        def probe(alpha, beta, x, xi):
            hx = 1e-5 if alpha else 1.0
            hxi = 1e-4 * float(bracket(xi)) if beta else 1.0
            return _fd_mixed(lambda _x, _xi: float(sb_c1.b(0.0, _x, _xi)),
                             x, xi, alpha, beta, hx, hxi)
        rep = embedding_check(sb_c1, sb_c1.c / 2, probe, mode="metric_to_flat")
        assert rep.passed


class TestLocalGlaeser:
    def test_constant_function(self):
        rep = local_glaeser_constant(lambda x: 1.0, 0.0, 0.5, 1.0)
        assert rep.passed
        assert rep.extras["M1"] == pytest.approx(0.0, abs=1e-9)
        assert rep.extras["pointwise_max"] == pytest.approx(0.0, abs=1e-9)

    def test_linear_function_pointwise_constant(self):
        # f(x) = x on the window [x0, x0 + 1]: max of 1/x is 1/x0
        x0 = 2.0
        rep = local_glaeser_constant(lambda x: x, x0 + 0.5, 0.5, 0.8,
                                     df=lambda x: 1.0, d2f=lambda x: 0.0)
        assert rep.extras["pointwise_max"] == pytest.approx(1.0 / x0, rel=1e-6)
        assert rep.passed

    def test_quadratic_saturates_global_constant(self):
        # brute-force max of |f'|^2 / f for f = (x - 1)^2 is exactly 4
        rep = local_glaeser_constant(lambda x: (x - 1.0) ** 2, 1.0, 0.5, 1.0,
                                     df=lambda x: 2.0 * (x - 1.0),
                                     d2f=lambda x: 2.0)
        assert rep.extras["pointwise_max"] == pytest.approx(4.0, rel=1e-9)
        assert rep.constant >= 4.0
        assert rep.passed

    def test_violation_detected(self):
        # f touching zero with nonzero slope breaks the inequality
        with pytest.raises(GlaeserViolationError):
            local_glaeser_constant(lambda x: abs(x), 0.0, 0.5, 1.0,
                                   df=lambda x: 1.0,
                                   d2f=lambda x: 0.0)
