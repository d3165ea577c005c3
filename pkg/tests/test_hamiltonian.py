"""Hamiltonian evaluators: inversion oracle, duality identities, audits."""

import math

import numpy as np
import pytest

from mfglab.grid import TorusGrid
from mfglab.hamiltonian import (HamiltonianModel, audit_assumptions, blend_eval,
                                check_parameter_admissibility, coefficient_field,
                                conjugate_exponent, example_eval,
                                example_lagrangian, potential_eval, power_eval,
                                solve_optimal_speed)

SQRT2 = math.sqrt(2.0)


def speed_forward(s, a, gp):
    # the optimality relation, written out independently of the solver
    return gp * a * s * (1.0 + s * s) ** (0.5 * gp - 1.0)


class TestOptimalSpeed:
    def test_zero_momentum_gives_zero_speed(self):
        assert solve_optimal_speed(0.0, 1.0, 3.0) == 0.0

    def test_known_value(self):
        # forward map at s = 1, a = 1, gamma' = 3 gives |p| = 3 sqrt(2)
        s = solve_optimal_speed(3.0 * SQRT2, 1.0, 3.0)
        assert abs(s - 1.0) < 1e-10

    @pytest.mark.parametrize("gp,a", [(3.0, 1.0), (5.0, 0.7), (2.5, 1.4)])
    def test_round_trip_on_random_speeds(self, gp, a):
        rng = np.random.default_rng(42)
        s_true = rng.uniform(0.0, 10.0, size=100) + 1e-8
        p = speed_forward(s_true, a, gp)
        s_back = solve_optimal_speed(p, a, gp)
        assert np.max(np.abs(s_back - s_true)) < 1e-10

    def test_residual_tolerance(self):
        rng = np.random.default_rng(1)
        p = rng.uniform(0.0, 60.0, size=200)
        s = solve_optimal_speed(p, 1.3, 4.0)
        assert np.max(np.abs(speed_forward(s, 1.3, 4.0) - p)) < 1e-12

    def test_input_validation(self):
        with pytest.raises(ValueError):
            solve_optimal_speed(-1.0, 1.0, 3.0)
        with pytest.raises(ValueError):
            solve_optimal_speed(1.0, -1.0, 3.0)
        with pytest.raises(ValueError):
            solve_optimal_speed(1.0, 1.0, 1.5)


class TestExampleHamiltonian:
    def test_zero_momentum(self):
        a = 1.7
        ev = example_eval(np.zeros(2), a, 1.25)
        assert ev.H == -a  # exact: the supremum sits at v = 0
        assert np.all(ev.DpH == 0.0)
        assert np.all(ev.v_opt == 0.0)

    def test_known_value(self):
        # gamma' = 3  <=>  gamma = 1.5; |p| = 3 sqrt(2) puts the optimum at s = 1
        gamma = 1.5
        assert conjugate_exponent(gamma) == pytest.approx(3.0)
        ev = example_eval(np.array([3.0 * SQRT2, 0.0]), 1.0, gamma)
        assert abs(ev.H - SQRT2) < 1e-10
        assert abs(ev.s_opt - 1.0) < 1e-10

    @pytest.mark.parametrize("gamma,a", [(1.25, 0.8), (1.5, 1.0), (1.8, 1.3)])
    def test_gradient_matches_finite_differences(self, gamma, a):
        rng = np.random.default_rng(7)
        step = 1e-5
        for _ in range(10):
            p = rng.uniform(-4.0, 4.0, size=2)
            ev = example_eval(p, a, gamma)
            for i in range(2):
                dp = np.zeros(2)
                dp[i] = step
                hp = example_eval(p + dp, a, gamma).H
                hm = example_eval(p - dp, a, gamma).H
                fd = (hp - hm) / (2.0 * step)
                assert abs(fd - ev.DpH[i]) < 1e-6 * max(1.0, abs(ev.DpH[i]))

    @pytest.mark.parametrize("gamma,a", [(1.25, 0.8), (1.5, 1.0)])
    def test_hessian_matches_finite_differences(self, gamma, a):
        rng = np.random.default_rng(8)
        step = 1e-5
        for _ in range(6):
            p = rng.uniform(-4.0, 4.0, size=2)
            ev = example_eval(p, a, gamma)
            for j in range(2):
                dp = np.zeros(2)
                dp[j] = step
                gp_ = example_eval(p + dp, a, gamma).DpH
                gm_ = example_eval(p - dp, a, gamma).DpH
                fd = (gp_ - gm_) / (2.0 * step)
                assert np.max(np.abs(fd - ev.DppH[:, j])) < 1e-6 * max(
                    1.0, np.max(np.abs(ev.DppH)))

    def test_legendre_duality_identities(self):
        """H = -v.p - L(v), p = -DvL(v), DppH DvvL = I, DpH.p - H = L."""
        rng = np.random.default_rng(21)
        gamma, a = 1.25, 1.1
        gp = conjugate_exponent(gamma)
        for _ in range(100):
            p = rng.uniform(-8.0, 8.0, size=2)
            ev = example_eval(p, a, gamma)
            v, s = ev.v_opt, ev.s_opt
            L = example_lagrangian(v, a, gamma)
            scale = max(1.0, abs(ev.H))
            # Legendre value
            assert abs(ev.H - (-np.dot(v, p) - L)) < 1e-10 * scale
            # first-order optimality: p = -DvL(v)
            DvL = gp * a * v * (1.0 + s * s) ** (0.5 * gp - 1.0)
            assert np.max(np.abs(p + DvL)) < 1e-10 * max(1.0, np.linalg.norm(p))
            # inverse-Hessian relation
            eye = np.eye(2)
            DvvL = gp * a * (1.0 + s * s) ** (0.5 * gp - 1.0) * (
                eye + (gp - 2.0) * np.outer(v, v) / (1.0 + s * s))
            assert np.max(np.abs(ev.DppH @ DvvL - eye)) < 1e-10
            # the action equals DpH.p - H exactly at the matched pair
            assert abs(np.dot(ev.DpH, p) - ev.H - L) < 1e-10 * max(1.0, L)

    def test_hessian_positive_definite(self):
        rng = np.random.default_rng(2)
        P = rng.uniform(-20.0, 20.0, size=(50, 2))
        ev = example_eval(P, 0.9, 1.4)
        assert np.min(np.linalg.eigvalsh(ev.DppH)) > 0.0


class TestPowerHamiltonian:
    def test_origin_values(self):
        gamma = 1.25
        ev = power_eval(np.zeros(2), gamma)
        assert ev.H == 1.0
        assert np.all(ev.DpH == 0.0)
        assert np.allclose(ev.DppH, gamma * np.eye(2), atol=1e-15)

    def test_known_value(self):
        ev = power_eval(np.array([1.0]), 1.5)
        assert ev.H == pytest.approx(2.0**0.75, abs=1e-12)

    def test_derivatives_match_finite_differences(self):
        rng = np.random.default_rng(6)
        gamma, step = 1.25, 1e-5
        for _ in range(10):
            p = rng.uniform(-4.0, 4.0, size=2)
            ev = power_eval(p, gamma)
            for i in range(2):
                dp = np.zeros(2)
                dp[i] = step
                fd_h = (power_eval(p + dp, gamma).H - power_eval(p - dp, gamma).H) / (2 * step)
                assert abs(fd_h - ev.DpH[i]) < 1e-6 * max(1.0, abs(ev.DpH[i]))
                fd_g = (power_eval(p + dp, gamma).DpH - power_eval(p - dp, gamma).DpH) / (2 * step)
                assert np.max(np.abs(fd_g - ev.DppH[:, i])) < 1e-6


class TestBlend:
    def test_endpoints_are_exact(self):
        rng = np.random.default_rng(4)
        P = rng.uniform(-3.0, 3.0, size=(20, 2))
        a = rng.uniform(0.5, 1.5, size=20)
        ex = example_eval(P, a, 1.25)
        pw = power_eval(P, 1.25)
        b1 = blend_eval(P, a, 1.25, 1.0)
        b0 = blend_eval(P, a, 1.25, 0.0)
        assert np.array_equal(b1.H, ex.H) and np.array_equal(b1.DppH, ex.DppH)
        assert np.array_equal(b0.H, pw.H) and np.array_equal(b0.DppH, pw.DppH)

    def test_midpoint_is_arithmetic_mean(self):
        p = np.array([0.7, -1.2])
        a = 1.3
        b = blend_eval(p, a, 1.25, 0.5)
        ex = example_eval(p, a, 1.25)
        pw = power_eval(p, 1.25)
        assert b.H == pytest.approx(0.5 * (ex.H + pw.H), abs=1e-14)

    def test_affine_in_lambda(self):
        p = np.array([0.4, 0.9])
        ex = example_eval(p, 1.0, 1.25)
        pw = power_eval(p, 1.25)
        for lam in (0.25, 0.6, 0.9):
            b = blend_eval(p, 1.0, 1.25, lam)
            assert b.H == pytest.approx(lam * ex.H + (1 - lam) * pw.H, abs=1e-13)
            assert np.allclose(b.DpH, lam * ex.DpH + (1 - lam) * pw.DpH, atol=1e-13)

    def test_rejects_weight_outside_unit_interval(self):
        with pytest.raises(ValueError):
            blend_eval(np.zeros(1), 1.0, 1.25, 1.5)


class TestPotential:
    def test_pure_arctan_leg(self):
        V, DmV = potential_eval(1.0, 0.0, 0.0, "paper_literal")
        assert V == pytest.approx(math.pi / 4.0, abs=1e-15)
        assert DmV == pytest.approx(0.5, abs=1e-15)

    def test_target_potential(self):
        V, DmV = potential_eval(1.0, 0.0, 1.0, "paper_literal")
        assert V == pytest.approx(-math.pi / 4.0, abs=1e-15)
        assert DmV == pytest.approx(-0.5, abs=1e-15)

    def test_monotone_convention(self):
        V, DmV = potential_eval(1.0, 0.0, 0.0, "monotone")
        assert V == pytest.approx(-math.pi / 4.0, abs=1e-15)
        assert DmV == pytest.approx(-0.5, abs=1e-15)

    def test_monotone_sign_is_decreasing_for_every_lambda(self):
        m = np.linspace(0.2, 5.0, 50)
        for lam in (0.0, 0.3, 0.7, 1.0):
            _, DmV = potential_eval(m, 0.0, lam, "monotone")
            assert np.all(DmV < 0.0)

    def test_rejects_nonpositive_density(self):
        with pytest.raises(ValueError):
            potential_eval(0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            potential_eval(np.array([1.0, -0.5]), 0.0, 1.0)


class TestAssumptionAudit:
    def test_example_model_passes(self):
        grid = TorusGrid(1, 64)
        a = coefficient_field(grid, "sin_bump")
        model = HamiltonianModel("example", 1.25, a)
        audit = audit_assumptions(model, alpha=1.0)
        assert audit.all_passed
        zero = [c for c in audit.checks if c.name == "zero_momentum_sign"][0]
        assert zero.constants["max_H_at_zero"] == pytest.approx(-np.min(a), abs=1e-12)
        assert audit.alpha_tilde_inf >= 4.0 / 1.25

    def test_power_base_fails_zero_momentum_sign(self):
        model = HamiltonianModel("power", 1.25)
        audit = audit_assumptions(model, alpha=1.0)
        zero = [c for c in audit.checks if c.name == "zero_momentum_sign"][0]
        assert not zero.passed
        assert zero.constants["max_H_at_zero"] == pytest.approx(1.0, abs=1e-12)
        assert not audit.all_passed

    def test_blend_inherits_base_defect_away_from_target(self):
        grid = TorusGrid(1, 32)
        a = coefficient_field(grid, "sin_bump")
        half = HamiltonianModel("blend", 1.25, a, lam=0.5)
        audit = audit_assumptions(half, alpha=1.0)
        zero = [c for c in audit.checks if c.name == "zero_momentum_sign"][0]
        assert not zero.passed  # lam < 1 carries the positive base value

    def test_fitted_constants_reported(self):
        grid = TorusGrid(1, 32)
        model = HamiltonianModel("example", 1.25, coefficient_field(grid, "one"))
        audit = audit_assumptions(model, alpha=1.0)
        action = [c for c in audit.checks if c.name == "action_controls_energy"][0]
        assert action.constants["c"] > 0.0
        growth = [c for c in audit.checks if c.name == "gamma_growth"][0]
        assert growth.constants["c"] > 0.0 and np.isfinite(growth.constants["C"])


class TestAdmissibility:
    def test_default_parameters_admissible(self):
        report = check_parameter_admissibility(1.25, 1.0, 1)
        assert report.admissible
        assert all(c.margin > 0 for c in report.conditions)

    def test_steep_gamma_with_large_alpha_rejected(self):
        report = check_parameter_admissibility(1.9, 1.5, 2)
        assert not report.admissible
        names = {c.name for c in report.violated()}
        assert "gamma_alpha_coupling" in names  # 1.9 >= 1 + 1/(1+3) = 1.25

    def test_alpha_two_rejected_strictly(self):
        report = check_parameter_admissibility(1.25, 2.0, 1)
        assert not report.admissible
        assert "alpha_range" in {c.name for c in report.violated()}

    def test_interpolation_condition_vacuous_in_low_dimension(self):
        report = check_parameter_admissibility(1.25, 1.0, 2)
        cond = [c for c in report.conditions
                if c.name == "second_order_interpolation"][0]
        assert cond.satisfied and math.isinf(cond.margin)

    def test_margins_quantify_distance(self):
        report = check_parameter_admissibility(1.25, 1.0, 1)
        coupling = [c for c in report.conditions
                    if c.name == "gamma_alpha_coupling"][0]
        assert coupling.margin == pytest.approx(1 + 1 / 3 - 1.25, abs=1e-12)


class TestModelContainers:
    def test_hamiltonian_model_dispatch(self):
        rng = np.random.default_rng(14)
        p = rng.uniform(-2.0, 2.0, size=(5, 2))
        ex = HamiltonianModel("example", 1.25, 1.1)
        assert np.array_equal(ex.evaluate(p).H, example_eval(p, 1.1, 1.25).H)
        pw = HamiltonianModel("power", 1.25)
        assert np.array_equal(pw.evaluate(p).H, power_eval(p, 1.25).H)
        bl = HamiltonianModel("blend", 1.25, 1.1, lam=0.3)
        assert np.allclose(bl.evaluate(p).H, blend_eval(p, 1.1, 1.25, 0.3).H)
        assert ex.gamma_prime == pytest.approx(5.0)

    def test_hamiltonian_model_validation(self):
        with pytest.raises(ValueError):
            HamiltonianModel("quadratic", 1.25)
        with pytest.raises(ValueError):
            HamiltonianModel("example", 2.5, 1.0)
        with pytest.raises(ValueError):
            HamiltonianModel("example", 1.25, -1.0)
        with pytest.raises(ValueError):
            HamiltonianModel("blend", 1.25, 1.0)  # missing weight

    def test_potential_model(self):
        from mfglab.hamiltonian import PotentialModel

        pot = PotentialModel(0.25, sign="monotone", lam=0.5)
        V, DmV = pot.evaluate(1.0)
        V2, DmV2 = potential_eval(1.0, 0.25, 0.5, "monotone")
        assert V == V2 and DmV == DmV2
        V3, _ = pot.evaluate(1.0, lam=1.0)
        assert V3 == pytest.approx(0.25 - math.pi / 4.0, abs=1e-15)
        with pytest.raises(ValueError):
            PotentialModel(0.0, sign="sideways")


class TestCoefficientFields:
    def test_presets(self):
        grid = TorusGrid(1, 64)
        x = grid.coords()[:, 0]
        assert np.array_equal(coefficient_field(grid, "one"), np.ones(64))
        assert np.allclose(coefficient_field(grid, "sin_bump"),
                           1 + 0.5 * np.sin(2 * np.pi * x), atol=0.0)
        assert np.allclose(coefficient_field(grid, "cos_bump"),
                           0.5 * np.cos(2 * np.pi * x), atol=0.0)

    def test_inline_fourier(self):
        grid = TorusGrid(1, 64)
        x = grid.coords()[:, 0]
        f = coefficient_field(grid, "fourier:1.0,0.5,0.0,0.0,0.25")
        expected = 1 + 0.5 * np.sin(2 * np.pi * x) + 0.25 * np.cos(4 * np.pi * x)
        assert np.allclose(f, expected, atol=1e-15)

    def test_unknown_descriptor_rejected(self):
        with pytest.raises(ValueError):
            coefficient_field(TorusGrid(1, 32), "bump")
