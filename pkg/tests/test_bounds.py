import warnings

import numpy as np
import pytest

from smdlab.bounds import (
    BoundParams,
    compute_K,
    corollary2_times,
    corollary3_times,
    params_from,
    tau,
    theorem4_bound,
    theorem5_bound,
)
from smdlab.errors import ConfigurationError, InputError
from smdlab.geometry import L2_PAIR, ConstraintSet, Geometry, MirrorMap
from smdlab.oracle import BiasModel, NoiseModel
from smdlab.problems import make_problem
from smdlab.smd import StepSchedule


def mk(alpha0=1.0, k=1.0, B0=0.0, q=0.0, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = StepSchedule(alpha0, k)
    defaults = dict(sigma_r=1.0, nu=1.0, G=1.0, D=1.0, R_sup=1.0)
    defaults.update(kw)
    return BoundParams(sched=s, B0=B0, q=q, **defaults)


def const_sched_params(alpha0, **kw):
    # alpha(t) ~ alpha0 within ~1e-11 relative over any horizon used here;
    # stands in for a constant schedule the power-law family cannot express.
    return mk(alpha0=alpha0, k=1e-12, **kw)


class TestComputeK:
    def test_no_bias_gives_one(self):
        r = compute_K(mk())
        assert r.K == 1.0 and r.err == 0.0 and not r.diverged

    def test_zeta3_configuration(self):
        # alpha = 1/t, B = 1/t^2: S = 2 * zeta(3); K frozen from a 50-digit
        # evaluation of exp(-2 zeta(3)).
        r = compute_K(mk(alpha0=1.0, k=1.0, B0=1.0, q=2.0))
        assert abs(r.K - 0.09034552377657941) < 1e-9
        assert r.err < 1e-6
        assert not r.diverged

    def test_harmonic_divergence_flagged(self):
        r = compute_K(mk(alpha0=1.0, k=0.5, B0=1.0, q=0.5))
        assert r.diverged and r.K == 0.0

    def test_monotone_in_bias_level(self):
        ks = [compute_K(mk(B0=b, q=2.0)).K for b in (0.0, 0.5, 1.0, 2.0)]
        assert ks[0] == 1.0
        assert all(ks[i] > ks[i + 1] for i in range(3))
        assert all(0.0 < k <= 1.0 for k in ks)


class TestTau:
    def test_constant_schedule_values(self):
        assert tau(const_sched_params(1.0), 5, 3.0) == pytest.approx(5.0, rel=1e-9)
        assert tau(const_sched_params(0.1), 10, 0.3) == pytest.approx(0.1, rel=1e-9)

    def test_zeta3_value(self):
        # (1/3) * K * H_10 with H_10 = 2.9289682539682538 by direct sum.
        p = mk(alpha0=1.0, k=1.0, B0=1.0, q=2.0)
        h10 = sum(1.0 / i for i in range(1, 11))
        expect = compute_K(p).K * h10 / 3.0
        assert tau(p, 10, 1.0) == pytest.approx(expect)
        assert expect == pytest.approx(0.0882, abs=5e-4)

    def test_validation(self):
        with pytest.raises(InputError):
            tau(mk(), 0, 1.0)
        with pytest.raises(InputError):
            tau(mk(), 5, 0.0)


class TestTheorem4:
    def test_hand_evaluated_two_step_case(self):
        # alpha = (1, 0.5): A = 1.5, sum alpha^2 = 1.25.
        # term1 = 3 * 1.25 / (2 * 1.5) = 1.25
        # term2 = 9 * 3 * (2 * 1.25) / 1.5^2 = 30
        p = mk(alpha0=1.0, k=1.0)
        b = theorem4_bound(p, 2, 1.0)
        assert b.raw == pytest.approx(31.25)
        assert b.clipped == 1.0

    def test_noiseless_degenerate_case(self):
        p = mk(nu=1e-300, G=1e-300)  # positive-definite stand-in for 0
        b = theorem4_bound(p, 10, 1.0)
        assert b.raw < 1e-100

    def test_eventually_nonincreasing(self):
        p = mk(alpha0=0.5, k=0.75, B0=0.5, q=0.75)
        ts = np.unique(np.logspace(3, 6, 40).astype(int))
        vals = [theorem4_bound(p, int(t), 0.5).raw for t in ts]
        assert all(vals[i] >= vals[i + 1] - 1e-15 for i in range(len(vals) - 1))

    def test_diverged_bias_is_vacuous(self):
        b = theorem4_bound(mk(B0=1.0, q=0.0), 10, 0.5)
        assert b.clipped == 1.0 and np.isinf(b.raw)

    def test_applicability_flag(self):
        p = mk()
        assert theorem4_bound(p, 5, 1.0, t0=3).applicable is True
        assert theorem4_bound(p, 2, 1.0, t0=3).applicable is False
        assert theorem4_bound(p, 2, 1.0).applicable is None


class TestTheorem5:
    def test_hand_evaluated_single_step_case(self):
        # t=1, alpha=(1): first term exp(-9/18), second exp(1.5 - 1).
        p = mk(nu1=1.0, nu2=0.0)
        b = theorem5_bound(p, 1, 3.0)
        assert b.raw == pytest.approx(np.exp(-0.5) + np.exp(0.5))
        assert b.clipped == 1.0

    def test_infinite_nu1_limit(self):
        p = mk(nu1=1e150, nu2=0.0)
        b = theorem5_bound(p, 1, 3.0)
        # First exponential degenerates to exp(0) = 1.
        assert b.raw >= 1.0
        assert np.exp(-1e-10) <= b.raw - np.exp(0.5) <= 1.0

    def test_decays_at_large_t(self):
        p = mk(alpha0=1.0, k=0.75, nu1=1.0, nu2=0.0)
        b = theorem5_bound(p, 100, 3.0)
        assert b.raw < 0.05

    def test_requires_subgaussian_constants(self):
        with pytest.raises(ConfigurationError):
            theorem5_bound(mk(), 10, 1.0)


class TestCorollary2:
    def test_t0_immediate_for_tiny_requirements(self):
        p = const_sched_params(1.0)
        assert corollary2_times(p, 3.0, 0.9).t0 == 1

    def test_noiseless_t1_immediate(self):
        p = mk(nu=1e-300)
        assert corollary2_times(p, 1.0, 0.9).t1 == 1

    def test_resubstitution(self):
        p = mk(alpha0=0.5, k=0.75, B0=0.2, q=1.5)
        r = corollary2_times(p, 1.0, 0.9)
        assert r.resolved
        c = p.cache
        import math
        E = math.exp(compute_K(p).S_hi)
        p1 = 0.1
        eps = 1.0

        def ineq0(t):
            return c.A(t) >= (3 / eps) * E * (p.R_sup + c.sum_ab(t))

        def ineq1(t):
            return c.A(t) >= (3 * p.nu**2 / (p.sigma_r * eps * p1)) * E * c.sum_a2(t)

        def ineq2(t):
            return c.A(t) ** 2 >= (18 * p.D**2 * p.kappa1 / (eps**2 * p1)) \
                * E * E * ((p.nu**2 + p.G**2) * c.sum_a2(t) + c.sum_a2b2(t))

        for t_i, ineq in ((r.t0, ineq0), (r.t1, ineq1), (r.t2, ineq2)):
            assert ineq(t_i)
            if t_i > 1:
                assert not ineq(t_i - 1)
        assert r.t_star == max(r.t0, r.t1, r.t2)

    def test_validation(self):
        with pytest.raises(InputError):
            corollary2_times(mk(), 0.5, 1.5)
        with pytest.raises(InputError):
            corollary2_times(mk(), -1.0, 0.9)
        with pytest.raises(ConfigurationError):
            corollary2_times(mk(B0=1.0, q=0.0), 0.5, 0.9)


class TestCorollary3:
    def test_t0_matches_corollary2(self):
        for cfg in (dict(alpha0=1.0, k=0.75),
                    dict(alpha0=0.5, k=1.0, B0=0.5, q=0.5)):
            p = mk(nu1=1.0, nu2=1.0, **cfg)
            assert corollary3_times(p, 0.5, 0.9).t0 == \
                corollary2_times(p, 0.5, 0.9).t0

    def test_tiny_nu1_t1_immediate(self):
        p = mk(alpha0=1.0, k=0.75, nu1=1e-300, nu2=0.0)
        assert corollary3_times(p, 1.0, 0.9).t1 == 1

    def test_resubstitution(self):
        import math
        p = mk(alpha0=0.5, k=0.75, B0=0.2, q=1.5, nu1=1.0, nu2=np.sqrt(3.0))
        eps, conf = 1.0, 0.9
        r = corollary3_times(p, eps, conf)
        assert r.resolved
        c = p.cache
        E = math.exp(compute_K(p).S_hi)
        log_term = math.log(2.0 / (1.0 - conf))

        def ineq1(t):
            return c.A(t) ** 2 >= (18 * p.D**2 * p.nu1**2 / eps**2) \
                * log_term * E * E * c.sum_a2(t)

        def ineq2(t):
            return c.A(t) >= (3 / eps) * E * (
                log_term + (p.kappa1 / (2 * p.sigma_r)) * (
                    p.G**2 * c.sum_a2(t) + c.sum_a2b2(t)
                    + (p.nu2**2 * p.kappa1 / (4 * p.sigma_r)) * c.sum_a4(t)
                )
            )

        for t_i, ineq in ((r.t1, ineq1), (r.t2, ineq2)):
            assert ineq(t_i)
            if t_i > 1:
                assert not ineq(t_i - 1)

    def test_log_vs_reciprocal_scaling(self):
        # Corollary 3's thresholds grow like ln(2/p1); Corollary 2's like
        # 1/p1.  The advantage must widen as p -> 1.
        # Small nu keeps Corollary 2's 1/p1-scaled t1 inside the search
        # horizon even at p = 0.999.
        p = mk(alpha0=0.5, k=0.6, B0=0.2, q=1.5, nu=0.1, nu1=0.1,
               nu2=0.02)
        ratios = []
        for conf in (0.9, 0.99, 0.999):
            t1_c2 = corollary2_times(p, 1.0, conf).t1
            t1_c3 = corollary3_times(p, 1.0, conf).t1
            assert t1_c2 is not None and t1_c3 is not None
            ratios.append(t1_c2 / t1_c3)
        assert ratios[0] < ratios[1] < ratios[2]
        assert corollary3_times(p, 1.0, 0.999).t1 < \
            corollary2_times(p, 1.0, 0.999).t1


class TestParamsFrom:
    def test_wiring(self):
        box = ConstraintSet.box([-1.0, -1.0], [1.0, 1.0])
        geom = Geometry(MirrorMap("euclidean"), box)
        prob = make_problem("quadratic", box, L2_PAIR, a_diag=np.ones(2),
                            b_lin=np.zeros(2))
        noise = NoiseModel(sigma=0.5, nu=2.0, nu1=0.5)
        bias = BiasModel(kind="fixed_direction", B0=0.3, q=1.0,
                         direction=np.array([1.0, 0.0]))
        p = params_from(prob, geom, noise, bias, StepSchedule(0.5, 0.75))
        assert p.nu == 2.0 and p.nu1 == 0.5
        assert p.B0 == 0.3 and p.q == 1.0
        assert p.G == pytest.approx(np.sqrt(2.0))
        assert p.D == pytest.approx(2 * np.sqrt(2.0))
        assert p.R_sup == pytest.approx(4.0)
        assert p.kappa1 == 3.0

    def test_a_ceiling_precondition(self):
        with pytest.raises(ConfigurationError):
            mk(a_ceiling=1e6)
        p = mk()  # default satisfies the precondition with equality
        assert p.a_ceiling == pytest.approx(2.0 / 3.0)

    def test_positive_constant_validation(self):
        with pytest.raises(InputError):
            mk(D=0.0)
        with pytest.raises(InputError):
            mk(nu=-1.0)
