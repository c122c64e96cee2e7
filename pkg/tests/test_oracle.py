import numpy as np
import pytest

from smdlab import oracle, rng
from smdlab.errors import ConfigurationError, InputError
from smdlab.geometry import L2_PAIR, ConstraintSet
from smdlab.oracle import (
    BiasModel,
    NoiseModel,
    SmoothingSchedule,
    bias_bound,
    bias_vector,
    estimate_moments,
    sample,
    sub_gaussian_check,
    summability_partial_sum,
    zo_sample,
)
from smdlab.problems import make_problem

BOX = ConstraintSet.box([-1.0, -1.0], [1.0, 1.0])
QUAD = make_problem("quadratic", BOX, L2_PAIR, a_diag=np.ones(2),
                    b_lin=np.zeros(2))
NO_BIAS = BiasModel()
NO_NOISE = NoiseModel(sigma=0.0)


class TestBiasBound:
    def test_schedule_values(self):
        assert bias_bound(NO_BIAS, 17) == 0.0
        b = BiasModel(kind="fixed_direction", B0=1.0, q=2.0,
                      direction=np.array([1.0, 0.0]))
        assert bias_bound(b, 4) == 0.0625
        zo = BiasModel(kind="zeroth_order", c_zo=2.0,
                       smoothing=SmoothingSchedule(mu0=1.0, r=1.0))
        assert bias_bound(zo, 10) == pytest.approx(0.2)

    def test_bias_vector_has_exact_dual_norm(self):
        rng_ = np.random.default_rng(0)
        b = BiasModel(kind="fixed_direction", B0=0.7, q=0.5,
                      direction=np.array([3.0, -4.0]))
        adv = BiasModel(kind="adversarial", B0=0.7, q=0.5)
        for t in (1, 2, 9):
            for model in (b, adv):
                x = BOX.sample(rng_)
                v = bias_vector(model, L2_PAIR, x, QUAD.x_star, t)
                assert L2_PAIR.dual(v) == pytest.approx(bias_bound(model, t))

    def test_validation(self):
        with pytest.raises(InputError):
            bias_bound(NO_BIAS, 0)
        with pytest.raises(ConfigurationError):
            BiasModel(kind="fixed_direction")
        with pytest.raises(ConfigurationError):
            BiasModel(kind="zeroth_order")
        with pytest.raises(ConfigurationError):
            BiasModel(kind="wobble")
        with pytest.raises(ConfigurationError):
            NoiseModel(kind="cauchy")


class TestSample:
    def test_zero_noise_is_exact_subgradient(self):
        g = rng.trial_generator(0, 0)
        x = np.array([0.4, -0.2])
        got = sample(NO_BIAS, NO_NOISE, QUAD, x, 3, g)
        np.testing.assert_array_equal(got, QUAD.subgrad(x))

    def test_fixed_direction_schedule(self):
        g = rng.trial_generator(0, 1)
        b = BiasModel(kind="fixed_direction", B0=1.0, q=1.0,
                      direction=np.array([1.0, 0.0]))
        x = np.array([0.4, -0.2])
        got = sample(b, NO_NOISE, QUAD, x, 2, g)
        np.testing.assert_allclose(got, QUAD.subgrad(x) + [0.5, 0.0])

    def test_gaussian_mean_matches_center(self):
        n = 10**6
        noise = NoiseModel(sigma=1.0)
        b = BiasModel(kind="fixed_direction", B0=0.5, q=1.0,
                      direction=np.array([0.0, 1.0]))
        x = np.array([0.3, 0.1])
        u = rng.trial_generator(0, 2).random((n, rng.draws_per_step(2)))
        zeta = oracle.noise_from_uniforms(noise, u, 2)
        draws = QUAD.subgrad(x) + bias_vector(b, L2_PAIR, x, QUAD.x_star, 4) + zeta
        center = QUAD.subgrad(x) + bias_vector(b, L2_PAIR, x, QUAD.x_star, 4)
        se = 1.0 / np.sqrt(n)
        assert np.all(np.abs(draws.mean(axis=0) - center) < 4 * se)

    def test_infeasible_point_rejected(self):
        with pytest.raises(InputError):
            sample(NO_BIAS, NO_NOISE, QUAD, [2.0, 0.0], 1, rng.trial_generator(0, 0))


class TestNoiseLaws:
    def test_zero_mean_all_kinds(self):
        n = 10**6
        u = rng.trial_generator(1, 0).random((n, rng.draws_per_step(2)))
        for noise, sd in (
            (NoiseModel(sigma=0.8), 0.8),
            (NoiseModel(kind="bounded_uniform", radius=1.0), 0.5),
            (NoiseModel(kind="student_t", dof=5.0, scale=0.5), 0.7),
        ):
            z = oracle.noise_from_uniforms(noise, u, 2)
            se = sd / np.sqrt(n)
            assert np.all(np.abs(z.mean(axis=0)) < 4 * se)

    def test_bounded_uniform_stays_in_ball(self):
        u = rng.trial_generator(1, 1).random((10**4, rng.draws_per_step(3)))
        z = oracle.noise_from_uniforms(NoiseModel(kind="bounded_uniform",
                                                  radius=0.7), u, 3)
        assert np.all(np.linalg.norm(z, axis=1) <= 0.7 + 1e-12)


class TestMoments:
    def test_deterministic_oracle(self):
        m = estimate_moments(NO_BIAS, NO_NOISE, QUAD, [0.2, 0.2], 1, 10_000,
                             rng.trial_generator(2, 0))
        assert m.mean_dev < 1e-12  # accumulation rounding only
        assert m.m4 < 1e-30
        assert m.nu2_hat < 1e-15

    def test_gaussian_fourth_moment_dim1(self):
        # E[zeta^4] = 3 sigma^4 for a standard normal.
        box1 = ConstraintSet.box([-1.0], [1.0])
        p1 = make_problem("quadratic", box1, L2_PAIR, a_diag=np.ones(1))
        m = estimate_moments(NO_BIAS, NoiseModel(sigma=1.0), p1, [0.0], 1,
                             200_000, rng.trial_generator(2, 1))
        assert abs(m.m4 - 3.0) < 0.15
        assert abs(m.nu2_hat - np.sqrt(3.0)) < 0.1

    def test_declared_nu_respected(self):
        # E||gtilde||^2 = ||g + b||^2 + dim sigma^2 <= G^2 + B^2 + 2 sigma^2.
        noise = NoiseModel(sigma=1.0, nu=np.sqrt(QUAD.g_bound**2 + 2.0) * 1.1)
        m = estimate_moments(NO_BIAS, noise, QUAD, [0.5, 0.5], 1, 100_000,
                             rng.trial_generator(2, 2))
        assert m.m2 <= noise.nu**2

    def test_small_n_rejected(self):
        with pytest.raises(InputError):
            estimate_moments(NO_BIAS, NO_NOISE, QUAD, [0.0, 0.0], 1, 100,
                             rng.trial_generator(2, 3))


class TestZerothOrder:
    def test_quadratic_mean_is_gradient(self):
        # For f = 0.5 x'x the smoothing bias vanishes: E[((f(x+mu u)-f(x))/mu) u] = x.
        g = rng.trial_generator(3, 0)
        x = np.array([0.3, -0.4])
        n = 200_000
        draws = np.array([zo_sample(QUAD, x, 0.1, g) for _ in range(n)])
        se = draws.std(axis=0) / np.sqrt(n)
        assert np.all(np.abs(draws.mean(axis=0) - x) < 4 * se)

    def test_constant_function_gives_zero(self):
        # A single zero plane makes f identically zero, so every finite
        # difference vanishes.
        p = make_problem("pwl_max", BOX, L2_PAIR,
                         planes_a=np.zeros((1, 2)), planes_c=np.zeros(1))
        g = rng.trial_generator(3, 1)
        for _ in range(10):
            np.testing.assert_array_equal(
                zo_sample(p, np.array([0.1, 0.2]), 0.05, g), np.zeros(2)
            )

    def test_bad_mu(self):
        with pytest.raises(InputError):
            zo_sample(QUAD, [0.0, 0.0], 0.0, rng.trial_generator(3, 2))


class TestSubGaussian:
    def test_gaussian_passes(self):
        noise = NoiseModel(sigma=0.5, nu1=0.5)
        diag = sub_gaussian_check(noise, 2, 10**6, rng.trial_generator(4, 0))
        assert diag.passed

    def test_student_t3_negative_control_fails(self):
        # Declared as if it were Gaussian with sigma = scale; the dof-3
        # power tail must blow through that bound.
        noise = NoiseModel(kind="student_t", dof=3.0, scale=1.0, nu1=1.0)
        diag = sub_gaussian_check(noise, 2, 10**6, rng.trial_generator(4, 1))
        assert not diag.passed
        assert any(mult == 3.0 for mult, *_ in diag.details)

    def test_needs_declared_nu1(self):
        with pytest.raises(ConfigurationError):
            sub_gaussian_check(NoiseModel(sigma=1.0), 2, 10**4,
                               rng.trial_generator(4, 2))


class TestSummability:
    def test_convergent_and_divergent(self):
        b = BiasModel(kind="fixed_direction", B0=1.0, q=0.75,
                      direction=np.array([1.0]))
        partial, tail = summability_partial_sum(1.0, 0.75, b)
        assert np.isfinite(partial) and np.isfinite(tail)
        # k + q = 1: harmonic boundary, reported as infinite tail.
        _, tail = summability_partial_sum(1.0, 0.25, b)
        assert tail == np.inf

    def test_no_bias_sums_to_zero_tail(self):
        partial, tail = summability_partial_sum(1.0, 1.0, NO_BIAS)
        assert partial == 0.0 and tail == 0.0
