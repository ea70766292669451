"""Latent dynamics: network, flow maps vs closed-form oracles, stochastic transition."""

import numpy as np
import pytest
from scipy.linalg import expm

from roadenkf.autodiff import RngStream, Tensor, grad_check, matmul, mul, sum as tsum, transpose
from roadenkf.dynamics import (
    DiagNoise,
    FcNet2,
    FlowConfig,
    fc2_apply,
    init_diag_noise,
    init_fc2,
    integrate,
    latent_transition,
    sample_initial_latent,
)
from roadenkf.errors import DimensionError, DivergenceError

from helpers import rng


def zeros_net(d_in, d_out, hidden=4, b2=None):
    return FcNet2(
        w1=Tensor(np.zeros((hidden, d_in)), requires_grad=True),
        b1=Tensor(np.zeros(hidden), requires_grad=True),
        w2=Tensor(np.zeros((d_out, hidden)), requires_grad=True),
        b2=Tensor(b2 if b2 is not None else np.zeros(d_out), requires_grad=True),
    )


class TestFcNet2:
    def test_zero_weights_constant_output(self):
        c = np.array([1.5, -2.0])
        net = zeros_net(3, 2, b2=c)
        out = fc2_apply(net, Tensor(rng(0).standard_normal((5, 3))))
        np.testing.assert_array_equal(out.data, np.tile(c, (5, 1)))

    def test_relu_identity_trick(self):
        # W1 = [I; -I], W2 = [I, -I]: relu(x) - relu(-x) = x
        d = 3
        net = FcNet2(
            w1=Tensor(np.vstack([np.eye(d), -np.eye(d)])),
            b1=Tensor(np.zeros(2 * d)),
            w2=Tensor(np.hstack([np.eye(d), -np.eye(d)])),
            b2=Tensor(np.zeros(d)),
        )
        x = rng(1).standard_normal((7, d))
        np.testing.assert_allclose(fc2_apply(net, Tensor(x)).data, x, rtol=1e-14)

    def test_gradient_matches_finite_differences(self):
        net = init_fc2(3, 3, hidden=5, stream=RngStream(key=2))
        x0 = rng(3).standard_normal((4, 3))
        coeff = Tensor(rng(4).standard_normal((4, 3)))

        def f(params):
            w1, b1, w2, b2 = params
            out = fc2_apply(FcNet2(w1, b1, w2, b2), Tensor(x0))
            return tsum(mul(out, coeff))

        err = grad_check(f, [net.w1, net.b1, net.w2, net.b2], eps=1e-5)
        assert err < 1e-5

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            fc2_apply(zeros_net(3, 2), Tensor(np.ones((4, 5))))


class TestIntegrate:
    def test_zero_field_fixed_point(self):
        x0 = rng(5).standard_normal((2, 3))
        out = integrate(lambda x: x * 0.0, Tensor(x0), FlowConfig(0.1, 0.05))
        np.testing.assert_array_equal(out.data, x0)

    def test_scalar_decay_matches_exponential(self):
        cfg = FlowConfig(dt_obs=0.1, dt_int=0.05, scheme="rk4")
        x0 = np.array([[2.0]])
        out = integrate(lambda x: -x, Tensor(x0), cfg)
        assert abs(out.item() - 2.0 * np.exp(-0.1)) < 1e-7

    def test_linear_field_matches_matrix_exponential(self):
        a = rng(6).standard_normal((4, 4)) * 0.5
        cfg = FlowConfig(dt_obs=0.1, dt_int=0.01, scheme="rk4")
        x0 = rng(7).standard_normal((1, 4))
        out = integrate(lambda x: matmul(x, Tensor(a.T)), Tensor(x0), cfg)
        oracle = x0 @ expm(0.1 * a).T
        assert np.abs(out.data - oracle).max() < 1e-6

    def test_rk4_order_under_step_halving(self):
        # quartic-order local error: halving dt shrinks flow error ~16x
        a = rng(8).standard_normal((3, 3)) * 0.8
        x0 = rng(9).standard_normal((1, 3))
        oracle = x0 @ expm(0.2 * a).T

        def err(dt):
            cfg = FlowConfig(dt_obs=0.2, dt_int=dt, scheme="rk4")
            out = integrate(lambda x: matmul(x, Tensor(a.T)), Tensor(x0), cfg)
            return np.abs(out.data - oracle).max()

        factor = err(0.05) / err(0.025)
        assert 8.0 < factor < 32.0

    def test_euler_scheme(self):
        cfg = FlowConfig(dt_obs=0.1, dt_int=0.1, scheme="euler")
        out = integrate(lambda x: -x, Tensor(np.array([[1.0]])), cfg)
        assert out.item() == pytest.approx(0.9)

    def test_divergence_error_carries_substep(self):
        cfg = FlowConfig(dt_obs=1.0, dt_int=0.25, scheme="euler")

        def blowup(x):
            return mul(mul(x, x), x) * 1e8

        with pytest.raises(DivergenceError) as exc:
            integrate(blowup, Tensor(np.array([[10.0]])), cfg)
        assert 0 <= exc.value.substep < 4

    def test_invalid_ratio_rejected(self):
        with pytest.raises(DimensionError):
            FlowConfig(dt_obs=0.1, dt_int=0.03)


class TestLatentTransition:
    def test_noise_free_limit_is_deterministic_flow(self):
        net = init_fc2(2, 2, hidden=8, stream=RngStream(key=10))
        quiet = DiagNoise(Tensor(np.full(2, -2000.0)))
        z = Tensor(rng(11).standard_normal((3, 5, 2)))
        cfg = FlowConfig(0.1, 0.05)
        out1 = latent_transition(net, quiet, z, cfg, RngStream(key=1))
        out2 = integrate(lambda s: fc2_apply(net, s), z, cfg)
        np.testing.assert_array_equal(out1.data, out2.data)

    def test_zero_field_noise_covariance(self):
        sigma = 0.7
        noise = DiagNoise(Tensor(np.full(2, np.log(sigma))))
        z = Tensor(np.zeros((1, 100000, 2)))
        out = latent_transition(
            zeros_net(2, 2), noise, z, FlowConfig(0.1, 0.1), RngStream(key=12)
        ).data[0]
        cov = np.cov(out.T)
        np.testing.assert_allclose(cov, sigma**2 * np.eye(2), atol=0.01)

    def test_fixed_stream_reproducible(self):
        net = init_fc2(2, 2, hidden=4, stream=RngStream(key=13))
        noise = init_diag_noise(2)
        z = Tensor(rng(14).standard_normal((4, 2)))
        a = latent_transition(net, noise, z, FlowConfig(0.1, 0.05), RngStream(key=3, counter=5 << 64))
        b = latent_transition(net, noise, z, FlowConfig(0.1, 0.05), RngStream(key=3, counter=5 << 64))
        np.testing.assert_array_equal(a.data, b.data)

    def test_shape_preserved(self):
        net = init_fc2(3, 3, hidden=4, stream=RngStream(key=15))
        out = latent_transition(
            net, init_diag_noise(3), Tensor(np.zeros((2, 7, 3))), FlowConfig(0.1, 0.05), RngStream(key=4)
        )
        assert out.shape == (2, 7, 3)


class TestSampleInitial:
    def test_zero_sigma_at_origin(self):
        out = sample_initial_latent(3, 10, 0.0, RngStream(key=5))
        np.testing.assert_array_equal(out.data, np.zeros((10, 3)))

    def test_monte_carlo_moments(self):
        out = sample_initial_latent(2, 100000, 1.5, RngStream(key=6)).data
        assert abs(out.mean()) < 0.02 * 1.5
        assert abs(out.var() - 1.5**2) < 0.02 * 1.5**2

    def test_distinct_substreams_distinct_ensembles(self):
        root = RngStream(key=7)
        a = sample_initial_latent(2, 5, 1.0, root.child(0))
        b = sample_initial_latent(2, 5, 1.0, root.child(1))
        assert not np.array_equal(a.data, b.data)

    def test_batched_shape(self):
        out = sample_initial_latent(3, 8, 1.0, RngStream(key=8), batch=4)
        assert out.shape == (4, 8, 3)
