"""Counter-based stream contracts and the reparameterized Gaussian draw."""

import numpy as np
import pytest

from roadenkf.autodiff import RngStream, Tape, Tensor, gaussian_reparam, mul, sum as tsum
from roadenkf.errors import ParameterizationError


class TestRngStream:
    def test_same_key_counter_identical_draws(self):
        a = RngStream(key=42).standard_normal((3, 4))
        b = RngStream(key=42).standard_normal((3, 4))
        np.testing.assert_array_equal(a, b)

    def test_counter_position_reproduces_midstream(self):
        s = RngStream(key=9)
        s.standard_normal(10)
        mark = s.counter
        second = s.standard_normal(7)
        np.testing.assert_array_equal(second, RngStream(key=9, counter=mark).standard_normal(7))

    def test_consecutive_draws_differ(self):
        s = RngStream(key=5)
        assert not np.array_equal(s.standard_normal(8), s.standard_normal(8))

    def test_children_are_distinct_and_stable(self):
        s = RngStream(key=123)
        c0 = s.child(0)
        c1 = s.child(1)
        assert c0.key != c1.key != s.key
        np.testing.assert_array_equal(
            c0.standard_normal(5), RngStream(key=123).child(0).standard_normal(5)
        )
        assert not np.array_equal(
            RngStream(key=123).child(0).standard_normal(5),
            RngStream(key=123).child(1).standard_normal(5),
        )

    def test_child_does_not_advance_parent(self):
        s = RngStream(key=11)
        s.child(3)
        assert s.counter == 0

    def test_choice_without_replacement_is_distinct(self):
        idx = RngStream(key=2).choice_without_replacement(100, 40)
        assert len(np.unique(idx)) == 40


class TestGaussianReparam:
    def test_zero_scale_returns_mean_exactly(self):
        mean = np.arange(6.0).reshape(2, 3)
        out = gaussian_reparam(Tensor(mean), Tensor(np.zeros(3)), RngStream(key=1))
        np.testing.assert_array_equal(out.data, mean)

    def test_fixed_stream_bit_identical(self):
        mean = Tensor(np.zeros((4, 2)))
        scale = Tensor(np.ones(2))
        a = gaussian_reparam(mean, scale, RngStream(key=7, counter=0)).data
        b = gaussian_reparam(mean, scale, RngStream(key=7, counter=0)).data
        np.testing.assert_array_equal(a, b)

    def test_monte_carlo_moments(self):
        draws = gaussian_reparam(
            Tensor(np.zeros(100000)), Tensor(np.ones(100000)), RngStream(key=3)
        ).data
        assert abs(draws.mean()) < 0.02
        assert abs(draws.var() - 1.0) < 0.02

    def test_negative_scale_rejected(self):
        with pytest.raises(ParameterizationError):
            gaussian_reparam(Tensor(np.zeros(3)), Tensor([-1.0, 1.0, 1.0]), RngStream(key=4))

    def test_gradients_flow_to_mean_and_scale_not_noise(self):
        mean = Tensor(np.zeros(5), requires_grad=True)
        scale = Tensor(np.full(5, 2.0), requires_grad=True)
        stream = RngStream(key=8)
        xi = RngStream(key=8).standard_normal(5)
        with Tape() as tape:
            out = tsum(mul(gaussian_reparam(mean, scale, stream), Tensor(np.ones(5))))
        tape.backward(out)
        np.testing.assert_allclose(tape.grad(mean), np.ones(5))
        np.testing.assert_allclose(tape.grad(scale), xi)

    def test_triangular_factor_covariance(self):
        factor = np.array([[2.0, 0.0], [1.0, 0.5]])
        out = gaussian_reparam(
            Tensor(np.zeros((200000, 2))), Tensor(factor), RngStream(key=12)
        ).data
        cov = np.cov(out.T)
        np.testing.assert_allclose(cov, factor @ factor.T, atol=0.05)
