"""SPD solve / log-determinant against explicit inverse and determinant oracles."""

import numpy as np
import pytest

from roadenkf.autodiff import Tape, Tensor, logdet_spd, matmul, mul, solve_spd, sum as tsum
from roadenkf.errors import DimensionError, NotSpdError

from helpers import fd_gradient, random_spd, rel_err, rng


class TestSolveSpd:
    def test_identity_case(self):
        b = rng(0).standard_normal((3, 2))
        out = solve_spd(Tensor(np.eye(3)), Tensor(b))
        np.testing.assert_allclose(out.data, b, rtol=1e-14)

    def test_diagonal_closed_form(self):
        out = solve_spd(Tensor(np.diag([2.0, 5.0])), Tensor([[4.0], [10.0]]))
        np.testing.assert_allclose(out.data, [[2.0], [2.0]], rtol=1e-14)

    @pytest.mark.parametrize("n", [4, 16])
    def test_matches_explicit_inverse_oracle(self, n):
        a = random_spd(n, seed=n)
        b = rng(n + 1).standard_normal((n, 3))
        x = solve_spd(Tensor(a), Tensor(b)).data
        oracle = np.linalg.inv(a) @ b
        assert rel_err(x, oracle) < 1e-9

    def test_residual_contract_moderate_size(self):
        n = 256
        a = random_spd(n, seed=77)
        b = rng(78).standard_normal((n, 2))
        x = solve_spd(Tensor(a), Tensor(b)).data
        assert np.abs(a @ x - b).max() <= 1e-9 * np.abs(b).max()

    def test_not_spd_reports_pivot(self):
        a = np.diag([1.0, -2.0, 3.0])
        with pytest.raises(NotSpdError) as exc:
            solve_spd(Tensor(a), Tensor(np.ones((3, 1))))
        assert exc.value.pivot == 1

    def test_batched_matches_loop(self):
        mats = np.stack([random_spd(5, seed=s) for s in range(4)])
        rhs = rng(5).standard_normal((4, 5, 2))
        batched = solve_spd(Tensor(mats), Tensor(rhs)).data
        for i in range(4):
            single = solve_spd(Tensor(mats[i]), Tensor(rhs[i])).data
            np.testing.assert_allclose(batched[i], single, rtol=1e-12)

    def test_gradients_match_finite_differences(self):
        n = 4
        a0 = random_spd(n, seed=9)
        b0 = rng(10).standard_normal((n, 2))
        w = rng(11).standard_normal((n, 2))

        def loss_a(a_arr):
            sym = 0.5 * (a_arr + a_arr.T)
            return float(np.sum(w * np.linalg.solve(sym, b0)))

        def loss_b(b_arr):
            return float(np.sum(w * np.linalg.solve(a0, b_arr)))

        a = Tensor(a0, requires_grad=True)
        b = Tensor(b0, requires_grad=True)
        with Tape() as tape:
            out = tsum(mul(solve_spd(a, b), Tensor(w)))
        tape.backward(out)
        assert rel_err(tape.grad(a), fd_gradient(loss_a, a0)) < 1e-5
        assert rel_err(tape.grad(b), fd_gradient(loss_b, b0)) < 1e-6

    def test_shape_validation(self):
        with pytest.raises(DimensionError):
            solve_spd(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 1))))
        with pytest.raises(DimensionError):
            solve_spd(Tensor(np.eye(3)), Tensor(np.ones((2, 1))))


class TestLogdetSpd:
    def test_identity_is_zero(self):
        for n in (1, 4, 9):
            assert logdet_spd(Tensor(np.eye(n))).item() == pytest.approx(0.0, abs=1e-14)

    def test_diagonal_closed_form(self):
        assert logdet_spd(Tensor(np.diag([2.0, 3.0]))).item() == pytest.approx(np.log(6.0), rel=1e-14)

    @pytest.mark.parametrize("n", [3, 8, 16])
    def test_matches_dense_determinant_oracle(self, n):
        a = random_spd(n, seed=n + 20)
        sign, oracle = np.linalg.slogdet(a)
        assert sign > 0
        assert abs(logdet_spd(Tensor(a)).item() - oracle) < 1e-9 * max(1.0, abs(oracle))

    def test_gradient_matches_finite_differences(self):
        a0 = random_spd(4, seed=33)

        def loss(a_arr):
            sym = 0.5 * (a_arr + a_arr.T)
            return float(np.linalg.slogdet(sym)[1])

        a = Tensor(a0, requires_grad=True)
        with Tape() as tape:
            out = logdet_spd(a)
        tape.backward(out)
        assert rel_err(tape.grad(a), fd_gradient(loss, a0)) < 1e-5

    def test_batched_output_shape(self):
        mats = np.stack([random_spd(3, seed=s) for s in range(5)])
        out = logdet_spd(Tensor(mats))
        assert out.shape == (5,)
        for i in range(5):
            assert out.data[i] == pytest.approx(np.linalg.slogdet(mats[i])[1], rel=1e-12)

    def test_not_spd_raises(self):
        with pytest.raises(NotSpdError):
            logdet_spd(Tensor(np.diag([1.0, 0.0])))
