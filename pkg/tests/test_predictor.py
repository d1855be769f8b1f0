import numpy as np
import pytest

from arh1 import estimators as est
from arh1 import hilbert as hc
from arh1 import predictor as pr
from arh1.model import ARHModel, Trajectory, make_model, simulate


def test_zero_estimator():
    np.testing.assert_array_equal(pr.plug_in_predict(np.zeros((3, 3)), [1.0, 2.0, 3.0]), np.zeros(3))


def test_diag_estimator():
    np.testing.assert_array_equal(pr.plug_in_predict(np.diag([0.5, 1.0]), [2.0, 3.0]), [1.0, 3.0])


def test_accepts_estimated_rho():
    fitted = est.EstimatedRho(operator=np.diag([0.5, 0.5]), kind="componentwise", k=2)
    np.testing.assert_array_equal(pr.plug_in_predict(fitted, [2.0, 4.0]), [1.0, 2.0])


def test_noiseless_exact():
    rho = np.array([[0.5, 0.2], [0.0, 0.3]])
    tr = simulate(ARHModel(rho=rho, c_eps=np.zeros((2, 2))), 6, x0=[1.0, -2.0])
    np.testing.assert_array_equal(pr.plug_in_predict(rho, tr.samples[-2]), tr.samples[-1])
    assert pr.rolling_forecast_error(tr, rho).mean_sq_err <= 1e-30


def test_mismatch():
    with pytest.raises(hc.DimensionError):
        pr.plug_in_predict(np.eye(3), [1.0, 2.0])


def test_prediction_error_field():
    p = pr.predict(np.eye(2), [1.0, 0.0], x_true=[1.0, 1.0])
    assert p.err_h == 1.0
    assert pr.predict(np.eye(2), [1.0, 0.0]).err_h is None


class TestOracleGap:
    def test_true(self):
        rho = np.diag([0.4, 0.2])
        assert pr.oracle_gap(rho, rho, [1.0, 1.0]) == 0

    def test_rank_one_perturbation(self):
        rho = np.diag([0.4, 0.2, 0.1])
        delta = 0.03
        fitted = rho + delta * hc.tensor_product(hc.basis_vector(0, 3), hc.basis_vector(0, 3))
        assert pr.oracle_gap(fitted, rho, hc.basis_vector(0, 3)) == pytest.approx(delta)

    def test_operator_norm_bound(self):
        rng = np.random.default_rng(6)
        for _ in range(500):
            d = rng.integers(1, 10)
            A, B = rng.standard_normal((2, d, d))
            x = rng.standard_normal(d)
            assert pr.oracle_gap(A, B, x) <= hc.operator_norm(A - B) * hc.norm(x) + 1e-12


class TestRolling:
    def test_white_noise_floor(self):
        m = make_model("zero", 5)
        tr = simulate(m, 4000, seed=3)
        s = pr.rolling_forecast_error(tr, np.zeros((5, 5)))
        assert s.count == 3999
        direct = float(np.mean(np.sum(tr.samples[1:] ** 2, axis=1)))
        assert s.mean_sq_err == pytest.approx(direct, rel=1e-12)
        assert s.mean_sq_err == pytest.approx(np.trace(m.c_eps), rel=0.1)

    def test_true_rho_equals_innovation_energy(self):
        m = make_model("rotpower:0.8,1.5@2", 6)
        tr = simulate(m, 20_000, seed=11)
        s = pr.rolling_forecast_error(tr, m.rho)
        recorded = float(np.mean(np.sum(tr.innovations ** 2, axis=1)))
        assert s.mean_sq_err == pytest.approx(recorded, rel=1e-12, abs=1e-12)
        assert abs(s.mean_sq_err / np.trace(m.c_eps) - 1) < 0.1

    def test_start_index(self):
        x = Trajectory(samples=np.arange(10.0).reshape(5, 2))
        t, sq = pr.forecast_errors(x, np.eye(2), start_index=3)
        np.testing.assert_array_equal(t, [3, 4])
        np.testing.assert_array_equal(sq, [8.0, 8.0])

    def test_empty_range(self):
        x = np.ones((4, 2))
        with pytest.raises(ValueError):
            pr.rolling_forecast_error(x, np.eye(2), start_index=4)
        with pytest.raises(ValueError):
            pr.rolling_forecast_error(x, np.eye(2), start_index=0)
