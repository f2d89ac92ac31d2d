import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsvrg.datasets import Dataset, synth_linear
from fsvrg.errors import ParameterError, WrongCaseError
from fsvrg.objectives import Regularizer, loss_by_name, make_objective

from oracles import central_diff_grad, phi_by_summation, prox_scalar_numeric


def _toy(loss, lam1=0.0, lam2=0.0, n=8, d=4, seed=0, kind="regression"):
    ds, _ = synth_linear(n, d, 0.4, seed=seed, kind=kind)
    return make_objective(ds, loss, lam1, lam2)


def test_phi_ridge_single_example():
    ds = Dataset.from_arrays(np.array([[1.0, 0.0]]), [1.0])
    obj = make_objective(ds, "squared", lam1=0.5)
    # squared loss has no 1/2 factor: (0 - 1)^2 = 1, regularizer 0 at x = 0
    assert obj.phi(np.zeros(2)) == pytest.approx(1.0, abs=1e-15)
    assert obj.phi(np.array([1.0, 0.0])) == pytest.approx(0.5, abs=1e-15)


def test_phi_logistic_at_zero_is_log2():
    obj = _toy("logistic", lam1=0.25, kind="classification")
    assert obj.phi(np.zeros(obj.dim)) == pytest.approx(math.log(2.0), abs=1e-12)


def test_phi_matches_direct_summation():
    obj = _toy("hinge", lam1=0.3, n=3, kind="classification")
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.normal(size=obj.dim)
        assert obj.phi(x) == pytest.approx(phi_by_summation(obj, x), abs=1e-12)


def test_phi_dimension_mismatch():
    obj = _toy("squared")
    with pytest.raises(ParameterError):
        obj.phi(np.zeros(obj.dim + 1))


def test_component_grad_squared_hand_value():
    ds = Dataset.from_arrays(np.array([[1.0, 0.0]]), [1.0])
    obj = make_objective(ds, "squared")
    g = obj.component_grad(0, np.zeros(2))
    assert np.allclose(g, [-2.0, 0.0], atol=1e-15)


def test_component_grad_logistic_at_zero():
    obj = _toy("logistic", n=5, kind="classification")
    for i in range(obj.n):
        ex = obj.dataset.examples[i]
        g = obj.component_grad(i, np.zeros(obj.dim))
        expected = np.zeros(obj.dim)
        expected[ex.indices] = -ex.label * ex.values / 2.0
        assert np.allclose(g, expected, atol=1e-14)


@pytest.mark.parametrize("loss", ["logistic", "squared"])
def test_component_grad_finite_difference(loss):
    obj = _toy(loss, n=6, d=5, seed=3, kind="classification")
    rng = np.random.default_rng(42)
    for _ in range(20):
        x = rng.normal(size=obj.dim)
        i = int(rng.integers(obj.n))
        fd = central_diff_grad(lambda u: phi_component(obj, i, u), x)
        g = obj.component_grad(i, x)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


def phi_component(obj, i, x):
    ex = obj.dataset.examples[i]
    z = float(np.dot(ex.values, x[ex.indices]))
    return float(obj.loss.value(np.float64(z), np.float64(ex.label)))


def test_component_grad_wrong_case():
    obj = _toy("hinge", kind="classification")
    with pytest.raises(WrongCaseError):
        obj.component_grad(0, np.zeros(obj.dim))
    smooth = _toy("squared")
    with pytest.raises(WrongCaseError):
        smooth.component_subgrad(0, np.zeros(smooth.dim))


def test_hinge_subgradient_branches():
    ds = Dataset.from_arrays(np.array([[1.0, 0.0]]), [1.0])
    obj = make_objective(ds, "hinge")
    # margin 1 - b<a,x> = 0.5 > 0: active branch
    g = obj.component_subgrad(0, np.array([0.5, 0.0]))
    assert np.allclose(g, [-1.0, 0.0])
    # margin = -0.5: inactive
    g = obj.component_subgrad(0, np.array([1.5, 0.0]))
    assert np.array_equal(g, np.zeros(2))
    # margin exactly 0: the zero element of the subdifferential
    g = obj.component_subgrad(0, np.array([1.0, 0.0]))
    assert np.array_equal(g, np.zeros(2))


def test_hinge_subgradient_inequality():
    obj = _toy("hinge", n=6, d=4, seed=8, kind="classification")
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.normal(size=obj.dim)
        i = int(rng.integers(obj.n))
        v = obj.component_subgrad(i, x)
        fx = phi_component(obj, i, x)
        for _ in range(100):
            u = x + rng.normal(size=obj.dim)
            fu = phi_component(obj, i, u)
            assert fu >= fx + float(np.dot(v, u - x)) - 1e-12


def test_full_grad_single_example_equals_component():
    obj = _toy("squared", n=1)
    x = np.ones(obj.dim)
    assert np.allclose(obj.full_grad(x), obj.component_grad(0, x), atol=1e-15)


def test_full_grad_equals_component_mean():
    for loss in ("logistic", "squared"):
        obj = _toy(loss, n=12, d=5, seed=4, kind="classification")
        rng = np.random.default_rng(7)
        x = rng.normal(size=obj.dim)
        mean = sum(obj.component_grad(i, x) for i in range(obj.n)) / obj.n
        assert np.allclose(obj.full_grad(x), mean, atol=1e-12)


def test_full_subgrad_equals_component_mean():
    obj = _toy("hinge", n=9, d=4, seed=2, kind="classification")
    x = np.random.default_rng(3).normal(size=obj.dim)
    mean = sum(obj.component_subgrad(i, x) for i in range(obj.n)) / obj.n
    assert np.allclose(obj.full_subgrad(x), mean, atol=1e-12)
    with pytest.raises(WrongCaseError):
        obj.full_grad(x)


def test_reg_grad_values():
    reg = Regularizer.l2(0.5)
    x = np.array([1.0, -2.0])
    assert np.allclose(reg.grad(x), x)  # 2 * 0.5 * x
    assert np.array_equal(Regularizer.none().grad(x), np.zeros(2))
    with pytest.raises(WrongCaseError):
        Regularizer.l1(1.0).grad(x)
    with pytest.raises(WrongCaseError):
        Regularizer.elastic_net(1.0, 1.0).grad(x)


def test_reg_grad_finite_difference():
    reg = Regularizer.l2(0.37)
    rng = np.random.default_rng(5)
    for _ in range(10):
        x = rng.normal(size=6)
        fd = central_diff_grad(reg.value, x)
        assert np.linalg.norm(reg.grad(x) - fd) <= 1e-6 * max(1.0, np.linalg.norm(fd))


def test_prox_closed_forms():
    assert Regularizer.l1(1.0).prox(0.1, np.array([0.5]))[0] == pytest.approx(0.4, abs=1e-15)
    assert Regularizer.l1(1.0).prox(0.1, np.array([0.05]))[0] == 0.0
    y = np.array([3.0, -1.0])
    assert np.array_equal(Regularizer.none().prox(0.7, y), y)
    assert np.allclose(Regularizer.l2(0.5).prox(1.0, y), y / 2.0)


def test_prox_parameter_validation():
    with pytest.raises(ParameterError):
        Regularizer.l1(1.0).prox(0.0, np.array([1.0]))
    with pytest.raises(ParameterError):
        Regularizer(lam1=-1.0)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(1e-3, 10.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0),
    st.floats(-5.0, 5.0),
)
def test_prox_matches_numeric_minimizer(eta, lam1, lam2, v):
    reg = Regularizer(lam1=lam1, lam2=lam2)
    got = reg.prox(eta, np.array([v]))[0]
    want = prox_scalar_numeric(eta, lam1, lam2, v)
    assert got == pytest.approx(want, abs=1e-8)


def test_prox_first_order_optimality():
    rng = np.random.default_rng(11)
    for reg in (Regularizer.l1(0.8), Regularizer.l2(0.6), Regularizer.elastic_net(0.4, 0.9)):
        for _ in range(20):
            eta = float(rng.uniform(0.05, 2.0))
            y = rng.normal(size=5)
            z = reg.prox(eta, y)
            base = np.dot(z - y, z - y) / (2 * eta) + reg.value(z)
            for j in range(5):
                for sign in (1.0, -1.0):
                    w = z.copy()
                    w[j] += sign * 1e-4
                    cand = np.dot(w - y, w - y) / (2 * eta) + reg.value(w)
                    assert base <= cand + 1e-12


def test_phi_convex_along_segments():
    for loss, kind in (("logistic", "classification"), ("squared", "regression"),
                       ("hinge", "classification")):
        obj = _toy(loss, lam1=0.1, lam2=0.05 if loss != "hinge" else 0.0,
                   n=10, d=5, seed=6, kind=kind)
        rng = np.random.default_rng(13)
        for _ in range(30):
            x = rng.normal(size=obj.dim)
            y = rng.normal(size=obj.dim)
            t = float(rng.uniform())
            lhs = obj.phi(t * x + (1 - t) * y)
            assert lhs <= t * obj.phi(x) + (1 - t) * obj.phi(y) + 1e-12


def test_smoothness_certificate_unit_rows():
    for loss in ("logistic", "squared"):
        obj = _toy(loss, n=10, d=5, seed=9, kind="classification")
        rng = np.random.default_rng(21)
        L_i = obj.loss.lipschitz(obj.dataset.row_sq_norms)
        for _ in range(1000):
            x = rng.normal(size=obj.dim)
            y = rng.normal(size=obj.dim)
            i = int(rng.integers(obj.n))
            gx = obj.component_grad(i, x)
            gy = obj.component_grad(i, y)
            assert np.linalg.norm(gx - gy) <= L_i[i] * np.linalg.norm(x - y) + 1e-12


def test_smoothness_constants_on_unit_rows():
    assert _toy("logistic", kind="classification").L == pytest.approx(0.25, rel=1e-9)
    assert _toy("squared").L == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(WrongCaseError):
        loss_by_name("hinge").lipschitz(np.ones(3))
    assert _toy("hinge", kind="classification").L is None


def test_case_classification():
    assert _toy("logistic", lam1=0.1, kind="classification").case == 1
    assert _toy("logistic", lam2=0.1, kind="classification").case == 2
    assert _toy("hinge", lam1=0.1, kind="classification").case == 3
    assert _toy("hinge", kind="classification").case == 4


def test_mu_default_and_override():
    obj = _toy("squared", lam1=0.25)
    assert obj.mu == 0.5
    bumped = make_objective(obj.dataset, "squared", lam1=0.25, mu_override=0.9)
    assert bumped.mu == 0.9
    assert Regularizer.elastic_net(0.3, 0.1).strong_convexity == pytest.approx(0.6)


def test_regularizer_family_and_value():
    assert Regularizer.none().family == "none"
    assert Regularizer.l2(0.1).family == "l2"
    assert Regularizer.l1(0.1).family == "l1"
    assert Regularizer.elastic_net(0.1, 0.1).family == "elastic_net"
    x = np.array([1.0, -2.0])
    assert Regularizer.elastic_net(0.5, 0.25).value(x) == pytest.approx(0.5 * 5 + 0.25 * 3)
    assert Regularizer.none().value(x) == 0.0
