import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from nemato.errors import DomainError, ModelError, NumericError
from nemato.orlicz import (
    GRID,
    Power,
    PowerLog,
    Tabulated,
    WeightedSampleSet,
    conjugate_eval,
    delta2_constant,
    luxemburg_norm,
    luxemburg_norm_batch,
    modular,
    nfun_eval,
    nfun_inverse,
    nfun_left_derivative,
    nfunction_from_dict,
    p_exponent,
    sphere_embedding_function,
)

LOG_E1 = math.log(math.e + 1.0)
FAMILIES = [Power(2.0), Power(1.5), Power(3.0, 0.5), PowerLog(1.0, 1.0), PowerLog(2.0, 0.5), PowerLog(1.5, 2.0)]


def tabulated_power(p, lo=1e-3, hi=1e3, n=40):
    s = np.geomspace(lo, hi, n)
    return Tabulated(s, s**p)


# -- evaluation -------------------------------------------------------------
def test_power_value():
    assert nfun_eval(Power(2.0), 3.0) == 9.0


@pytest.mark.parametrize("A", FAMILIES + [tabulated_power(2.5)], ids=repr)
def test_zero_at_zero(A):
    assert nfun_eval(A, 0.0) == 0.0
    assert conjugate_eval(A, 0.0) == 0.0


def test_powerlog_value():
    assert nfun_eval(PowerLog(1.0, 1.0), 1.0) == pytest.approx(LOG_E1, rel=1e-15)


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        nfun_eval(Power(2.0), -1.0)


def test_vectorized_shape():
    out = Power(2.0)(np.array([[0.0, 1.0], [2.0, 3.0]]))
    np.testing.assert_array_equal(out, [[0.0, 1.0], [4.0, 9.0]])


# -- derivative -------------------------------------------------------------
def test_power_derivative():
    assert nfun_left_derivative(Power(2.0), 3.0) == 6.0


def test_powerlog_derivative():
    want = LOG_E1 + 1.0 / (math.e + 1.0)
    assert nfun_left_derivative(PowerLog(1.0, 1.0), 1.0) == pytest.approx(want, rel=1e-14)


def test_tabulated_left_derivative_at_knot():
    s = np.array([0.5, 1.0, 2.0, 4.0])
    v = np.array([0.2, 1.0, 6.0, 40.0])
    A = Tabulated(s, v, validate=False)
    beta_left = math.log(6.0 / 1.0) / math.log(2.0)
    assert A.derivative(2.0) == pytest.approx(beta_left * 6.0 / 2.0, rel=1e-14)
    # slightly right of the knot uses the next interval
    beta_right = math.log(40.0 / 6.0) / math.log(2.0)
    assert A.derivative(2.0 * (1 + 1e-12)) == pytest.approx(beta_right * 6.0 / 2.0, rel=1e-9)


def test_derivative_requires_positive():
    with pytest.raises(DomainError):
        nfun_left_derivative(Power(2.0), 0.0)


@pytest.mark.parametrize("A", FAMILIES, ids=repr)
def test_derivative_nondecreasing(A):
    d = A.derivative(GRID)
    assert np.all(np.diff(d) >= -1e-12 * d[1:])


# -- conjugate --------------------------------------------------------------
def test_half_square_self_conjugate():
    A = Power(2.0, 0.5)
    assert conjugate_eval(A, 4.0) == pytest.approx(8.0, rel=1e-14)


def test_cubic_conjugate_vs_golden_section():
    A = Power(3.0, 1.0 / 3.0)
    for s in (0.3, 1.0, 5.0):
        res = optimize.minimize_scalar(lambda x: -(s * x - A(x)), bracket=(1e-6, 0.5, 50.0), method="golden", tol=1e-12)
        assert conjugate_eval(A, s) == pytest.approx(s**1.5 / 1.5, rel=1e-12)
        assert -res.fun == pytest.approx(s**1.5 / 1.5, rel=1e-8)


@pytest.mark.parametrize("A", [PowerLog(2.0, 1.0), PowerLog(1.5, 0.5), tabulated_power(2.2)], ids=repr)
def test_numeric_conjugate_vs_bounded_search(A):
    for s in (0.05, 1.0, 7.0):
        res = optimize.minimize_scalar(lambda x: -(s * x - A(x)), bounds=(0.0, 1e3), method="bounded", options={"xatol": 1e-12})
        assert conjugate_eval(A, s) == pytest.approx(-res.fun, rel=1e-7, abs=1e-12)


def test_powerlog_p1_conjugate_vanishes_below_unit_slope():
    A = PowerLog(1.0, 1.0)
    assert conjugate_eval(A, 0.9) == 0.0
    assert conjugate_eval(A, 3.0) > 0.0


def test_conjugate_bracket_failure():
    # A' grows like sqrt(log s): the maximizer for a large slope overflows
    with pytest.raises(NumericError):
        conjugate_eval(PowerLog(1.0, 0.5), 1e3)


@pytest.mark.parametrize("A", FAMILIES, ids=repr)
def test_young_equality_on_graph(A):
    s1 = np.geomspace(1e-2, 50, 64)
    s2 = A.derivative(s1)
    lhs = s1 * s2
    rhs = A(s1) + conjugate_eval(A, s2)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-8)


@pytest.mark.parametrize("A", FAMILIES, ids=repr)
def test_young_random_pairs(A, rng):
    s1, s2 = rng.uniform(0, 100, (2, 10_000))
    assert np.all(s1 * s2 <= (A(s1) + conjugate_eval(A, s2)) * (1 + 1e-12))


@given(st.floats(1.05, 6.0), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_young_property_power(p, a, b):
    A = Power(p)
    assert a * b <= (A(a) + conjugate_eval(A, b)) * (1 + 1e-12)


# -- growth constants -------------------------------------------------------
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_delta2_power(p):
    assert delta2_constant(Power(p), GRID) == pytest.approx(2.0**p, rel=1e-13)
    assert delta2_constant(Power(p), [0.1, 7.0]) == pytest.approx(2.0**p, rel=1e-13)


def test_delta2_powerlog_range():
    k = delta2_constant(PowerLog(1.0, 1.0), GRID)
    assert 2.0 <= k <= 4.0


def test_delta2_rejects_zero():
    with pytest.raises(DomainError):
        delta2_constant(Power(2.0), [0.0, 1.0])


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_p_exponent_power(p):
    assert p_exponent(Power(p), GRID) == pytest.approx(p, rel=1e-13)


def test_p_exponent_powerlog_range():
    p = p_exponent(PowerLog(1.0, 1.0), GRID)
    assert 1.0 < p < 2.0


@pytest.mark.parametrize("A", FAMILIES, ids=repr)
@pytest.mark.parametrize("c", [1.5, 2.0, 10.0])
def test_p_exponent_scaling_bound(A, c):
    pA = p_exponent(A, GRID)
    s = GRID[GRID <= GRID[-1] / c]
    assert np.all(A(c * s) <= c**pA * A(s) * (1 + 1e-10))


@pytest.mark.parametrize("A", FAMILIES, ids=repr)
def test_validate_invariants(A):
    rep = A.validate()
    assert rep["increasing"] and rep["convex"] and rep["doubling"]
    assert A.kappa >= 2.0


def test_tabulated_nonconvex_rejected():
    s = np.array([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ModelError):
        Tabulated(s, [1.0, 4.0, 5.0, 20.0])


def test_power_requires_p_above_one():
    with pytest.raises(DomainError):
        Power(1.0)


# -- modular and Luxemburg norm ---------------------------------------------
def test_modular_examples():
    assert modular(Power(2.0), WeightedSampleSet.uniform(np.zeros(5))) == 0.0
    assert modular(Power(2.0), WeightedSampleSet.uniform(np.full(7, 3.0))) == pytest.approx(9.0)
    assert modular(PowerLog(1.0, 1.0), WeightedSampleSet.uniform(np.ones(4))) == pytest.approx(LOG_E1)


def test_sample_set_validation():
    with pytest.raises(DomainError):
        WeightedSampleSet([1.0, 2.0], [1.0])
    with pytest.raises(DomainError):
        WeightedSampleSet([-1.0], [1.0])
    with pytest.raises(DomainError):
        WeightedSampleSet([1.0], [0.0])
    assert WeightedSampleSet.uniform(np.ones(8), 2.0).measure == pytest.approx(2.0)


def test_luxemburg_constant_field():
    assert luxemburg_norm(Power(2.0), WeightedSampleSet.uniform(np.full(9, 2.5))) == pytest.approx(2.5, rel=1e-10)


def test_luxemburg_indicator_quarter():
    v = WeightedSampleSet(np.array([1.0, 0.0, 0.0, 0.0]), np.full(4, 0.25))
    assert luxemburg_norm(Power(2.0), v) == pytest.approx(0.5, rel=1e-10)


def test_luxemburg_zero():
    assert luxemburg_norm(Power(3.0), WeightedSampleSet.uniform(np.zeros(3))) == 0.0


def test_luxemburg_rejects_bad_tol():
    with pytest.raises(DomainError):
        luxemburg_norm(Power(2.0), WeightedSampleSet.uniform(np.ones(2)), tol=0.0)


@pytest.mark.parametrize("A", FAMILIES, ids=repr)
def test_luxemburg_achieved_infimum(A, rng):
    for _ in range(20):
        v = WeightedSampleSet(rng.exponential(size=16) * rng.uniform(0.01, 50), rng.uniform(0.1, 1, 16))
        s = luxemburg_norm(A, v, tol=1e-10)
        rho = modular(A, WeightedSampleSet(v.values / s, v.weights))
        assert rho <= 1 + 1e-10
        assert rho >= 1 - 1e-8


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_luxemburg_equals_p_norm(p, rng):
    vals = rng.exponential(size=(50, 20))
    w = rng.uniform(0.1, 1.0, (50, 20))
    got = luxemburg_norm_batch(Power(p), vals, w, tol=1e-13)
    want = np.sum(w * vals**p, axis=1) ** (1 / p)
    np.testing.assert_allclose(got, want, rtol=1e-10)


@given(st.lists(st.floats(0.0, 1e3), min_size=1, max_size=12), st.floats(1e-2, 1e2))
def test_luxemburg_homogeneous(vals, lam):
    A = PowerLog(2.0, 1.0)
    v = WeightedSampleSet.uniform(vals)
    n1 = luxemburg_norm(A, v, tol=1e-12)
    n2 = luxemburg_norm(A, WeightedSampleSet(v.values * lam, v.weights), tol=1e-12)
    assert n2 == pytest.approx(lam * n1, rel=1e-7, abs=1e-300)


def test_batch_matches_scalar(rng):
    A = PowerLog(1.5, 1.0)
    vals = rng.exponential(size=(30, 10)) * rng.uniform(0.01, 100, (30, 1))
    vals[3] = 0.0
    w = np.full(10, 0.1)
    batch = luxemburg_norm_batch(A, vals, w, tol=1e-12)
    single = [luxemburg_norm(A, WeightedSampleSet(np.abs(r), w), tol=1e-12) if np.any(r) else 0.0 for r in vals]
    np.testing.assert_allclose(batch, single, rtol=1e-9)


@pytest.mark.parametrize("A", FAMILIES, ids=repr)
def test_holder(A, rng):
    Ab = A.conjugate_function
    for _ in range(20):
        w = rng.uniform(0.1, 1.0, 12)
        u = rng.exponential(size=12) * rng.uniform(0.1, 10)
        v = rng.exponential(size=12) * rng.uniform(0.1, 10)
        lhs = float(np.sum(w * u * v))
        rhs = 2 * luxemburg_norm(A, WeightedSampleSet(u, w)) * luxemburg_norm(Ab, WeightedSampleSet(v, w))
        assert lhs <= rhs * (1 + 1e-9)


@pytest.mark.parametrize("A", FAMILIES, ids=repr)
def test_norm_modular_bounds(A, rng):
    pA = A.p_exp
    for _ in range(50):
        v = WeightedSampleSet(rng.exponential(size=8) * math.exp(rng.uniform(-4, 4)), rng.uniform(0.1, 1, 8))
        n = luxemburg_norm(A, v)
        rho = modular(A, v)
        assert n <= rho + 1 + 1e-12
        assert rho <= (n + 1) ** pA * (1 + 1e-9)


def test_norm_and_modular_convergence_agree(rng):
    A = PowerLog(2.0, 1.0)
    pert = rng.exponential(size=32)
    w = np.full(32, 1 / 32)
    norms, mods = [], []
    for k in range(12):
        d = WeightedSampleSet(pert * 2.0**-k, w)
        norms.append(luxemburg_norm(A, d))
        mods.append(modular(A, d))
    assert np.all(np.diff(norms) < 0) and np.all(np.diff(mods) < 0)
    assert norms[-1] < 1e-3 and mods[-1] < 1e-6


# -- inverse and embedding function ----------------------------------------
@pytest.mark.parametrize("A", FAMILIES, ids=repr)
def test_inverse_roundtrip(A):
    y = np.geomspace(1e-8, 1e8, 33)
    np.testing.assert_allclose(A(nfun_inverse(A, y)), y, rtol=1e-10)
    assert nfun_inverse(A, 0.0) == 0.0


@pytest.mark.parametrize("A", FAMILIES, ids=repr)
def test_embedding_function_circle_is_identity(A):
    assert sphere_embedding_function(A, 2) is A


def test_embedding_function_sphere_power3():
    A = Power(3.0)
    A2 = sphere_embedding_function(A, 3)
    # conj(A)(s) = k s^1.5, B_2(s) = 2 k s^1.5, and A_2 = conj(B_2) = s^3 / (27 k^2)
    k = (2.0 / 3.0) / math.sqrt(3.0)
    s = np.array([0.3, 1.0, 2.0, 5.0])
    np.testing.assert_allclose(A2(s), s**3 / (27.0 * k * k), rtol=2e-3)
    assert A2(0.0) == 0.0
    slope = np.log(A2(4.0) / A2(1.0)) / np.log(4.0)
    assert slope == pytest.approx(3.0, abs=1e-2)


def test_embedding_function_divergent_tail():
    with pytest.raises(ModelError):
        sphere_embedding_function(Power(1.5), 3)


def test_embedding_function_bad_dimension():
    with pytest.raises(DomainError):
        sphere_embedding_function(Power(2.0), 4)


# -- serialization ----------------------------------------------------------
@pytest.mark.parametrize("A", [Power(2.5, 0.3), PowerLog(1.0, 1.0), tabulated_power(2.0, n=8)], ids=repr)
def test_dict_roundtrip(A):
    B = nfunction_from_dict(A.to_dict())
    s = np.geomspace(1e-2, 1e2, 9)
    np.testing.assert_allclose(B(s), A(s), rtol=1e-15)


def test_unknown_family():
    with pytest.raises(DomainError):
        nfunction_from_dict({"family": "exp"})
