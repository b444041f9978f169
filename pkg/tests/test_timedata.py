import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nemato.errors import ConfigError, DomainError
from nemato.timedata import (
    AffinePath,
    Load,
    LoadSet,
    PiecewisePolynomial,
    Profile,
    StaticDatum,
    datum_from_dict,
    loads_from_dict,
)


def hat():
    # 0 -> 1 on [0, 0.5], back to 0 on [0.5, 1]
    return PiecewisePolynomial([0.0, 0.5, 1.0], [[0.0, 2.0], [1.0, -2.0]])


def test_piecewise_values_and_one_sided_derivatives():
    p = hat()
    assert p(0.25) == pytest.approx(0.5)
    assert p(0.5) == pytest.approx(1.0)
    assert p(0.75) == pytest.approx(0.5)
    assert p.derivative(0.5, "left") == 2.0
    assert p.derivative(0.5, "right") == -2.0
    assert p.kinks == (0.5,)


def test_smooth_join_is_not_a_kink():
    p = PiecewisePolynomial([0.0, 1.0, 2.0], [[0.0, 1.0], [1.0, 1.0]])
    assert p.kinks == ()


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5), st.floats(0.01, 0.99))
def test_polynomial_derivative_fd(coeffs, t):
    p = PiecewisePolynomial.polynomial(coeffs)
    h = 1e-6
    assert p.derivative(t) == pytest.approx((p(t + h) - p(t - h)) / (2 * h), abs=1e-6)


def test_array_valued_linear():
    p = PiecewisePolynomial.linear(np.eye(2), 2 * np.eye(2), 0.0, 2.0)
    np.testing.assert_allclose(p(1.0), 1.5 * np.eye(2))
    np.testing.assert_allclose(p.derivative(0.3), 0.5 * np.eye(2))


@pytest.mark.parametrize("knots, coeffs", [([0.0], []), ([1.0, 0.0], [[1.0]]), ([0.0, 1.0, 2.0], [[1.0]])])
def test_piecewise_validation(knots, coeffs):
    with pytest.raises(DomainError):
        PiecewisePolynomial(knots, coeffs)


def test_piecewise_dict_roundtrip():
    p = hat()
    q = PiecewisePolynomial.from_dict(p.to_dict())
    for t in (0.1, 0.5, 0.9):
        assert q(t) == p(t)
    assert PiecewisePolynomial.from_dict(3.0)(0.7) == 3.0
    assert PiecewisePolynomial.from_dict({"poly": [1.0, 2.0]})(0.5) == 2.0
    with pytest.raises(ConfigError):
        PiecewisePolynomial.from_dict({"values": [1.0]})


def test_profile_and_gradient(rng):
    pr = Profile(c=(1.0, 0.0), G=((0.1, 0.2), (0.0, -0.3)), a=(0.5, 0.2), k=(2.0, 1.0), phase=0.3)
    x = rng.random((10, 2))
    h = 1e-6
    D = pr.gradient(x)
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        np.testing.assert_allclose((pr(x + e) - pr(x - e)) / (2 * h), D[:, :, j], atol=1e-8)
    assert Profile.from_dict(pr.to_dict()) == pr
    with pytest.raises(ConfigError):
        Profile.from_dict({"amplitude": 1})


def test_load_rate():
    ld = Load(Profile(c=(1.0, 2.0)), PiecewisePolynomial.polynomial([1.0, 3.0]))
    np.testing.assert_allclose(ld.value(0.5, np.zeros((1, 2))), [[2.5, 5.0]])
    np.testing.assert_allclose(ld.rate(0.5, np.zeros((1, 2))), [[3.0, 6.0]])


def test_loadset_static_and_kinks():
    assert LoadSet().is_static
    assert LoadSet(h=Load(Profile(c=(1.0, 0.0)))).is_static
    L = LoadSet(f=Load(Profile(c=(1.0, 0.0)), hat()))
    assert not L.is_static
    assert L.kinks == (0.5,)
    assert L.nondifferentiable_at(0.5) and not L.nondifferentiable_at(0.4)


def test_loads_from_dict():
    L = loads_from_dict({"h": {"c": [1.3, 0.0]}, "f": {"c": [0.0, 1.0], "theta": {"poly": [0.0, 1.0]}}})
    assert L.g is None
    np.testing.assert_allclose(L.f.value(0.5, np.zeros((1, 2))), [[0.0, 0.5]])
    with pytest.raises(ConfigError):
        loads_from_dict({"q": {}})


def test_static_datum():
    d = StaticDatum(np.diag([1.1, 0.9]), (0.1, 0.0))
    assert d.is_static and d.kinks == ()
    x = np.array([[1.0, 1.0]])
    np.testing.assert_allclose(d.apply(0.3, x), [[1.2, 0.9]])
    np.testing.assert_allclose(d.inverse(0.3, d.apply(0.3, x)), x)
    np.testing.assert_array_equal(d.velocity(0.3, x), 0.0)
    with pytest.raises(ConfigError):
        StaticDatum(np.diag([1.0, -1.0]))


def test_ramp_velocity():
    d = AffinePath.ramp(np.eye(2), np.diag([1.3, 1.0]), 2.0, (0.0, 0.0), (0.2, 0.0))
    assert not d.is_static
    np.testing.assert_allclose(d.A(1.0), np.diag([1.15, 1.0]))
    x = np.array([[0.5, 0.5]])
    np.testing.assert_allclose(d.velocity(1.0, x), [[0.15 * 0.5 + 0.1, 0.0]])
    np.testing.assert_allclose(d.velocity_gradient(1.0), np.diag([0.15 / 1.15, 0.0]))
    xi = d.apply(1.0, x)
    np.testing.assert_allclose(d.eulerian_velocity(1.0, xi), d.velocity(1.0, x))


def test_affine_path_rejects_inversion():
    with pytest.raises(ConfigError):
        AffinePath.ramp(np.eye(2), -np.eye(2))


def test_datum_from_dict():
    assert isinstance(datum_from_dict(None), StaticDatum)
    d = datum_from_dict({"family": "ramp", "A0": [[1, 0], [0, 1]], "A1": [[2, 0], [0, 1]]}, T=2.0)
    np.testing.assert_allclose(d.A(1.0), np.diag([1.5, 1.0]))
    p = AffinePath(hat().__class__.linear(np.eye(2), 2 * np.eye(2)))
    q = datum_from_dict(p.to_dict())
    np.testing.assert_allclose(q.A(0.4), p.A(0.4))
    with pytest.raises(ConfigError):
        datum_from_dict({"family": "shear"})
