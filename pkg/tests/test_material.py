import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nemato import tensor as tn
from nemato.errors import DomainError, ModelError
from nemato.material import (
    MaterialModel,
    PowerLogSigma,
    PowerPowerSigma,
    calibrate_w6,
    coercivity_minorant,
    default_model,
    director_gradient,
    elastic_density,
    elastic_stress,
    kirchhoff,
    l_tensor,
    multiplicative_estimates_check,
    nematic_gradients,
    nematic_integrand,
    phi_eval,
    sample_deformations,
    sigma_from_dict,
    stress_eval,
    w7_delta_table,
)
from nemato.orlicz import Power, PowerLog

MODELS = [
    default_model(),
    MaterialModel(mu=2.0, zeta=1.5),
    MaterialModel(A=PowerLog(1.0, 1.0), mu=0.7, zeta=2.5, sigma=PowerLogSigma()),
    MaterialModel(A=PowerLog(2.0, 0.5), mu=1.5, n=3),
]


def unit(rng, n):
    z = rng.standard_normal(n)
    return z / np.linalg.norm(z)


# -- Phi and W --------------------------------------------------------------
def test_phi_identity():
    assert phi_eval(default_model(), np.eye(2)) == pytest.approx(4.0, rel=1e-14)


def test_phi_degenerate_is_infinite():
    assert phi_eval(default_model(), np.array([[1.0, 2.0], [0.5, 1.0]])) == math.inf
    assert phi_eval(default_model(), np.diag([1.0, -1.0])) == math.inf


def test_phi_double_identity():
    # A(2 sqrt 2) + |adj 2I|^2 + sigma(4) = 8 + 8 + (16 + 0.5 - 3)
    assert phi_eval(default_model(), 2 * np.eye(2)) == pytest.approx(29.5, rel=1e-14)


def test_default_sigma_is_stationary_at_one():
    s = default_model().sigma
    assert s(1.0) == 0.0
    assert s.derivative(1.0) == pytest.approx(0.0, abs=1e-15)
    assert s.minimizer() == pytest.approx(1.0, rel=1e-8)


def test_isotropic_W_is_phi(rng):
    m = default_model()
    F, z = sample_deformations(rng, 50)
    np.testing.assert_allclose(elastic_density(m, F, z), phi_eval(m, F), rtol=1e-14)


def test_W_infinite_for_nonpositive_det(rng):
    m = MaterialModel(mu=2.0)
    F = np.array([[1.0, 0.0], [0.0, -0.5]])
    assert elastic_density(m, F, unit(rng, 2)) == math.inf


def test_W_anisotropic_example():
    m = MaterialModel(mu=2.0)
    assert elastic_density(m, np.eye(2), np.array([1.0, 0.0])) == pytest.approx(phi_eval(m, np.diag([2.0, 0.5])), rel=1e-14)


def test_W_finite_and_nan_free_on_positive_dets(rng):
    for m in MODELS:
        F, z = sample_deformations(rng, 500, m.n)
        W = elastic_density(m, F, z)
        assert np.all(np.isfinite(W)) and np.all(W >= 0)


# -- stresses ---------------------------------------------------------------
@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"mu{m.mu}-n{m.n}")
def test_stress_vs_fd(model, rng):
    F, z = sample_deformations(rng, 200, model.n)
    P = elastic_stress(model, F, z)
    h = 1e-6
    for i in range(model.n):
        for j in range(model.n):
            E = np.zeros((model.n, model.n))
            E[i, j] = h
            fd = (elastic_density(model, F + E, z) - elastic_density(model, F - E, z)) / (2 * h)
            np.testing.assert_array_less(np.abs(fd - P[:, i, j]), 1e-5 * np.maximum(1.0, tn.frob(P)))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"mu{m.mu}-n{m.n}")
def test_director_gradient_vs_fd(model, rng):
    F, z = sample_deformations(rng, 100, model.n)
    g = director_gradient(model, F, z)
    h = 1e-6
    for i in range(model.n):
        e = np.zeros(model.n)
        e[i] = h
        fd = (elastic_density(model, F, z + e) - elastic_density(model, F, z - e)) / (2 * h)
        np.testing.assert_array_less(np.abs(fd - g[:, i]), 1e-5 * np.maximum(1.0, np.linalg.norm(g, axis=1)))


def test_sigma_term_of_L_vanishes_at_identity():
    L = l_tensor(default_model(), np.eye(2))
    # A'(|I|) I I^T / |I| = 2 I and zeta(|adj I|^2 I - cof I adj I) = 2 (2 I - I)
    np.testing.assert_allclose(L, 4.0 * np.eye(2), atol=1e-14)


def test_kirchhoff_isotropic_is_L(rng):
    m = default_model()
    F, z = sample_deformations(rng, 20)
    np.testing.assert_allclose(kirchhoff(m, F, z), l_tensor(m, F), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"mu{m.mu}-n{m.n}")
def test_kirchhoff_factorization(model, rng):
    F, z = sample_deformations(rng, 20, model.n)
    for k in range(len(F)):
        N, Ni = tn.director_tensor(z[k], model.mu)
        np.testing.assert_allclose(kirchhoff(model, F[k], z[k]), Ni @ l_tensor(model, Ni @ F[k]) @ N, rtol=1e-10, atol=1e-10)


def test_stress_requires_positive_det():
    with pytest.raises(DomainError):
        elastic_stress(default_model(), np.diag([1.0, 0.0]), np.array([1.0, 0.0]))


def test_stress_eval_bundle(rng):
    m = default_model()
    F, z = sample_deformations(rng, 5)
    ev = stress_eval(m, F, z)
    np.testing.assert_allclose(ev.K, ev.P @ np.swapaxes(F, -1, -2))
    np.testing.assert_allclose(ev.W, elastic_density(m, F, z))


# -- coercivity minorant ----------------------------------------------------
def test_c_W_value():
    m = default_model()
    assert m.c_W == pytest.approx((math.sqrt(2) + 1) ** -2, rel=1e-10)
    assert 0 < m.c_W <= 1


def test_minorant_at_identity():
    m = default_model()
    want = (math.sqrt(2) + 1) ** -2 * 2 + 1 + 0
    assert coercivity_minorant(m, np.eye(2)) == pytest.approx(want, rel=1e-10)
    assert coercivity_minorant(m, np.eye(2)) <= elastic_density(m, np.eye(2), np.array([0.0, 1.0]))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"mu{m.mu}-n{m.n}")
def test_minorant_below_W(model, rng):
    F, z = sample_deformations(rng, 20_000, model.n, max_norm=8.0, min_det=0.01)
    assert np.all(coercivity_minorant(model, F, z) <= elastic_density(model, F, z) * (1 + 1e-12))


def test_minorant_requires_positive_det():
    with pytest.raises(DomainError):
        coercivity_minorant(default_model(), np.zeros((2, 2)))


# -- structural conditions --------------------------------------------------
@pytest.mark.parametrize("model", MODELS[:3], ids=lambda m: f"mu{m.mu}")
def test_polyconvexity_terms_midpoint(model, rng):
    F1, _ = sample_deformations(rng, 500)
    F2, _ = sample_deformations(rng, 500)
    M = 0.5 * (F1 + F2)
    A = model.A
    assert np.all(A(tn.frob(M)) <= 0.5 * (A(tn.frob(F1)) + A(tn.frob(F2))) * (1 + 1e-12))
    a1, a2 = tn.adjugate(F1), tn.adjugate(F2)
    assert np.all(tn.frob(0.5 * (a1 + a2)) ** model.zeta <= 0.5 * (tn.frob(a1) ** model.zeta + tn.frob(a2) ** model.zeta) * (1 + 1e-12))
    d1, d2 = tn.determinant(F1), tn.determinant(F2)
    s = model.sigma
    assert np.all(s(0.5 * (d1 + d2)) <= 0.5 * (s(d1) + s(d2)) + 1e-12)


@pytest.mark.parametrize("sigma", [PowerPowerSigma(), PowerLogSigma(), PowerPowerSigma(a=2.0, alpha=3.0, b=1.0, beta=2.0, c=0.0)], ids=repr)
def test_gamma_monotone_around_minimizer(sigma):
    vbar = sigma.minimizer()
    left = np.linspace(1e-3, vbar, 200)
    right = np.linspace(vbar, 50.0, 200)
    assert np.all(np.diff(sigma(left)) <= 1e-12)
    assert np.all(np.diff(sigma(right)) >= -1e-12)


def test_Gamma_increasing():
    m = MaterialModel(mu=2.0, zeta=1.5)
    th = np.linspace(0, 10, 100)
    assert np.all(np.diff((th / m.mu2) ** m.zeta) > 0)


def test_nonconvex_sigma_rejected():
    class Bad(PowerPowerSigma):
        def _value(self, v):
            return 3 * np.sin(5 * v) + 1 / v + v**2

    with pytest.raises(ModelError):
        MaterialModel(sigma=Bad())


@pytest.mark.parametrize("kw", [{"mu": 0.0}, {"zeta": 1.0}, {"n": 4}])
def test_model_parameter_validation(kw):
    with pytest.raises(DomainError):
        MaterialModel(**kw)


def test_sigma_from_dict():
    s = sigma_from_dict({"family": "powerlog", "a": 1.0, "alpha": 2.0, "b": 2.0, "c": -1.0})
    assert s(1.0) == pytest.approx(0.0)
    with pytest.raises(DomainError):
        sigma_from_dict({"family": "cubic"})


def test_model_dict_roundtrip():
    m = MaterialModel(A=Power(2.5), mu=1.7, zeta=1.8, sigma=PowerLogSigma())
    m2 = MaterialModel.from_dict(m.to_dict())
    F = np.array([[1.2, 0.1], [0.0, 0.9]])
    z = np.array([0.6, 0.8])
    assert elastic_density(m2, F, z) == pytest.approx(elastic_density(m, F, z), rel=1e-15)


# -- nematic integrand ------------------------------------------------------
def test_nematic_identity(rng):
    Dm = rng.standard_normal((2, 2))
    assert nematic_integrand(Dm, np.eye(2)) == pytest.approx(np.sum(Dm**2))


def test_nematic_conformal_2d(rng):
    Dm = rng.standard_normal((2, 2))
    assert nematic_integrand(Dm, 2 * np.eye(2)) == pytest.approx(np.sum(Dm**2), rel=1e-14)


def test_nematic_zero():
    assert nematic_integrand(np.zeros((2, 2)), np.diag([2.0, 0.3])) == 0.0


def test_nematic_requires_positive_det():
    with pytest.raises(DomainError):
        nematic_integrand(np.eye(2), np.diag([1.0, -1.0]))


def test_nematic_gradients_vs_fd(rng):
    Dm = rng.standard_normal((30, 2, 2))
    Dy = np.eye(2) + 0.3 * rng.standard_normal((30, 2, 2))
    Dy = Dy[tn.determinant(Dy) > 0.2]
    Dm = Dm[: len(Dy)]
    _, gm, gy = nematic_gradients(Dm, Dy)
    h = 1e-6
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2))
            E[i, j] = h
            fd = (nematic_integrand(Dm + E, Dy) - nematic_integrand(Dm - E, Dy)) / (2 * h)
            np.testing.assert_allclose(fd, gm[:, i, j], rtol=1e-6, atol=1e-8)
            fd = (nematic_integrand(Dm, Dy + E) - nematic_integrand(Dm, Dy - E)) / (2 * h)
            np.testing.assert_allclose(fd, gy[:, i, j], rtol=1e-6, atol=1e-7)


@given(st.floats(0.2, 5.0), st.floats(0, 2 * np.pi))
def test_nematic_rotation_invariance(scale, th):
    # rotating the deformation leaves |Dm Dy^{-1}|^2 det Dy unchanged
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    Dm = np.array([[0.3, -1.0], [0.7, 0.2]])
    Dy = np.array([[scale, 0.1], [0.0, 1.0]])
    assert nematic_integrand(Dm, Dy) == pytest.approx(nematic_integrand(Dm @ R.T, Dy @ R.T), rel=1e-10)


# -- multiplicative estimates and the Kirchhoff bound ------------------------
def test_calibrate_b_is_one(rng):
    a, b = calibrate_w6(default_model(), sample_deformations(rng, 500))
    assert b == 1.0 and a > 0


def test_calibrate_empty():
    with pytest.raises(DomainError):
        calibrate_w6(default_model(), (np.zeros((0, 2, 2)), np.zeros((0, 2))))


def test_calibrated_constant_bounds_K(rng):
    m = default_model()
    F, z = sample_deformations(rng, 2000)
    a, b = calibrate_w6(m, (F, z))
    assert np.all(tn.frob(kirchhoff(m, F, z)) <= a * (elastic_density(m, F, z) + b) * (1 + 1e-12))
    mu1, mu2 = m.mu1, m.mu2
    assert mu1 * mu2 == pytest.approx(2.0)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"mu{m.mu}-n{m.n}")
def test_multiplicative_estimates(model, rng):
    rep = multiplicative_estimates_check(model, sample_deformations(rng, 3000, model.n), 1e-3, rng=rng)
    assert rep.passed, rep.counterexamples[:3]
    assert rep.halvings <= 3 and rep.b_W == 1.0


def test_multiplicative_identity_perturbation(rng):
    m = default_model()
    F, z = sample_deformations(rng, 50)
    W = elastic_density(m, F, z)
    # G = I: the first estimate reduces to 1 <= n/(n-1) and the third to 0 <= 0
    assert np.all(W + 1 <= 2 * (W + 1))
    assert np.all(np.abs(elastic_density(m, np.eye(2) @ F, z) - W) == 0)


def test_multiplicative_delta_range(rng):
    with pytest.raises(DomainError):
        multiplicative_estimates_check(default_model(), sample_deformations(rng, 10), 0.1)


def test_w7_table_monotone(rng):
    tab = w7_delta_table(default_model(), sample_deformations(rng, 200))
    eps = sorted(tab)
    assert all(tab[e] > 0 for e in eps)
    assert [tab[e] for e in eps] == sorted(tab[e] for e in eps)


def test_sample_deformations_box(rng):
    F, z = sample_deformations(rng, 300, 3, max_norm=5.0, min_det=0.1)
    assert F.shape == (300, 3, 3) and z.shape == (300, 3)
    assert np.all(tn.frob(F) <= 5.0) and np.all(tn.determinant(F) >= 0.1)
    np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0, atol=1e-12)
