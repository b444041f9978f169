import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nemato import tensor as tn
from nemato.errors import DomainError, SingularityError


def random_pos(rng, n, count=None, min_det=0.2):
    k = 1 if count is None else count
    out = np.empty((0, n, n))
    while len(out) < k:
        A = np.eye(n) + 0.6 * rng.standard_normal((4 * k, n, n))
        out = np.concatenate([out, A[np.asarray(tn.determinant(A)) > min_det]])
    return out[0] if count is None else out[:k]


matrices2 = arrays(np.float64, (2, 2), elements=st.floats(-10, 10))
matrices3 = arrays(np.float64, (3, 3), elements=st.floats(-10, 10))


def test_adjugate_2d_formula():
    a, b, c, d = 1.5, -2.0, 0.25, 3.0
    np.testing.assert_array_equal(tn.adjugate(np.array([[a, b], [c, d]])), [[d, -b], [-c, a]])


@pytest.mark.parametrize("n", [2, 3])
def test_identity(n):
    np.testing.assert_array_equal(tn.adjugate(np.eye(n)), np.eye(n))
    assert tn.determinant(np.eye(n)) == 1.0


@given(matrices2)
def test_adjugate_identity_2d_exact(F):
    # explicit two-term products: BLAS matmul may fuse multiply-adds
    G = tn.adjugate(F)
    P = np.array([[F[i, 0] * G[0, j] + F[i, 1] * G[1, j] for j in range(2)] for i in range(2)])
    np.testing.assert_array_equal(P, tn.determinant(F) * np.eye(2))


@given(matrices3)
def test_adjugate_identity_3d(F):
    err = F @ tn.adjugate(F) - tn.determinant(F) * np.eye(3)
    assert np.max(np.abs(err)) <= 1e-12 * max(1.0, np.max(np.abs(F)) ** 3)


def test_adjugate_identity_3d_random(rng):
    F = rng.standard_normal((3, 3))
    assert np.max(np.abs(F @ tn.adjugate(F) - tn.determinant(F) * np.eye(3))) < 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_cofactor_is_adjugate_transpose(n, rng):
    F = rng.standard_normal((5, n, n))
    np.testing.assert_array_equal(tn.cofactor(F), np.swapaxes(tn.adjugate(F), -1, -2))


def test_inverse_singular():
    with pytest.raises(SingularityError):
        tn.inverse(np.array([[1.0, 2.0], [2.0, 4.0]]))


@pytest.mark.parametrize("n", [2, 3])
def test_inverse(n, rng):
    A = random_pos(rng, n)
    np.testing.assert_allclose(tn.inverse(A) @ A, np.eye(n), atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_determinant_multiplicative(n, rng):
    F, G = rng.standard_normal((2, 20, n, n))
    np.testing.assert_allclose(tn.determinant(G @ F), np.asarray(tn.determinant(G)) * tn.determinant(F), rtol=1e-10, atol=1e-12)


# -- minors ----------------------------------------------------------------
def test_minors_identity_2d():
    np.testing.assert_array_equal(tn.minors_vector(np.eye(2)), [1, 0, 0, 1, 1])


def test_minors_third_order_3d():
    assert tn.minors_vector(2 * np.eye(3))[-1] == pytest.approx(8.0)


def test_minors_bruteforce_3d(rng):
    F = rng.standard_normal((3, 3))
    M = tn.minors_vector(F)
    np.testing.assert_allclose(M[:9], F.ravel())
    cof = np.empty((3, 3))
    for i, j in itertools.product(range(3), range(3)):
        sub = np.delete(np.delete(F, i, 0), j, 1)
        cof[i, j] = (-1) ** (i + j) * np.linalg.det(sub)
    np.testing.assert_allclose(M[9:18], cof.ravel(), atol=1e-12)
    assert M[18] == pytest.approx(np.linalg.det(F))


# -- director tensor -------------------------------------------------------
@pytest.mark.parametrize("n", [2, 3])
def test_director_tensor_isotropic(n, rng):
    z = rng.standard_normal(n)
    z /= np.linalg.norm(z)
    N, Ni = tn.director_tensor(z, 1.0)
    np.testing.assert_allclose(N, np.eye(n), atol=1e-15)
    np.testing.assert_allclose(Ni, np.eye(n), atol=1e-15)


def test_director_tensor_mu2_e1():
    N, Ni = tn.director_tensor(np.array([1.0, 0.0]), 2.0)
    np.testing.assert_allclose(N, np.diag([0.5, 2.0]))
    np.testing.assert_allclose(Ni, np.diag([2.0, 0.5]))
    assert tn.determinant(N) == pytest.approx(1.0)


def test_director_norms_isotropic():
    mu1, mu2 = tn.director_norms(1.0, 2)
    assert mu1 == pytest.approx(np.sqrt(2)) and mu2 == pytest.approx(np.sqrt(2))


@given(st.floats(0.05, 20.0), st.floats(0, 2 * np.pi), st.sampled_from([2, 3]))
def test_director_tensor_properties(mu, th, n):
    z = np.zeros(n)
    z[0], z[1] = np.cos(th), np.sin(th)
    N, Ni = tn.director_tensor(z, mu)
    mu1, mu2 = tn.director_norms(mu, n)
    assert tn.determinant(N) == pytest.approx(1.0, rel=1e-12)
    assert tn.frob(N) == pytest.approx(mu1, rel=1e-12)
    assert tn.frob(Ni) == pytest.approx(mu2, rel=1e-12)
    np.testing.assert_allclose(N @ Ni, np.eye(n), atol=1e-10 * max(mu, 1 / mu) ** 2)


def test_director_tensor_bad_mu():
    with pytest.raises(DomainError):
        tn.director_tensor(np.array([1.0, 0.0]), 0.0)


@pytest.mark.parametrize("n", [2, 3])
def test_adjugate_multiplicativity_with_director(n, rng):
    for _ in range(10):
        z = rng.standard_normal(n)
        z /= np.linalg.norm(z)
        F = rng.standard_normal((n, n))
        mu = rng.uniform(0.3, 3.0)
        N, Ni = tn.director_tensor(z, mu)
        adj = tn.adjugate(Ni @ F)
        # adj(G F) = adj(F) adj(G) and adj(N^{-1}) = N
        np.testing.assert_allclose(adj, tn.adjugate(F) @ N, atol=1e-12)
        assert tn.frob(tn.adjugate(F)) <= tn.director_norms(mu, n)[1] * tn.frob(adj) * (1 + 1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_adjugate_product_rule(n, rng):
    F, G = rng.standard_normal((2, n, n))
    np.testing.assert_allclose(tn.adjugate(G @ F), tn.adjugate(F) @ tn.adjugate(G), atol=1e-12)


# -- differentials ---------------------------------------------------------
def test_d_det_at_identity(rng):
    B = rng.standard_normal((3, 3))
    assert tn.d_det(np.eye(3), B) == pytest.approx(np.trace(B))


def test_d_inv_at_identity(rng):
    B = rng.standard_normal((2, 2))
    np.testing.assert_allclose(tn.d_inv(np.eye(2), B), -B)


@pytest.mark.parametrize("name", ["det", "inv", "adj", "cof"])
@pytest.mark.parametrize("n", [2, 3])
def test_differentials_vs_fd(name, n, rng):
    fun = {"det": tn.determinant, "inv": tn.inverse, "adj": tn.adjugate, "cof": tn.cofactor}[name]
    d = getattr(tn, f"d_{name}")
    A = random_pos(rng, n, 200)
    B = rng.standard_normal((200, n, n))
    assert tn.fd_check(fun, A, B, d(A, B), h=1e-6) <= 1e-6


@pytest.mark.parametrize("name", ["d_det", "d_inv", "d_adj", "d_cof"])
def test_differentials_need_positive_det(name):
    with pytest.raises(DomainError):
        getattr(tn, name)(np.diag([1.0, -1.0]), np.eye(2))
