import math

import numpy as np
import pytest

from qlyap.errors import InvalidOperator, InvalidParam, InvalidState, NotHermitian
from qlyap.operators import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    TWO_PI,
    FockConfig,
    QuadratureAngle,
    as_operator,
    fock_pair,
    hermitian_function,
    is_hermitian,
    quadratures,
    reduce_angle,
    spectral_norm,
    tensor,
    top_level_weight,
    validate_density_matrix,
)


def test_as_operator_rejects_non_square():
    with pytest.raises(InvalidOperator):
        as_operator(np.zeros((2, 3)))
    with pytest.raises(InvalidOperator):
        as_operator(np.array([1.0, 2.0]))


def test_as_operator_rejects_non_finite():
    bad = np.array([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(InvalidOperator):
        as_operator(bad)


def test_spectral_norm_known_matrix():
    # largest singular value of [[0, 2], [0, 0]] is 2
    assert spectral_norm(np.array([[0.0, 2.0], [0.0, 0.0]])) == pytest.approx(2.0)


def test_spectral_norm_matches_svd():
    rng = np.random.default_rng(0)
    for _ in range(5):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        np.testing.assert_allclose(spectral_norm(a), np.linalg.svd(a, compute_uv=False)[0],
                                   rtol=1e-12)


def test_is_hermitian():
    assert is_hermitian(SIGMA_X)
    assert is_hermitian(SIGMA_Y)
    assert not is_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_fock_config_validation():
    with pytest.raises(InvalidParam):
        FockConfig(1)
    with pytest.raises(InvalidParam):
        FockConfig(8, tail_tolerance=0.0)


def test_fock_pair_matrix_elements():
    a, ad = fock_pair(FockConfig(6))
    # annihilation lowers: <n-1| a |n> = sqrt(n)
    for n in range(1, 6):
        assert a[n - 1, n] == pytest.approx(math.sqrt(n))
    np.testing.assert_allclose(ad, a.conj().T)
    # number operator diagonal 0..D-1
    np.testing.assert_allclose(np.diag(ad @ a), np.arange(6), atol=1e-14)


def test_fock_pair_commutator_defect():
    d = 8
    a, ad = fock_pair(FockConfig(d))
    comm = a @ ad - ad @ a
    expected = np.eye(d)
    expected[d - 1, d - 1] = -(d - 1)  # truncation confines the defect to the corner
    np.testing.assert_allclose(comm, expected, atol=1e-13)


def test_reduce_angle_range_and_exactness():
    # dyadic multiples of pi reduce exactly under the modulo
    for k in range(-16, 17):
        theta = k * math.pi / 8.0
        r = reduce_angle(theta)
        assert 0.0 <= r < TWO_PI
        assert math.isclose(math.cos(r), math.cos(theta), abs_tol=1e-12)
        assert math.isclose(math.sin(r), math.sin(theta), abs_tol=1e-12)
    assert reduce_angle(TWO_PI) == 0.0
    assert reduce_angle(0.0) == 0.0


def test_quadrature_angle_reduces():
    q = QuadratureAngle(5.0 * math.pi)
    assert 0.0 <= q.angle < TWO_PI
    assert math.isclose(q.angle, math.pi, rel_tol=1e-12)
    with pytest.raises(InvalidParam):
        QuadratureAngle(math.nan)


def test_quadratures_hermitian_and_periodic():
    a, _ = fock_pair(FockConfig(7))
    p0, q0 = quadratures(a, 0.0)
    np.testing.assert_allclose(p0, (a + a.conj().T) / 2.0, atol=1e-14)
    np.testing.assert_allclose(q0, (a - a.conj().T) / 2.0j, atol=1e-14)
    assert is_hermitian(p0) and is_hermitian(q0)
    pa, qa = quadratures(a, 0.37)
    assert is_hermitian(pa) and is_hermitian(qa)
    pb, _ = quadratures(a, 0.37 + math.pi)
    np.testing.assert_allclose(pb, -pa, atol=1e-12)


def test_hermitian_function_exponential():
    h = np.diag([1.0, -1.0]).astype(complex)
    e = hermitian_function(h, np.exp)
    np.testing.assert_allclose(e, np.diag([math.e, 1.0 / math.e]), atol=1e-14)


def test_hermitian_function_polynomial_oracle():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    h = (a + a.conj().T) / 2.0
    np.testing.assert_allclose(hermitian_function(h, lambda t: t ** 2), h @ h, atol=1e-12)


def test_hermitian_function_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_function(np.array([[0.0, 1.0], [0.0, 0.0]]), np.exp)


def test_validate_density_matrix_accepts_and_normalizes():
    rho = validate_density_matrix(np.eye(2) / 2.0)
    np.testing.assert_allclose(np.trace(rho), 1.0)
    rng = np.random.default_rng(5)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    out = validate_density_matrix(rho)
    np.testing.assert_allclose(out, rho, atol=1e-12)


def test_validate_density_matrix_rejects():
    with pytest.raises(InvalidState):
        validate_density_matrix(np.diag([2.0, 1.0]))  # trace far off
    with pytest.raises(InvalidState):
        validate_density_matrix(np.diag([1.5, -0.5]))  # negative weight


def test_tensor_is_kron():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((2, 2))
    b = rng.standard_normal((3, 3))
    np.testing.assert_allclose(tensor(a, b), np.kron(a, b))


def test_top_level_weight():
    op = np.zeros((4, 4), dtype=complex)
    op[0, 0] = 1.0
    assert top_level_weight(op, 4) == pytest.approx(0.0)
    op[3, 0] = 1.0  # weight on the top truncated level
    w = top_level_weight(op, 4)
    assert w == pytest.approx(1.0 / math.sqrt(2.0))
    # trailing tensor factor carries the Fock index
    big = np.kron(np.eye(2), op)
    assert top_level_weight(big, 4) == pytest.approx(w)
