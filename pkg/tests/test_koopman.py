import json

import numpy as np
import pytest

from qlyap.errors import InvalidCharacter, InvalidParam
from qlyap.koopman import (
    AlgebraElement,
    CharacterExpr,
    LiftSpec,
    PointSet,
    character_expr_from_dict,
    character_expr_to_dict,
    default_polynomial_family,
    gelfand,
    horner_eval,
    horner_eval_1d,
    lift,
    lift_spec_from_dict,
    lift_spec_to_dict,
    logistic_dual_check,
    point_set_from_dict,
    point_set_to_dict,
    specs_equivalent,
    tilde_extend,
    trim_poly,
    uniqueness_search,
)


def grid_points(m):
    return PointSet([i / m for i in range(m)])


# ------------------------------------------------------------- basic algebra


def test_point_set_validation():
    with pytest.raises(InvalidParam):
        PointSet([])
    with pytest.raises(InvalidParam):
        PointSet([0.1, 0.2, 0.1])
    ps = PointSet([0.3, 0.7])
    assert ps.size == 2
    assert ps.points == ((0.3,), (0.7,))


def test_algebra_element_requires_matching_length():
    ps = grid_points(3)
    with pytest.raises(InvalidParam):
        AlgebraElement(ps, [1.0, 2.0])


def test_multiplication_is_pointwise():
    ps = grid_points(4)
    a = AlgebraElement(ps, [1.0, 2.0, 3.0, 4.0])
    b = AlgebraElement(ps, [2.0, 0.5, -1.0, 1.0j])
    prod = a * b
    assert prod.values == (2.0, 1.0, -3.0, 4.0j)


def test_gelfand_is_point_evaluation():
    ps = PointSet([0.7, 0.2])
    unit = AlgebraElement(ps, [1.0, 1.0])
    coord = ps.coordinate()
    assert gelfand(unit, 0) == 1.0
    assert gelfand(coord, 0) == 0.7
    assert gelfand(coord, 1) == 0.2
    with pytest.raises(InvalidCharacter):
        gelfand(coord, 2)
    with pytest.raises(InvalidCharacter):
        gelfand(coord, -1)


def test_gelfand_is_multiplicative_and_bounded():
    rng = np.random.default_rng(17)
    ps = grid_points(8)
    for _ in range(50):
        a = AlgebraElement(ps, rng.standard_normal(8) + 1j * rng.standard_normal(8))
        b = AlgebraElement(ps, rng.standard_normal(8) + 1j * rng.standard_normal(8))
        i = int(rng.integers(0, 8))
        # characters are exactly multiplicative on tabulated functions
        assert gelfand(a * b, i) == gelfand(a, i) * gelfand(b, i)
        assert abs(gelfand(a, i)) <= a.max_norm() + 1e-12


# ----------------------------------------------------------------- evaluation


def test_horner_eval_1d():
    # 2 - 3t + t^2 at t = 5 -> 2 - 15 + 25 = 12
    assert horner_eval_1d([2.0, -3.0, 1.0], 5.0) == pytest.approx(12.0)


def test_horner_eval_multivariate():
    # W(s, t) = 1 + 2 s t + s^2: at (2, 3) -> 1 + 12 + 4 = 17
    coeffs = {(0, 0): 1.0, (1, 1): 2.0, (2, 0): 1.0}
    assert horner_eval(coeffs, [2.0, 3.0]) == pytest.approx(17.0)


def test_tilde_extension_of_a_square():
    # W(t) = t^2 applied at the character of the coordinate: (0.3)^2
    ps = PointSet([0.3, 0.8])
    coord = ps.coordinate()
    expr = CharacterExpr({(2,): 1.0}, indices=[0])
    assert tilde_extend(coord, expr) == pytest.approx(0.09)


def test_tilde_extension_matches_gelfand_of_product():
    # W(s, t) = s t at characters (i, j) equals phi_i(a) phi_j(a)
    ps = grid_points(5)
    rng = np.random.default_rng(3)
    a = AlgebraElement(ps, rng.standard_normal(5))
    expr = CharacterExpr({(1, 1): 1.0}, indices=[1, 3])
    got = tilde_extend(a, expr)
    assert got == pytest.approx(gelfand(a, 1) * gelfand(a, 3), abs=1e-12)


def test_tilde_extension_rejects_out_of_range_character():
    ps = grid_points(3)
    a = ps.coordinate()
    expr = CharacterExpr({(1,): 1.0}, indices=[7])
    with pytest.raises(InvalidCharacter):
        tilde_extend(a, expr)


def test_character_expr_validation():
    with pytest.raises(InvalidParam):
        CharacterExpr({(1, 2): 1.0}, indices=[0])  # arity mismatch
    with pytest.raises(InvalidCharacter):
        CharacterExpr({(1,): 1.0}, indices=[-2])


# ----------------------------------------------------------------------- lift


def test_lift_spec_validation():
    with pytest.raises(InvalidParam):
        LiftSpec([0, 5], [0.0, 1.0])  # tau leaves the index range
    with pytest.raises(InvalidParam):
        LiftSpec([0, 1], [0.0, 0.0])  # zero polynomial
    with pytest.raises(InvalidParam):
        LiftSpec([], [1.0])


def test_lift_on_a_three_cycle():
    # tau cycles the three points; T = t leaves values intact, so lifting is
    # exactly a permutation of the tabulated values
    ps = grid_points(3)
    a = AlgebraElement(ps, [10.0, 20.0, 30.0])
    spec = LiftSpec(tau=[1, 2, 0], t_coeffs=[0.0, 1.0])
    out = lift(spec, a)
    assert out.values == (20.0, 30.0, 10.0)


def test_lift_applies_the_polynomial_after_the_pullback():
    ps = PointSet([0.2, 0.5])
    a = ps.coordinate()
    spec = LiftSpec(tau=[1, 1], t_coeffs=[0.0, 0.0, 1.0])  # T(t) = t^2
    out = lift(spec, a)
    assert out.values == (pytest.approx(0.25), pytest.approx(0.25))


def test_lift_with_identity_endomap_is_a_homomorphism_for_linear_t():
    ps = grid_points(6)
    rng = np.random.default_rng(9)
    a = AlgebraElement(ps, rng.standard_normal(6))
    b = AlgebraElement(ps, rng.standard_normal(6))
    spec = LiftSpec(tau=list(range(6)), t_coeffs=[0.0, 1.0])
    lhs = lift(spec, a * b)
    rhs = lift(spec, a) * lift(spec, b)
    assert max(abs(u - v) for u, v in zip(lhs.values, rhs.values)) <= 1e-12


def test_logistic_dual_check_worked_value():
    # phi(a) = 0.3 under the full logistic map: both sides are 4*0.3*0.7
    ps = PointSet([0.3, 0.6])
    a = ps.coordinate()
    lhs, rhs = logistic_dual_check(4.0, a, 0)
    assert lhs == pytest.approx(0.84)
    assert rhs == pytest.approx(0.84)
    assert abs(lhs - rhs) <= 1e-12


def test_logistic_dual_check_random_cases():
    rng = np.random.default_rng(23)
    ps = grid_points(7)
    for _ in range(100):
        a = AlgebraElement(ps, rng.uniform(0.0, 1.0, size=7))
        r = float(rng.uniform(0.5, 4.0))
        i = int(rng.integers(0, 7))
        lhs, rhs = logistic_dual_check(r, a, i)
        assert abs(lhs - rhs) <= 1e-12


# ---------------------------------------------------------------- uniqueness


def test_trim_and_equivalence():
    assert trim_poly([1.0, 2.0, 0.0, 0.0]) == (1.0, 2.0)
    s1 = LiftSpec([0, 1], [1.0, 2.0])
    s2 = LiftSpec([0, 1], [1.0, 2.0, 0.0])
    assert specs_equivalent(s1, s2)
    # constant polynomials hide the endomap entirely
    c1 = LiftSpec([0, 0], [3.0])
    c2 = LiftSpec([1, 1], [3.0])
    assert specs_equivalent(c1, c2)
    assert not specs_equivalent(LiftSpec([0, 1], [0.0, 1.0]), LiftSpec([1, 0], [0.0, 1.0]))


def test_default_polynomial_family_size_and_degree():
    fam = default_polynomial_family(3)
    assert len(fam) == 80  # 3^4 - 1 sign patterns over four coefficients
    assert all(any(c != 0 for c in p) for p in fam)
    assert all(len(p) <= 4 for p in fam)


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_uniqueness_search_finds_no_collisions(m):
    ps = grid_points(m)
    offenders = uniqueness_search(ps)
    assert offenders == []


# ------------------------------------------------------------- serialization


def test_point_set_round_trip():
    ps = PointSet([(0.1, 0.2), (0.4, 0.8)])
    d = json.loads(json.dumps(point_set_to_dict(ps)))
    assert point_set_from_dict(d) == ps


def test_lift_spec_round_trip():
    spec = LiftSpec([2, 0, 1], [1.0, 0.0, 0.5 + 0.25j])
    d = json.loads(json.dumps(lift_spec_to_dict(spec)))
    back = lift_spec_from_dict(d)
    assert back.tau == spec.tau
    assert back.t_coeffs == spec.t_coeffs


def test_character_expr_round_trip():
    expr = CharacterExpr({(1, 0): 2.0, (0, 3): -1.0j}, indices=[0, 2])
    d = json.loads(json.dumps(character_expr_to_dict(expr)))
    back = character_expr_from_dict(d)
    assert back.coeffs == expr.coeffs
    assert back.indices == expr.indices
