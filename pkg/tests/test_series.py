import numpy as np
import pytest
from hypothesis import given, strategies as st

from holoconvex.errors import CompositionError, NotAUnitError, ValidationError
from holoconvex.series import (
    RealAnalyticSeries, TruncatedSeries, arith, compose, derive, eval_series, reciprocal, sphere_rho,
)
from tests.strategies import complexes, series, units


def S(nvars, order, terms):
    return TruncatedSeries.from_dict(nvars, order, terms)


def z(nvars, order, j):
    return TruncatedSeries.variable(nvars, order, j)


# -- arithmetic examples -------------------------------------------------------

def test_telescoping_product():
    x = z(1, 4, 0)
    assert arith(1 + x, 1 - x, "mul") == S(1, 4, {(0,): 1, (2,): -1})


def test_additive_identity():
    s = S(2, 3, {(1, 0): 2, (1, 2): 1j})
    assert arith(s, TruncatedSeries.zero(2, 3), "add") == s


def test_binomial_square_truncated_at_two():
    got = (z(2, 2, 0) + z(2, 2, 1)) ** 2
    assert got == S(2, 2, {(2, 0): 1, (1, 1): 2, (0, 2): 1})


def test_product_order_is_minimum():
    a = S(2, 5, {(1, 0): 1})
    b = S(2, 3, {(0, 1): 1})
    assert (a * b).order == 3


def test_variable_count_mismatch():
    with pytest.raises(ValidationError):
        S(2, 3, {(0, 0): 1}) + S(3, 3, {(0, 0, 0): 1})


def test_products_drop_terms_beyond_order():
    x = z(1, 3, 0)
    assert (x ** 2 * x ** 2).is_zero(0.0)


def test_pruning_floor():
    s = S(1, 3, {(1,): 1e-16, (2,): 1.0})
    assert s.coeff((1,)) == 0
    assert s.coeff((2,)) == 1


# -- derivatives ---------------------------------------------------------------

def test_derive_monomials():
    assert derive(z(1, 4, 0) ** 2, 0) == 2 * z(1, 3, 0)
    assert derive(z(2, 4, 0), 1).is_zero(0.0)
    assert derive(S(2, 4, {(2, 1): 1}), 0) == S(2, 3, {(1, 1): 2})


def test_derive_lowers_order():
    assert derive(S(2, 5, {(1, 1): 1}), 0).order == 4


# -- composition ---------------------------------------------------------------

def test_compose_square_of_sum():
    outer = S(1, 4, {(2,): 1})
    got = compose(outer, [z(2, 4, 0) + z(2, 4, 1)])
    assert got == S(2, 4, {(2, 0): 1, (1, 1): 2, (0, 2): 1})


def test_compose_identity():
    s = S(2, 4, {(1, 2): 3, (0, 1): -1j})
    assert compose(z(1, 4, 0), [s]) == s


def test_compose_geometric_series():
    geo = S(1, 3, {(k,): 1 for k in range(4)})
    x = z(1, 3, 0)
    assert compose(geo, [x * x]) == S(1, 3, {(0,): 1, (2,): 1})


def test_compose_rejects_constant_inner():
    with pytest.raises(CompositionError):
        compose(S(1, 4, {(1,): 1, (3,): 1}), [TruncatedSeries.variable(1, 4, 0, shift=1.0)])


def test_compose_exact_reexpansion():
    # (1 + x)^2 with the outer polynomial re-expanded about 1
    outer = S(1, 4, {(2,): 1})
    got = compose(outer, [TruncatedSeries.variable(1, 4, 0, shift=1.0)], exact=True)
    assert got == S(1, 4, {(0,): 1, (1,): 2, (2,): 1})


# -- reciprocal ----------------------------------------------------------------

def test_reciprocal_examples():
    x = z(1, 3, 0)
    assert reciprocal(1 - x) == S(1, 3, {(k,): 1 for k in range(4)})
    assert reciprocal(TruncatedSeries.constant(1, 3, 2.0)) == TruncatedSeries.constant(1, 3, 0.5)
    s = 1 + z(2, 2, 0) + z(2, 2, 1)
    r = reciprocal(s)
    assert r == S(2, 2, {(0, 0): 1, (1, 0): -1, (0, 1): -1, (2, 0): 1, (1, 1): 2, (0, 2): 1})
    assert (r * s) == TruncatedSeries.constant(2, 2, 1.0)


def test_reciprocal_rejects_non_unit():
    with pytest.raises(NotAUnitError):
        reciprocal(z(1, 3, 0))


# -- evaluation ----------------------------------------------------------------

def test_eval_examples():
    assert eval_series(1 + z(1, 3, 0), [2]) == pytest.approx(3)
    rho = sphere_rho(1, 4)
    assert eval_series(rho, [1, 0]) == pytest.approx(1)
    assert eval_series(rho, [0, 1]) == pytest.approx(-2)
    assert isinstance(eval_series(rho, [0.3j, 0.2]), float)


def test_eval_many_matches_eval(rng):
    s = S(2, 4, {(1, 1): 2, (0, 3): -1j, (0, 0): 0.5})
    pts = rng.standard_normal((10, 2)) + 1j * rng.standard_normal((10, 2))
    assert np.allclose(s.eval_many(pts), [s.eval(p) for p in pts])


# -- real-analytic series ------------------------------------------------------

def test_reality_is_enforced():
    with pytest.raises(ValidationError):
        RealAnalyticSeries.from_terms(1, 3, {((1,), (0,)): 1.0})


def test_bidegree_and_coefficients():
    rho = sphere_rho(2, 4)
    assert rho.coeff((0, 0, 1), (0, 0, 0)) == -1
    assert rho.bidegree(1, 1) == {((1, 0, 0), (1, 0, 0)): 1, ((0, 1, 0), (0, 1, 0)): 1}


def test_holomorphic_gradient_of_sphere():
    assert np.allclose(sphere_rho(1, 4).holomorphic_gradient([0, 0]), [0, -1])


def test_record_round_trip():
    s = S(3, 4, {(1, 0, 2): 1 + 2j, (0, 0, 0): -3})
    assert TruncatedSeries.from_records(3, 4, s.to_records()) == s
    rho = sphere_rho(2, 4)
    assert RealAnalyticSeries.from_records(3, 4, rho.to_records()).allclose(rho)


def test_bad_record_is_a_validation_error():
    with pytest.raises(ValidationError):
        TruncatedSeries.from_records(2, 3, [{"exponents": [1], "coeff": [1, 0]}])
    with pytest.raises(ValidationError):
        TruncatedSeries.from_records(2, 3, [{"exp": [1, 0], "coeff": [1, 0]}])


# -- properties ----------------------------------------------------------------

@given(series(), series(), series())
def test_ring_axioms(a, b, c):
    abc = (a * b) * c
    scale = max(1.0, abc.max_abs())
    assert (abc - a * (b * c)).max_abs() < 1e-12 * scale
    assert (a * b - b * a).max_abs() < 1e-12
    assert (a * (b + c) - (a * b + a * c)).max_abs() < 1e-12 * max(1.0, (a * (b + c)).max_abs())


@given(series(order=5), series(order=5), st.integers(0, 1))
def test_leibniz(a, b, j):
    lhs = (a * b).derive(j)
    rhs = a.derive(j) * b.truncate(4) + a.truncate(4) * b.derive(j)
    assert (lhs - rhs).max_abs() < 1e-11


@given(units())
def test_reciprocal_inverts(u):
    assert (u * u.reciprocal() - 1.0).max_abs() < 1e-12 * max(1.0, u.reciprocal().max_abs())


@given(series(order=6, scale=0.5), series(order=6, scale=0.5), complexes, complexes)
def test_eval_is_nearly_multiplicative(a, b, x, y):
    pt = np.array([x, y]) * 0.05 / max(1.0, abs(x), abs(y))
    # tail estimate: terms of degree >= 7 at radius <= 0.05 with coefficients <= 49
    tail = 49 * 2 * 8 * 0.05 ** 7 / (1 - 0.05)
    assert abs((a * b).eval(pt) - a.eval(pt) * b.eval(pt)) < 10 * tail


@given(series(nvars=4, order=4))
def test_real_part_of_polarized_series_is_real(s):
    rho = RealAnalyticSeries(s, check=False).symmetrized()
    assert rho.reality_defect() < 1e-12
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
    for p in pts:
        val = rho.poly.eval(rho.polar_point(p))
        assert abs(val.imag) < 1e-12 * max(1.0, abs(val))


@given(series(nvars=3, order=4), st.permutations([0, 1, 2]))
def test_permute_round_trip(s, perm):
    inv = [perm.index(i) for i in range(3)]
    assert s.permute(perm).permute(inv) == s
