import numpy as np
import pytest
from hypothesis import given, strategies as st

from holoconvex.errors import InvalidDefiningFunction, NotCharacteristic
from holoconvex.operators import (
    CHARACTERISTIC, INDETERMINATE, NON_CHARACTERISTIC, NOT_SIMPLE, SIMPLE, HoloPDO, apply,
    characteristic_test, principal_symbol, simply_characteristic_test,
)
from holoconvex.series import RealAnalyticSeries, TruncatedSeries, sphere_rho
from tests.strategies import complexes, series

N = 6


def op(terms, nvars=2, order=N):
    return HoloPDO.from_symbol_terms(nvars, order, terms)


def model(lam=0.5):
    """lam z1 d^2/dz2^2 + d^2/dz1 dz2"""
    return op({(0, 2): {(1, 0): lam}, (1, 1): 1.0})


RHO = sphere_rho(1, N)
ORIGIN = np.zeros(2)


# -- principal symbol ----------------------------------------------------------

def test_symbol_of_single_derivative():
    sym = principal_symbol(op({(0, 1): 1.0}))
    assert sym.degree == 1
    assert sym.value([0.3, 0.1], [2.0, 5.0]) == pytest.approx(5.0)


def test_symbol_of_model_operator():
    sym = principal_symbol(model(0.7))
    z, zeta = np.array([0.2, -0.1j]), np.array([1.5, 0.5 + 1j])
    assert sym.value(z, zeta) == pytest.approx(0.7 * 0.2 * zeta[1] ** 2 + zeta[0] * zeta[1])


def test_lower_order_terms_are_dropped():
    sym = principal_symbol(op({(0, 2): 1.0, (1, 0): 1.0}))
    assert set(sym.terms) == {(0, 2)}


# -- apply ---------------------------------------------------------------------

def test_apply_examples():
    z1 = TruncatedSeries.variable(2, N, 0)
    z2 = TruncatedSeries.variable(2, N, 1)
    assert apply(op({(1, 0): 1.0}), z1 * z1) == 2 * z1.truncate(N - 1)
    assert apply(op({(1, 1): 1.0}), z1 * z2) == TruncatedSeries.constant(2, N - 2, 1.0)
    assert apply(model(0.3), z1 * z2) == TruncatedSeries.constant(2, N - 2, 1.0)


@given(series(order=5), series(order=5), complexes, complexes)
def test_apply_is_linear(u, v, a, b):
    P = model(0.4)
    lhs = P.apply(u * a + v * b)
    rhs = P.apply(u) * a + P.apply(v) * b
    assert (lhs - rhs).max_abs() < 1e-11


# -- symbol properties ---------------------------------------------------------

@st.composite
def symbol_operators(draw):
    m = draw(st.integers(1, 3))
    terms = {}
    for alpha in [(m, 0), (m - 1, 1), (0, m)]:
        terms[alpha] = draw(series(order=3, scale=0.5))
    terms[(m, 0)] = terms[(m, 0)] + 1.0  # keep the order exactly m
    return HoloPDO(2, terms)


@given(symbol_operators(), complexes, complexes, complexes, complexes)
def test_homogeneity_and_euler(P, c, z1, z2, xi):
    sym = P.principal_symbol()
    z = np.array([z1, z2]) * 0.2
    zeta = np.array([xi, 1.0 + 0j])
    base = sym.value(z, zeta)
    assert abs(sym.value(z, c * zeta) - c ** P.m * base) < 1e-10 * max(1.0, abs(c) ** P.m * abs(base))
    euler = np.dot(zeta, sym.zeta_gradient(z, zeta))
    assert abs(euler - P.m * base) < 1e-10 * max(1.0, abs(base))


# -- point tests ---------------------------------------------------------------

def test_non_characteristic_example():
    t = characteristic_test(op({(0, 1): 1.0}), RHO, ORIGIN)
    assert t.verdict == NON_CHARACTERISTIC
    assert t.value == pytest.approx(-1)


def test_characteristic_examples():
    assert characteristic_test(model(), RHO, ORIGIN).verdict == CHARACTERISTIC
    assert characteristic_test(op({(1, 0): 1.0}), RHO, ORIGIN).verdict == CHARACTERISTIC


def test_simple_and_double_characteristic():
    t = simply_characteristic_test(model(), RHO, ORIGIN)
    assert t.verdict == SIMPLE
    assert np.allclose(t.gradient, [-1, 0])
    assert simply_characteristic_test(op({(2, 0): 1.0}), RHO, ORIGIN).verdict == NOT_SIMPLE


def test_simple_test_requires_characteristic_point():
    with pytest.raises(NotCharacteristic):
        simply_characteristic_test(op({(0, 1): 1.0, (1, 0): 1.0}), RHO, ORIGIN)


def test_vanishing_gradient_is_rejected():
    flat = RealAnalyticSeries.from_terms(2, N, {((1, 0), (1, 0)): 1.0})
    with pytest.raises(InvalidDefiningFunction):
        characteristic_test(model(), flat, ORIGIN)


def test_borderline_value_is_indeterminate():
    # symbol value 3e-9 sits between tol and BAND * tol
    P = op({(1, 1): 1.0, (0, 2): 3e-9})
    assert characteristic_test(P, RHO, ORIGIN).verdict == INDETERMINATE


@given(st.floats(0.2, 3.0), complexes, st.floats(-0.5, 0.5), st.sampled_from([0.5, 1.0, 0.0]))
def test_verdicts_survive_positive_rescaling_of_rho(c0, c1, c2, lam):
    # multiply rho by the positive unit c0 + 2 Re(c1' z1) + c2 |z2|^2 (small enough to stay positive at 0)
    c1 = 0.1 * c1
    unit = RealAnalyticSeries.from_terms(2, N, {
        ((0, 0), (0, 0)): c0, ((1, 0), (0, 0)): c1, ((0, 0), (1, 0)): np.conj(c1),
        ((0, 1), (0, 1)): c2})
    rho2 = unit * RHO
    for P in (model(lam), op({(0, 1): 1.0}), op({(2, 0): 1.0})):
        a, b = characteristic_test(P, RHO, ORIGIN), characteristic_test(P, rho2, ORIGIN)
        assert a.verdict == b.verdict
        if a.verdict == CHARACTERISTIC:
            assert (simply_characteristic_test(P, RHO, ORIGIN).verdict
                    == simply_characteristic_test(P, rho2, ORIGIN).verdict)


def test_operator_records_round_trip():
    P = model(0.25)
    Q = HoloPDO.from_records(2, N, P.to_records())
    assert set(Q.terms) == set(P.terms)
    assert all(Q.terms[a] == P.terms[a] for a in P.terms)


def test_compose_with_multiplication_operator_is_leibniz():
    z1 = TruncatedSeries.variable(2, N, 0)
    d1 = op({(1, 0): 1.0})
    mult = HoloPDO(2, {(0, 0): z1})
    prod = d1.compose(mult)  # d1 o z1 = z1 d1 + 1
    u = TruncatedSeries.from_dict(2, N, {(2, 1): 1.0, (0, 3): 2.0})
    assert prod.apply(u) == d1.apply(z1 * u).truncate(N - 1)
