import numpy as np
import pytest
from hypothesis import given, strategies as st

from holoconvex.errors import InvalidDefiningFunction, NotSimplyCharacteristic, NotStrictlyPseudoconvex
from holoconvex.normalize import (
    CoordinateMap, householder_to_last, normalize_domain, normalize_operator, pushforward,
)
from holoconvex.operators import HoloPDO, characteristic_test, simply_characteristic_test
from holoconvex.series import RealAnalyticSeries, TruncatedSeries, compose, sphere_rho
from tests.strategies import pseudoconvex_instances

N = 6


def rho_from(dim, terms, order=N):
    return RealAnalyticSeries.from_terms(dim, order, terms)


def e(dim, j, k=1):
    return tuple(k if i == j else 0 for i in range(dim))


def zero(dim):
    return (0,) * dim


def model_rho(levi=1.0, pure=0.0, order=N):
    """-2 Re z2 + levi |z1|^2 + pure Re(z1^2)"""
    t = {(e(2, 1), zero(2)): -1, (zero(2), e(2, 1)): -1, (e(2, 0), e(2, 0)): levi}
    if pure:
        t[(e(2, 0, 2), zero(2))] = pure / 2
        t[(zero(2), e(2, 0, 2))] = pure / 2
    return rho_from(2, t, order)


def assert_normal_form(rho_n, tol=1e-10):
    dim = rho_n.nvars
    n = dim - 1
    for (a, b), v in rho_n.items():
        deg = sum(a) + sum(b)
        if deg == 0:
            assert abs(v) < tol
        elif deg == 1:
            want = -1 if (a == e(dim, n) or b == e(dim, n)) else 0
            assert abs(v - want) < tol, (a, b, v)
        elif deg == 2:
            if sum(a) == 1:
                want = 1 if (a == b and a[n] == 0) else 0
                assert abs(v - want) < tol, (a, b, v)
            else:
                assert abs(v) < tol, (a, b, v)
    for j in range(n):
        assert abs(rho_n.coeff(e(dim, j), e(dim, j)) - 1) < tol


# -- domain examples -----------------------------------------------------------

def test_normal_form_is_a_fixed_point():
    dom = normalize_domain(sphere_rho(1, N), [0, 0])
    assert np.allclose(dom.change.linear, np.eye(2))
    assert dom.change.is_affine
    assert dom.rho_n.allclose(sphere_rho(1, N))


def test_levi_scaling_by_cholesky():
    dom = normalize_domain(model_rho(levi=4.0), [0, 0])
    assert np.allclose(dom.change.linear, np.diag([0.5, 1]))
    assert_normal_form(dom.rho_n)


def test_shear_removes_pure_terms():
    dom = normalize_domain(model_rho(pure=1.0), [0, 0])
    assert dom.change.shear.coeff((2, 0)) == pytest.approx(0.5)
    assert_normal_form(dom.rho_n)


def test_rejects_pseudoconcave_point():
    with pytest.raises(NotStrictlyPseudoconvex):
        normalize_domain(model_rho(levi=-1.0), [0, 0])


def test_rejects_point_off_the_hypersurface():
    with pytest.raises(InvalidDefiningFunction):
        normalize_domain(sphere_rho(1, N), [0, 1])


def test_unit_ball_at_a_boundary_point():
    ball = rho_from(2, {(e(2, 0), e(2, 0)): 1, (e(2, 1), e(2, 1)): 1, (zero(2), zero(2)): -1})
    dom = normalize_domain(ball, [0.6, 0.8j])
    assert_normal_form(dom.rho_n)


@given(pseudoconvex_instances())
def test_random_instances_reach_normal_form(inst):
    rho, p = inst
    assert_normal_form(normalize_domain(rho, p).rho_n)


@given(pseudoconvex_instances())
def test_round_trip_through_the_stored_map(inst):
    rho, p = inst
    dom = normalize_domain(rho, p)
    fwd, inv = dom.change.forward(N), dom.change.inverse(N)
    # roundoff grows with the coefficient size of the maps (near-singular Levi forms give large inverses)
    scale = max(1.0, max(s.max_abs() for s in fwd)) * max(1.0, max(s.max_abs() for s in inv))
    tol = 1e-14 * scale
    # forward o inverse is the identity
    for j, s in enumerate(fwd):
        back = compose(s - s.constant_term, inv)
        assert (back - TruncatedSeries.variable(rho.nvars, N, j)).max_abs() < tol
    pushed = rho.pullback(fwd)
    assert (dom.unit * pushed).truncate(N - 2).allclose(dom.rho_n.truncate(N - 2), tol)
    back = pushed.pullback(inv)
    assert back.truncate(N - 2).allclose(rho.truncate(N - 2), tol)


# -- operator normalization ----------------------------------------------------

def model_operator(a_terms, dim=2, scale=1.0, order=N):
    n = dim - 1
    mixed = tuple(1 if i == n - 1 else (1 if i == n else 0) for i in range(dim))
    return HoloPDO.from_symbol_terms(dim, order, {e(dim, n, 2): a_terms, mixed: scale})


def test_model_operator_read_off():
    nz = normalize_operator(model_operator({(1, 0): 0.7}), normalize_domain(sphere_rho(1, N), [0, 0]))
    assert nz.a == TruncatedSeries.from_dict(2, N, {(1, 0): 0.7})
    assert np.allclose(nz.a_grad0, [0.7, 0])


def test_division_by_constant_unit():
    nz = normalize_operator(model_operator({(1, 0): 0.7}, scale=2.0), normalize_domain(sphere_rho(1, N), [0, 0]))
    assert np.allclose(nz.a_grad0, [0.35, 0])
    coeff = nz.P_n.terms[(1, 1)]
    assert coeff.constant_term == pytest.approx(1)


def test_three_dimensional_read_off_with_identity_rotation():
    P = model_operator({(1, 0, 0): 0.3, (0, 1, 0): 0.4j}, dim=3)
    nz = normalize_operator(P, normalize_domain(sphere_rho(2, N), [0, 0, 0]))
    assert np.allclose(nz.rotation, np.eye(2))
    assert np.allclose(nz.a_grad0, [0.3, 0.4j, 0])


def test_rotation_aligns_the_chi_coefficients():
    # b = (1, 1) at 0 needs a genuine rotation
    P = HoloPDO.from_symbol_terms(3, N, {(1, 0, 1): 1.0, (0, 1, 1): 1.0, (0, 0, 2): {(1, 0, 0): 0.2}})
    nz = normalize_operator(P, normalize_domain(sphere_rho(2, N), [0, 0, 0]))
    u = nz.rotation
    assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12)
    assert all(abs(b.constant_term) < 1e-12 for b in nz.b)
    assert_normal_form(nz.rho_n)
    assert np.linalg.norm(nz.a_grad0[:2]) == pytest.approx(0.2 / np.sqrt(2))


def test_not_simply_characteristic_is_rejected():
    P = HoloPDO.from_symbol_terms(2, N, {(2, 0): 1.0})
    with pytest.raises(NotSimplyCharacteristic):
        normalize_operator(P, normalize_domain(sphere_rho(1, N), [0, 0]))


@given(st.lists(st.builds(complex, st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=5))
def test_householder_is_unitary(entries):
    b = np.array(entries)
    if np.linalg.norm(b) < 1e-6:
        return
    u = householder_to_last(b)
    assert np.allclose(u.conj().T @ u, np.eye(len(b)), atol=1e-12)
    target = u.conj().T @ b
    assert np.allclose(target[:-1], 0, atol=1e-12)
    assert abs(target[-1]) == pytest.approx(np.linalg.norm(b))


@given(pseudoconvex_instances(dim=2), st.floats(-0.9, 0.9))
def test_point_verdicts_are_invariant(inst, lam):
    rho, p = inst
    dom = normalize_domain(rho, p)
    # build an operator characteristic at p in the original frame: symbol <zeta, v> <zeta, w> with v . conormal = 0
    zeta = rho.holomorphic_gradient(p)
    v = np.array([zeta[1], -zeta[0]])
    w = np.array([1.0, 0.5])
    terms = {(2, 0): v[0] * w[0], (1, 1): v[0] * w[1] + v[1] * w[0], (0, 2): v[1] * w[1]}
    P = HoloPDO.from_symbol_terms(2, N, {k: {(0, 0): c, (1, 0): lam * c} for k, c in terms.items()})
    a = characteristic_test(P, rho, p)
    b = characteristic_test(normalize_operator(P, dom).P_n, dom.rho_n, np.zeros(2))
    assert a.verdict == b.verdict
    if a.verdict == "characteristic":
        assert (simply_characteristic_test(P, rho, p).verdict
                == simply_characteristic_test(normalize_operator(P, dom).P_n, dom.rho_n, np.zeros(2)).verdict)


def test_pushforward_intertwines_application():
    cmap = CoordinateMap(np.zeros(2, complex), np.array([[1, 0.5], [0.2j, 2]]),
                         TruncatedSeries.from_dict(2, 2, {(2, 0): 0.3, (1, 1): -0.1}))
    P = HoloPDO.from_symbol_terms(2, N, {(1, 1): {(0, 0): 1, (1, 0): 0.5}, (0, 2): {(0, 1): 2.0}, (1, 0): 1.0})
    Q = pushforward(P, cmap, N)
    u = TruncatedSeries.from_dict(2, N, {(1, 1): 1.0, (3, 0): 0.5, (0, 4): 1j, (2, 2): 1.0})
    lhs = Q.apply(u)
    rhs = compose(P.apply(compose(u, cmap.inverse(N))), cmap.forward(N - 2))
    k = min(lhs.order, rhs.order)
    assert (lhs.truncate(k) - rhs.truncate(k)).max_abs() < 1e-10


@given(st.floats(0.5, 2.0), st.floats(-1, 1))
def test_dividing_by_a_unit_keeps_the_symbol_zero_set(c0, c1):
    P = model_operator({(1, 0): 0.5})
    unit = TruncatedSeries.from_dict(2, N, {(0, 0): c0, (0, 1): c1})
    Q = P.scaled(unit.reciprocal())
    # the truncated reciprocal drops a tail of relative size (|c1| / c0)^N / c0 at degree N + 1
    tol = 1e-12 * max(1.0, (abs(c1) / c0) ** N / c0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        z = 0.01 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
        # zeros of P_m(z, .) in the slice zeta = (s, 1): s = -0.5 z1
        zeta = np.array([-0.5 * z[0], 1.0])
        assert abs(P.principal_symbol().value(z, zeta)) < 1e-14
        assert abs(Q.principal_symbol().value(z, zeta)) < tol
