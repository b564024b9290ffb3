"""Bundled invariant suites run by `holoconvex selftest`."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .cksolve import FirstOrderPDE, ck_solve
from .eigen import jacobi_eigvalsh
from .hypersurface import (
    choose_initial_data, construct_surface, contact_form_matrix, contact_form_spectrum,
    tsuno_renormalize,
)
from .normalize import normalize_domain, normalize_operator
from .operators import HoloPDO
from .posform import build_Q, closed_form_spectrum, pos_check
from .series import TruncatedSeries, ZERO_TOL, sphere_rho

FAULTS = ("posform-spectrum",)


def residual_bound(order: int, tol: float = ZERO_TOL) -> float:
    """Residual bound used by the suites; loosened by a decade per order below 8."""
    return tol * 10.0 ** max(0, 8 - order)


def random_series(rng, nvars: int, order: int) -> TruncatedSeries:
    s = TruncatedSeries.zero(nvars, order)
    c = rng.standard_normal(s.coeffs.size) + 1j * rng.standard_normal(s.coeffs.size)
    return TruncatedSeries(nvars, order, c)


def normal_form_operator(a, order: int, m: int = 2) -> HoloPDO:
    """(sum_j a_j z_j) tau^m + chi_n tau^{m-1} on C^{n+1}."""
    a = np.asarray(a, dtype=complex)
    n = len(a)
    dim = n + 1
    lin = {tuple(int(i == j) for i in range(dim)): a[j] for j in range(n) if a[j] != 0}
    top = tuple(m if i == n else 0 for i in range(dim))
    mixed = tuple(1 if i == n - 1 else (m - 1 if i == n else 0) for i in range(dim))
    terms = {mixed: 1.0}
    if lin:
        terms[top] = lin
    return HoloPDO.from_symbol_terms(dim, order, terms)


def normal_form_spectrum(a, order: int = 3) -> np.ndarray:
    P = normal_form_operator(a, order)
    rho = sphere_rho(len(a), order)
    return np.sort(pos_check(build_Q(P, rho, np.zeros(len(a) + 1))).restricted_spectrum)


def suite_series_ring(order: int, fault: str | None) -> tuple[bool, str]:
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(5):
        a, b, c = (random_series(rng, 3, order) for _ in range(3))
        worst = max(worst, ((a * b) * c - a * (b * c)).max_abs(), (a * (b + c) - a * b - a * c).max_abs())
        u = a.truncate(order) - a.constant_term + 1.0
        worst = max(worst, (u * u.reciprocal() - 1.0).max_abs())
    return worst < 1e-9, f"max defect {worst:.2e}"


def suite_jacobi(order: int, fault: str | None) -> tuple[bool, str]:
    rng = np.random.default_rng(2)
    worst = 0.0
    for k in range(2, 8):
        x = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        h = x + x.conj().T
        worst = max(worst, float(np.max(np.abs(jacobi_eigvalsh(h) - np.linalg.eigvalsh(h)))))
    return worst < 1e-10, f"max deviation from LAPACK {worst:.2e}"


def suite_posform_spectrum(order: int, fault: str | None) -> tuple[bool, str]:
    rng = np.random.default_rng(3)
    shift = 1e-3 if fault == "posform-spectrum" else 0.0
    worst = 0.0
    for _ in range(40):
        n = int(rng.integers(1, 5))
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        got = normal_form_spectrum(a)
        worst = max(worst, float(np.max(np.abs(got - closed_form_spectrum(a, shift)))))
    return worst < 1e-9, f"max spectrum error {worst:.2e}"


def suite_contact_form(order: int, fault: str | None) -> tuple[bool, str]:
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(40):
        n = int(rng.integers(1, 5))
        a = np.abs(rng.standard_normal(n))
        a *= rng.uniform(0, 0.99) / np.linalg.norm(a)
        got = np.sort(jacobi_eigvalsh(contact_form_matrix(a)))
        worst = max(worst, float(np.max(np.abs(got - contact_form_spectrum(a)))))
    return worst < 1e-9, f"max spectrum error {worst:.2e}"


def suite_ck_oracles(order: int, fault: str | None) -> tuple[bool, str]:
    N = max(order, 3)
    # f_{w2} = f_{w1}, f(w1, 0) = 1 + w1; rhs written about the jet (1, 1)
    rhs = TruncatedSeries.variable(4, N, 3, shift=1.0)
    data = TruncatedSeries.from_dict(1, N, {(0,): 1.0, (1,): 1.0})
    f = ck_solve(FirstOrderPDE(2, rhs, data), N)
    want = TruncatedSeries.from_dict(2, N, {(0, 0): 1, (1, 0): 1, (0, 1): 1})
    err = (f - want).max_abs()
    # f_{w2} = f, f(w1, 0) = w1: coefficient of w1 w2^k is 1/k!
    rhs = TruncatedSeries.variable(4, N, 2, shift=0.0)
    f = ck_solve(FirstOrderPDE(2, rhs, TruncatedSeries.variable(1, N, 0)), N)
    err = max(err, max(abs(f.coeff((1, k)) - 1 / math.factorial(k)) for k in range(N)))
    # f' = f^2, f(0) = 1
    rhs = TruncatedSeries.variable(2, N, 1, shift=1.0) ** 2
    f = ck_solve(FirstOrderPDE(1, rhs, TruncatedSeries.constant(0, N, 1.0)), N)
    err = max(err, max(abs(f.coeff((k,)) - 1) for k in range(N + 1)))
    return err < 1e-12, f"max coefficient error {err:.2e}"


def _surface_residuals(order: int):
    cases = [
        (sphere_rho(1, order), normal_form_operator([0.5], order)),
        (sphere_rho(2, order), normal_form_operator([0.3, 0.4j], order)),
    ]
    worst = 0.0
    for rho, P in cases:
        nz = normalize_operator(P, normalize_domain(rho, np.zeros(P.nvars)))
        init = choose_initial_data(nz.a_grad0[: nz.dim - 1], order)
        S = construct_surface(nz, init.g, order)
        worst = max(worst, S.echar_residual, S.ck_residual)
    return worst


def suite_echar(order: int, fault: str | None) -> tuple[bool, str]:
    worst = _surface_residuals(order)
    bound = residual_bound(order)
    return worst < bound, f"max residual {worst:.2e} (bound {bound:.0e})"


def suite_renormalize(order: int, fault: str | None) -> tuple[bool, str]:
    P = HoloPDO.from_symbol_terms(2, order, {(0, 2): {(0, 1): 1.0}, (1, 1): 1.0})
    ts = tsuno_renormalize(P, TruncatedSeries.variable(2, order, 1), order)
    bound = residual_bound(order)
    ok = ts.residual < bound and ts.data_defect == 0
    return ok, f"residual {ts.residual:.2e}, Cauchy data defect {ts.data_defect:.1e}"


SUITES: dict[str, Callable[[int, str | None], tuple[bool, str]]] = {
    "series-ring": suite_series_ring,
    "eigen-jacobi": suite_jacobi,
    "posform-spectrum": suite_posform_spectrum,
    "contact-form": suite_contact_form,
    "ck-oracles": suite_ck_oracles,
    "echar-residual": suite_echar,
    "renormalize": suite_renormalize,
}


def run_selftest(order: int = 8, fault: str | None = None) -> list[tuple[str, bool, str]]:
    rows = []
    for name, fn in SUITES.items():
        try:
            ok, detail = fn(order, fault)
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        rows.append((name, bool(ok), detail))
    return rows
