"""Power-series implicit functions and the Cauchy-Kowalevsky recursion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ImplicitSolveError, ValidationError
from .series import TruncatedSeries, ZERO_TOL, compose

#: relative floor on |p'| for a root to count as simple
SIMPLE_ROOT = 1e-6


def shift_to(B: TruncatedSeries, anchor: Sequence[complex]) -> TruncatedSeries:
    """Re-expand an exact polynomial B about ``anchor``: y -> B(anchor + y)."""
    anchor = np.asarray(anchor, dtype=complex)
    if not anchor.any():
        return B
    inner = [TruncatedSeries.variable(B.nvars, B.order, i, shift=anchor[i]) for i in range(B.nvars)]
    return compose(B, inner, exact=True)


def univariate_coefficients(B: TruncatedSeries, var: int) -> np.ndarray:
    """Coefficients (ascending) of t -> B(0, ..., t, ..., 0)."""
    keep = B.project([var])
    return np.array([keep.coeff((k,)) for k in range(keep.order + 1)])


def find_root(coeffs: np.ndarray, tol: float = ZERO_TOL, root_choice: int | None = None,
              max_iter: int = 60) -> complex:
    """A simple root of sum_k coeffs[k] t^k.

    Scalar Newton from t = 0 first; if that stalls (or ``root_choice`` is
    given) the companion-matrix roots are ranked by |p'(t)| descending, ties
    broken by real then imaginary part.  A root counts as simple when
    |p'(t)| exceeds SIMPLE_ROOT * scale; numerically split multiple roots
    fall below that floor.
    """
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if coeffs.size < 2:
        raise ImplicitSolveError("polynomial in the solved variable is constant; no root")
    poly = np.polynomial.Polynomial(coeffs)
    dpoly = poly.deriv()
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    floor = SIMPLE_ROOT * scale
    if root_choice is None:
        t = 0j
        for _ in range(max_iter):
            d = dpoly(t)
            if abs(d) <= tol * scale:
                break
            step = poly(t) / d
            t -= step
            if abs(step) <= 1e-15 * max(1.0, abs(t)):
                break
        if abs(poly(t)) <= tol * scale and abs(dpoly(t)) > floor:
            return complex(t)
    roots = [r for r in np.roots(coeffs[::-1]) if abs(dpoly(r)) > floor]
    if not roots:
        raise ImplicitSolveError("every root of the anchor polynomial is multiple")
    ranked = sorted(roots, key=lambda r: (-round(abs(dpoly(r)), 12), r.real, r.imag))
    choice = 0 if root_choice is None else root_choice
    if not 0 <= choice < len(ranked):
        raise ImplicitSolveError(f"root_choice {choice} out of range ({len(ranked)} simple roots)")
    return complex(ranked[choice])


def implicit_solve(B: TruncatedSeries, solve_index: int, anchor: Sequence[complex] | None = None,
                   tol: float = ZERO_TOL, max_newton: int = 12) -> TruncatedSeries:
    """Series D of the remaining variables with B(..., D, ...) = 0.

    D is expanded in displacements of the remaining variables from the anchor
    and its constant term is the anchor value of the solved variable.  A
    nonzero anchor re-expands B, which is then treated as an exact polynomial.
    """
    nv = B.nvars
    anchor = np.zeros(nv, complex) if anchor is None else np.asarray(anchor, dtype=complex)
    if anchor.shape != (nv,):
        raise ValueError("anchor length must equal the variable count")
    Bs = shift_to(B, anchor)
    scale = max(1.0, B.max_abs())
    if abs(Bs.constant_term) > tol * scale:
        raise ImplicitSolveError(f"B does not vanish at the anchor ({abs(Bs.constant_term):.3e})")
    dB = Bs.derive(solve_index)
    if abs(dB.constant_term) <= tol * scale:
        raise ImplicitSolveError("d B / d(solved variable) vanishes at the anchor")

    order = Bs.order
    rest = [v for v in range(nv) if v != solve_index]
    d = TruncatedSeries.zero(nv, order)  # lives in the full space, free of solve_index
    # Newton only needs an approximate slope; the residual check certifies D
    dB = dB.pad(order)
    for _ in range(max_newton):
        val = Bs.substitute(solve_index, d)
        if val.is_zero(0.0):
            break
        slope = dB.substitute(solve_index, d)
        step = val * slope.reciprocal()
        d = d - step
        if step.max_abs() <= 1e-15 * max(1.0, d.max_abs()):
            break
    resid = Bs.substitute(solve_index, d)
    if resid.max_abs() > tol * scale:
        raise ImplicitSolveError(f"Newton iteration did not converge (residual {resid.max_abs():.3e})")
    return d.project(rest) + anchor[solve_index]


@dataclass(frozen=True)
class FirstOrderPDE:
    """f_{w_k} = F(w_1..w_k, f, f_{w_1}..f_{w_{k-1}}), f(w'', 0) = g(w'').

    ``rhs`` is a series in 2k variables expanded about the data jet: its
    variables are (w_1..w_k, f - g(0), q_1 - g_{w_1}(0), ..., q_{k-1} - g_{w_{k-1}}(0)).
    """

    nvars: int
    rhs: TruncatedSeries
    data: TruncatedSeries

    def __post_init__(self):
        k = self.nvars
        if k < 1:
            raise ValidationError("unknown must have at least one variable")
        if self.rhs.nvars != 2 * k:
            raise ValidationError(f"rhs must have {2 * k} variables, has {self.rhs.nvars}")
        if self.data.nvars != k - 1:
            raise ValidationError(f"data must have {k - 1} variables, has {self.data.nvars}")

    @property
    def jet(self) -> np.ndarray:
        """(g(0), g_{w_1}(0), ..., g_{w_{k-1}}(0))."""
        return np.concatenate([[self.data.constant_term], self.data.gradient0()])

    @classmethod
    def from_absolute(cls, nvars: int, rhs: TruncatedSeries, data: TruncatedSeries) -> "FirstOrderPDE":
        """Build from an rhs written in absolute (f, q) values; rhs must be an exact polynomial."""
        jet = np.concatenate([[data.constant_term], data.gradient0()])
        shift = np.concatenate([np.zeros(nvars, complex), jet])
        return cls(nvars, shift_to(rhs, shift), data)


def _integrate_last(r: TruncatedSeries, stratum: int, order: int) -> np.ndarray:
    """Coefficients of the w_k^{stratum+1} layer of f from the w_k^stratum layer of r."""
    sp = r.space
    k = r.nvars
    sel = np.flatnonzero((sp.exps[:, k - 1] == stratum) & (sp.degs < order))
    exps = sp.exps[sel].copy()
    exps[:, k - 1] += 1
    return exps, r.coeffs[sel] / (stratum + 1)


def ck_solve(problem: FirstOrderPDE, order: int) -> TruncatedSeries:
    """Solve stratum by stratum in w_k: the w_k^{d+1} layer of f comes from the w_k^d layer of F."""
    k = problem.nvars
    rhs = problem.rhs
    order = min(order, rhs.order + 1)
    jet = problem.jet
    # data of lower order is taken as an exact polynomial
    data = problem.data.pad(order)
    f = data.embed(k, list(range(k - 1)))
    coeffs = np.array(f.coeffs)
    sp = f.space
    rhs_ord = min(rhs.order, order)
    rhs_t = rhs.truncate(rhs_ord)
    for d in range(order):
        cur = TruncatedSeries(k, order, coeffs)
        inner_f = cur.truncate(rhs_ord) - jet[0]
        grads = [cur.derive(j) - jet[j + 1] for j in range(k - 1)]
        r = _compose_rhs(rhs_t, inner_f, grads, min(rhs_ord, order - 1))
        exps, vals = _integrate_last(r, d, order)
        if len(exps):
            coeffs[sp.index(exps)] = vals
    return TruncatedSeries(k, order, coeffs)


def _compose_rhs(rhs: TruncatedSeries, f: TruncatedSeries, grads: list[TruncatedSeries], order: int) -> TruncatedSeries:
    """rhs(w, f(w), grads(w)) as a series in w (k variables)."""
    k = f.nvars
    acc = rhs.truncate(order)
    for slot, s in enumerate([f] + grads):
        acc = acc.substitute(k + slot, s.truncate(order).embed(2 * k))
    return acc.project(list(range(k)))


def ck_residual(problem: FirstOrderPDE, f: TruncatedSeries) -> float:
    """Largest coefficient of f_{w_k} - F(w, f, grad' f) through degree order(f) - 1."""
    k = problem.nvars
    jet = problem.jet
    order = min(f.order - 1, problem.rhs.order)
    lhs = f.derive(k - 1).truncate(order)
    grads = [f.derive(j).truncate(order) - jet[j + 1] for j in range(k - 1)]
    r = _compose_rhs(problem.rhs, f.truncate(order) - jet[0], grads, order)
    return (lhs - r).max_abs()
