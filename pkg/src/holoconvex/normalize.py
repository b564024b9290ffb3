"""Second-order normal coordinates for a strictly pseudoconvex germ and its operator.

After normalization the defining function reads

    rho = -2 Re z_{n+1} + sum_{j<=n} |z_j|^2 + O(3)

and the principal symbol, with zeta = (chi, tau),

    P_m = a(z) tau^m + (chi_n + sum_{j<n} b_j(z) chi_j) tau^{m-1} + O(|chi|^2)

with a(0) = b_j(0) = 0 and the chi_n tau^{m-1} coefficient identically 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (InvalidDefiningFunction, NotCharacteristic, NotSimplyCharacteristic,
                     NotStrictlyPseudoconvex)
from .operators import HoloPDO
from .series import RealAnalyticSeries, TruncatedSeries, ZERO_TOL, compose


def _as_matrix(a) -> np.ndarray:
    return np.array(a, dtype=complex)


@dataclass(frozen=True)
class CoordinateMap:
    """z_old = point + linear @ (w', w_{n+1} + shear(w)).

    ``shear`` is an exact holomorphic quadratic polynomial in the new
    coordinates (zero when the map is affine).
    """

    point: np.ndarray
    linear: np.ndarray
    shear: TruncatedSeries

    @property
    def dim(self) -> int:
        return len(self.point)

    @classmethod
    def identity(cls, dim: int) -> "CoordinateMap":
        return cls(np.zeros(dim, complex), np.eye(dim, dtype=complex), TruncatedSeries.zero(dim, 2))

    @property
    def is_affine(self) -> bool:
        return self.shear.is_zero(0.0)

    def _sheared(self, order: int) -> list[TruncatedSeries]:
        w = TruncatedSeries.variables(self.dim, order)
        w[-1] = w[-1] + self.shear.pad(order)
        return w

    def forward(self, order: int) -> list[TruncatedSeries]:
        """Old coordinates as series in the new ones (constant terms = point)."""
        s = self._sheared(order)
        out = []
        for j in range(self.dim):
            acc = TruncatedSeries.constant(self.dim, order, self.point[j])
            for k in range(self.dim):
                if self.linear[j, k] != 0:
                    acc = acc + s[k] * complex(self.linear[j, k])
            out.append(acc)
        return out

    def inverse(self, order: int) -> list[TruncatedSeries]:
        """New coordinates as series in the displacement z_old - point."""
        dim = self.dim
        tinv = np.linalg.inv(self.linear)
        d = TruncatedSeries.variables(dim, order)
        y = []
        for j in range(dim):
            acc = TruncatedSeries.zero(dim, order)
            for k in range(dim):
                if tinv[j, k] != 0:
                    acc = acc + d[k] * complex(tinv[j, k])
            y.append(acc)
        if self.is_affine:
            return y
        # w_last = y_last - shear(y', w_last), solved by fixed point (gains a degree per pass)
        h = y[-1]
        for _ in range(order):
            h = y[-1] - compose(self.shear.pad(order), y[:-1] + [h], exact=True)
        return y[:-1] + [h]

    def jacobian_inverse(self, order: int) -> list[list[TruncatedSeries]] | np.ndarray:
        """(d z_old / d w)^{-1}; a constant matrix when the map is affine."""
        tinv = np.linalg.inv(self.linear)
        if self.is_affine:
            return tinv
        dim = self.dim
        q = self.shear.pad(order + 1)
        grad = [q.derive(k) for k in range(dim)]
        inv_last = (grad[-1] + 1.0).reciprocal()
        # Ds^{-1} = I - e_last (grad Q)^T / (1 + dQ/dw_last)
        ds_inv = [[TruncatedSeries.constant(dim, order, float(i == k)) for k in range(dim)] for i in range(dim)]
        for k in range(dim):
            ds_inv[-1][k] = ds_inv[-1][k] - grad[k] * inv_last
        m = []
        for i in range(dim):
            row = []
            for j in range(dim):
                acc = TruncatedSeries.zero(dim, order)
                for k in range(dim):
                    if tinv[k, j] != 0:
                        acc = acc + ds_inv[i][k] * complex(tinv[k, j])
                row.append(acc)
            m.append(row)
        return m

    def then_rotate(self, unitary: np.ndarray) -> "CoordinateMap":
        """Compose with w' = U y' (w_last unchanged) on the new side."""
        dim = self.dim
        r = np.eye(dim, dtype=complex)
        r[: dim - 1, : dim - 1] = unitary
        y = TruncatedSeries.variables(dim, 2)
        inner = []
        for j in range(dim):
            acc = TruncatedSeries.zero(dim, 2)
            for k in range(dim):
                if r[j, k] != 0:
                    acc = acc + y[k] * complex(r[j, k])
            inner.append(acc)
        shear = compose(self.shear, inner) if not self.is_affine else self.shear
        return CoordinateMap(self.point.copy(), self.linear @ r, shear)

    def to_json(self, order: int) -> dict:
        return {
            "point": [[complex(v).real, complex(v).imag] for v in self.point],
            "linear": [[[complex(v).real, complex(v).imag] for v in row] for row in self.linear],
            "shear": self.shear.to_records(),
            "forward": [s.to_records() for s in self.forward(order)],
            "inverse": [s.to_records() for s in self.inverse(order)],
        }


def _linear_series(mat: np.ndarray, order: int, shift=None) -> list[TruncatedSeries]:
    dim = mat.shape[1]
    w = TruncatedSeries.variables(dim, order)
    out = []
    for j in range(mat.shape[0]):
        acc = TruncatedSeries.constant(dim, order, 0 if shift is None else shift[j])
        for k in range(dim):
            if mat[j, k] != 0:
                acc = acc + w[k] * complex(mat[j, k])
        out.append(acc)
    return out


def pushforward(P: HoloPDO, cmap: CoordinateMap, order: int | None = None) -> HoloPDO:
    """Express P in the new coordinates of ``cmap`` (chain rule on every (d/dz)^alpha)."""
    order = P.order if order is None else order
    dim = P.nvars
    phi = cmap.forward(order)
    coeffs = {a: compose(c.truncate(min(c.order, order)) if c.order >= order else c, phi, exact=True)
              for a, c in P.terms.items()}
    minv = cmap.jacobian_inverse(order)
    terms: dict[tuple, TruncatedSeries] = {}
    if isinstance(minv, np.ndarray):
        # constant Jacobian: (d/dz)^alpha expands as a polynomial in d/dw
        cache: dict[tuple, dict[tuple, complex]] = {}
        for alpha, c in coeffs.items():
            poly = _constant_chain(alpha, minv, cache)
            for gamma, s in poly.items():
                if abs(s) <= 1e-15:
                    continue
                term = c * s
                terms[gamma] = terms[gamma] + term if gamma in terms else term
        return HoloPDO(dim, terms)
    unit = [tuple(int(i == k) for i in range(dim)) for k in range(dim)]
    firsts = [HoloPDO(dim, {unit[k]: minv[k][j] for k in range(dim) if not minv[k][j].is_zero(0.0)})
              for j in range(dim)]
    for alpha, c in coeffs.items():
        op = HoloPDO(dim, {(0,) * dim: TruncatedSeries.constant(dim, order, 1.0)})
        for j, k in enumerate(alpha):
            for _ in range(k):
                op = op.compose(firsts[j])
        for gamma, s in op.terms.items():
            term = c * s
            terms[gamma] = terms[gamma] + term if gamma in terms else term
    return HoloPDO(dim, terms)


def _constant_chain(alpha, minv, cache):
    alpha = tuple(alpha)
    if alpha in cache:
        return cache[alpha]
    dim = len(alpha)
    poly = {(0,) * dim: 1.0 + 0j}
    for j, k in enumerate(alpha):
        for _ in range(k):
            nxt: dict[tuple, complex] = {}
            for g, s in poly.items():
                for i in range(dim):
                    if minv[i, j] == 0:
                        continue
                    ng = list(g)
                    ng[i] += 1
                    ng = tuple(ng)
                    nxt[ng] = nxt.get(ng, 0) + s * minv[i, j]
            poly = nxt
    cache[alpha] = poly
    return poly


def _gram_schmidt(vectors, start=(), tol=1e-10):
    basis = [v / np.linalg.norm(v) for v in start]
    kept = []
    for v in vectors:
        w = np.array(v, dtype=complex)
        for b in basis:
            w = w - (b.conj() @ w) * b
        nrm = np.linalg.norm(w)
        if nrm > tol:
            w = w / nrm
            basis.append(w)
            kept.append(w)
    return kept


@dataclass(frozen=True)
class DomainNormalization:
    change: CoordinateMap
    rho_n: RealAnalyticSeries
    unit: RealAnalyticSeries
    levi: np.ndarray


def normalize_domain(rho: RealAnalyticSeries, p, tol: float = ZERO_TOL) -> DomainNormalization:
    dim = rho.nvars
    n = dim - 1
    order = rho.order
    p = np.asarray(p, dtype=complex)
    if p.shape != (dim,):
        raise InvalidDefiningFunction(f"point must have {dim} coordinates")
    rho_t = rho.pullback(_linear_series(np.eye(dim), order, shift=p))
    zero = (0,) * dim
    if abs(rho_t.coeff(zero, zero)) > tol * max(1.0, rho.poly.max_abs()):
        raise InvalidDefiningFunction(f"p is not on the hypersurface: rho(p) = {rho_t.coeff(zero, zero).real:.3e}")
    e = [tuple(int(i == j) for i in range(dim)) for j in range(dim)]
    g = np.array([rho_t.coeff(e[j], zero) for j in range(dim)])
    if np.linalg.norm(g) <= tol:
        raise InvalidDefiningFunction("holomorphic gradient of rho vanishes at p")

    # complex tangent basis (orthonormal) and a transversal v with g . v = -1
    tangent = _gram_schmidt(np.eye(dim, dtype=complex), start=[np.conj(g)])
    normal = -np.conj(g) / np.vdot(g, g).real
    t1 = np.column_stack(tangent + [normal])
    rho_1 = rho_t.pullback(_linear_series(t1, order))

    levi = np.array([[rho_1.coeff(e[j], e[k]) for k in range(n)] for j in range(n)])
    levi = 0.5 * (levi + levi.conj().T)
    try:
        chol = np.linalg.cholesky(levi)
    except np.linalg.LinAlgError:
        raise NotStrictlyPseudoconvex(
            f"Levi form is not positive definite at p (eigenvalues {np.linalg.eigvalsh(levi)})") from None
    if np.min(np.linalg.eigvalsh(levi)) <= tol:
        raise NotStrictlyPseudoconvex("Levi form is degenerate at p")
    t2 = np.eye(dim, dtype=complex)
    t2[:n, :n] = np.linalg.inv(chol).T
    rho_2 = rho_1.pullback(_linear_series(t2, order))

    # positive unit 1 + 2 Re(sum c_j z_j) removing z_j zbar_{n+1} cross terms
    c = np.array([rho_2.coeff(e[j], e[n]) for j in range(n)] + [0.5 * rho_2.coeff(e[n], e[n]).real])
    unit_terms = {(zero, zero): 1.0}
    for j in range(dim):
        if c[j] != 0:
            unit_terms[(e[j], zero)] = c[j]
            unit_terms[(zero, e[j])] = np.conj(c[j])
    unit = RealAnalyticSeries.from_terms(dim, order, unit_terms)
    rho_3 = unit * rho_2

    # shear z_{n+1} -> z_{n+1} + Q(z) removing the pure (2,0) part
    quad = {a: v for (a, b), v in rho_3.bidegree(2, 0).items()}
    shear = TruncatedSeries.from_dict(dim, 2, quad)
    change = CoordinateMap(p.copy(), t1 @ t2, shear)
    s = TruncatedSeries.variables(dim, order)
    s[-1] = s[-1] + shear.pad(order)
    rho_n = rho_3.pullback(s)
    unit_n = unit.pullback(s)
    return DomainNormalization(change, rho_n, unit_n, levi)


def householder_to_last(b: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Unitary U with U^H b along e_last, of length |b|.

    When b is already along e_last the identity is returned, so the phase of
    b_last survives; otherwise U^H b = |b| e_last.
    """
    n = len(b)
    nrm = np.linalg.norm(b)
    if n == 0 or nrm == 0 or np.linalg.norm(b[:-1]) <= tol * nrm:
        return np.eye(n, dtype=complex)
    x = b / nrm
    phase = x[-1] / abs(x[-1]) if abs(x[-1]) > 0 else 1.0
    v = x.copy()
    v[-1] += phase
    h = np.eye(n, dtype=complex) - 2.0 * np.outer(v, v.conj()) / np.vdot(v, v).real
    d = np.eye(n, dtype=complex)
    d[-1, -1] = -phase
    return h @ d


@dataclass(frozen=True)
class NormalizedProblem:
    rho_n: RealAnalyticSeries
    P_n: HoloPDO
    a: TruncatedSeries
    b: list
    a_grad0: np.ndarray
    change: CoordinateMap
    unit: RealAnalyticSeries
    rotation: np.ndarray
    b_tilde0: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    @property
    def dim(self) -> int:
        return self.P_n.nvars

    @property
    def m(self) -> int:
        return self.P_n.m


def _tau_power_index(dim: int, m: int, j: int | None = None) -> tuple:
    idx = [0] * dim
    if j is None:
        idx[-1] = m
    else:
        idx[-1] = m - 1
        idx[j] += 1
    return tuple(idx)


def normalize_operator(P: HoloPDO, dom: DomainNormalization, tol: float = ZERO_TOL) -> NormalizedProblem:
    dim = P.nvars
    n = dim - 1
    m = P.m
    order = min(P.order, dom.rho_n.order)
    p1 = pushforward(P, dom.change, order)
    sym = p1.principal_symbol()
    zero_s = TruncatedSeries.zero(dim, order)
    a_t = sym.coefficient(_tau_power_index(dim, m)) or zero_s
    if abs(a_t.constant_term) > tol * max(1.0, sym_scale(sym)):
        raise NotCharacteristic("tau^m coefficient does not vanish at p: boundary is not characteristic")
    b_t = [sym.coefficient(_tau_power_index(dim, m, j)) or zero_s for j in range(n)]
    b0 = np.array([s.constant_term for s in b_t])
    if np.linalg.norm(b0) <= tol:
        raise NotSimplyCharacteristic("chi tau^{m-1} coefficients vanish at p: not simply characteristic")

    u = householder_to_last(b0)
    rot = CoordinateMap(np.zeros(dim, complex), np.eye(dim, dtype=complex), TruncatedSeries.zero(dim, 2))
    rot = rot.then_rotate(u)
    p2 = pushforward(p1, rot, order)
    rho_n = dom.rho_n.pullback(rot.forward(dom.rho_n.order))
    unit = dom.unit.pullback(rot.forward(dom.unit.order))
    change = dom.change.then_rotate(u)

    sym2 = p2.principal_symbol()
    bn = sym2.coefficient(_tau_power_index(dim, m, n - 1))
    if bn is None or abs(bn.constant_term) <= tol:
        raise NotSimplyCharacteristic("rotated chi_n coefficient vanishes")
    p3 = p2.scaled(bn.reciprocal())
    sym3 = p3.principal_symbol()
    a = sym3.coefficient(_tau_power_index(dim, m)) or TruncatedSeries.zero(dim, order)
    b = [sym3.coefficient(_tau_power_index(dim, m, j)) or TruncatedSeries.zero(dim, order) for j in range(n - 1)]
    a_grad0 = a.gradient0()
    return NormalizedProblem(rho_n, p3, a, b, a_grad0, change, unit, u, b0)


def sym_scale(sym) -> float:
    return max((c.max_abs() for c in sym.terms.values()), default=1.0)
