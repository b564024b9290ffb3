"""The Hermitian form Q_p and the positivity condition (Pos)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigen import jacobi_eigh
from .normalize import NormalizedProblem, _gram_schmidt
from .operators import HoloPDO, conormal
from .series import RealAnalyticSeries, ZERO_TOL

EPS_POS = 1e-7

YES, NO, MARGINAL = "yes", "no", "marginal"


@dataclass(frozen=True)
class QForm:
    """(n+2)x(n+2) Hermitian matrix, index 0 the extra C factor, 1..n+1 the z slots."""

    matrix: np.ndarray
    conormal: np.ndarray

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


@dataclass(frozen=True)
class PosVerdict:
    holds: str
    restricted_spectrum: np.ndarray
    margin: float
    sum_sq: float | None = None

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "restricted_spectrum": [float(x) for x in self.restricted_spectrum],
            "sum_sq": None if self.sum_sq is None else float(self.sum_sq),
            "margin": float(self.margin),
        }


def classify_margin(spectrum, eps: float = EPS_POS) -> tuple[str, float]:
    spectrum = np.sort(np.asarray(spectrum, dtype=float))
    margin = float(spectrum[0])
    bound = eps * max(1.0, float(np.max(np.abs(spectrum))))
    if abs(margin) <= bound:
        return MARGINAL, margin
    return (YES if margin > 0 else NO), margin


def build_Q(P: HoloPDO, rho: RealAnalyticSeries, p) -> QForm:
    p = np.asarray(p, dtype=complex)
    dim = P.nvars
    zeta = conormal(rho, p)
    pp = rho.polar_point(p)
    sym = P.principal_symbol()
    dzeta = sym.zeta_gradient(p, zeta)
    dz = sym.z_gradient(p, zeta)
    d1 = [rho.dz(j) for j in range(dim)]
    hol = np.array([[d1[j].derive(k).eval(pp) for k in range(dim)] for j in range(dim)])
    levi = np.array([[d1[j].derive(dim + k).eval(pp) for k in range(dim)] for j in range(dim)])
    q = np.zeros((dim + 1, dim + 1), dtype=complex)
    q[1:, 1:] = levi
    col = dz + hol @ dzeta
    q[1:, 0] = col
    q[0, 1:] = np.conj(col)
    q[0, 0] = (dzeta @ levi @ np.conj(dzeta)).real
    return QForm(q, zeta)


def constraint_basis(conormal_vec: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of {t : t_0 free, sum_j rho_{z_j} t_j = 0}."""
    dim = len(conormal_vec)
    c = np.concatenate([[0], np.conj(conormal_vec)])
    basis = _gram_schmidt(np.eye(dim + 1, dtype=complex), start=[c])
    return np.column_stack(basis)


def pos_check(Q: QForm, eps: float = EPS_POS) -> PosVerdict:
    b = constraint_basis(Q.conormal)
    # the form is sum q_jk t_j conj(t_k), so compress with b^T q conj(b)
    restricted = b.T @ Q.matrix @ b.conj()
    spectrum, _ = jacobi_eigh(restricted)
    holds, margin = classify_margin(spectrum, eps)
    return PosVerdict(holds, spectrum, margin)


def closed_form_spectrum(a_tangential, fault: float = 0.0) -> np.ndarray:
    """{1 (x n-1), 1 +- sqrt(sum |a_j|^2)} for the normal-form Q'_0."""
    a = np.asarray(a_tangential, dtype=complex)
    n = len(a)
    r = np.sqrt(float(np.sum(np.abs(a) ** 2))) + fault
    return np.sort(np.concatenate([np.ones(n - 1), [1 - r, 1 + r]]))


def reduced_criterion(np_: NormalizedProblem, eps: float = EPS_POS, fault: float = 0.0) -> PosVerdict:
    n = np_.dim - 1
    a = np_.a_grad0[:n]
    sum_sq = float(np.sum(np.abs(a) ** 2))
    spectrum = closed_form_spectrum(a, fault)
    holds, margin = classify_margin(spectrum, eps)
    return PosVerdict(holds, spectrum, margin, sum_sq)
