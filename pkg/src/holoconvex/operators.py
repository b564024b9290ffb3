"""Holomorphic linear differential operators and their principal symbols."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidDefiningFunction, NotCharacteristic, ValidationError
from .series import RealAnalyticSeries, TruncatedSeries, ZERO_TOL

CHARACTERISTIC = "characteristic"
NON_CHARACTERISTIC = "non-characteristic"
INDETERMINATE = "indeterminate"
SIMPLE = "simple"
NOT_SIMPLE = "not-simple"

#: a symbol value inside [tol*scale, BAND*tol*scale] is too close to call
BAND = 10.0


class Symbol:
    """Polynomial in zeta of exact degree m with series coefficients in z.

    ``terms`` maps a zeta multi-index to its coefficient series.  The zeta
    structure is kept exact, so substitutions such as tau = -1 lose nothing.
    """

    def __init__(self, nvars: int, degree: int, terms: Mapping[tuple, TruncatedSeries]):
        self.nvars = nvars
        self.degree = degree
        self.terms = {tuple(k): v for k, v in terms.items() if not v.is_zero(0.0)}

    def __repr__(self):
        return f"Symbol(nvars={self.nvars}, degree={self.degree}, terms={len(self.terms)})"

    def coefficient(self, beta: Sequence[int]) -> TruncatedSeries | None:
        return self.terms.get(tuple(beta))

    def value(self, z: Sequence[complex], zeta: Sequence[complex]) -> complex:
        z = np.asarray(z, dtype=complex)
        zeta = np.asarray(zeta, dtype=complex)
        return complex(sum(c.eval(z) * np.prod(zeta ** np.array(b)) for b, c in self.terms.items()))

    def zeta_derivative(self, j: int) -> "Symbol":
        terms = {}
        for beta, c in self.terms.items():
            if beta[j]:
                nb = list(beta)
                nb[j] -= 1
                terms[tuple(nb)] = c * beta[j]
        return Symbol(self.nvars, self.degree - 1, terms)

    def z_derivative(self, j: int) -> "Symbol":
        return Symbol(self.nvars, self.degree, {b: c.derive(j) for b, c in self.terms.items()})

    def zeta_gradient(self, z, zeta) -> np.ndarray:
        return np.array([self.zeta_derivative(j).value(z, zeta) for j in range(self.nvars)])

    def z_gradient(self, z, zeta) -> np.ndarray:
        return np.array([self.z_derivative(j).value(z, zeta) for j in range(self.nvars)])

    def evaluate(self, z, zeta) -> "SymbolValue":
        return SymbolValue(np.asarray(z, complex), np.asarray(zeta, complex),
                           self.value(z, zeta), self.zeta_gradient(z, zeta))

    def substitute(self, zeta: Sequence, coeff_map=None) -> TruncatedSeries:
        """sum_beta c_beta * prod zeta_j**beta_j with zeta_j series (or scalars).

        ``coeff_map`` re-homes each coefficient series into the space of the zeta
        series (default: identity, i.e. zeta series live in z's variables).
        """
        zeta = list(zeta)
        ref = next((s for s in zeta if isinstance(s, TruncatedSeries)), None)
        acc = None
        cache: dict[tuple[int, int], object] = {}

        def pw(j: int, k: int):
            key = (j, k)
            if key not in cache:
                cache[key] = zeta[j] ** k if isinstance(zeta[j], TruncatedSeries) else complex(zeta[j]) ** k
            return cache[key]

        for beta, c in self.terms.items():
            term = coeff_map(c) if coeff_map else c
            for j, k in enumerate(beta):
                if k:
                    term = term * pw(j, k)
            acc = term if acc is None else acc + term
        if acc is None:
            base = ref if ref is not None else next(iter(self.terms.values()), None)
            if base is None:
                raise ValueError("cannot infer the space of an empty symbol")
            return TruncatedSeries.zero(base.nvars, base.order)
        return acc

    def taylor(self, zeta0: Sequence[TruncatedSeries]) -> dict[tuple, TruncatedSeries]:
        """Coefficients T_beta with P(z, zeta0 + eta) = sum_beta T_beta(z) eta^beta.

        T_beta is (d_zeta)^beta P(z, zeta0) / beta!.
        """
        zeta0 = list(zeta0)
        out: dict[tuple, TruncatedSeries] = {}
        for alpha, c in self.terms.items():
            ranges = [range(a + 1) for a in alpha]
            for beta in np.ndindex(*[len(r) for r in ranges]):
                term = c
                for j, (a, b) in enumerate(zip(alpha, beta)):
                    if a - b:
                        term = term * (zeta0[j] ** (a - b))
                    term = term * math.comb(a, b)
                beta = tuple(int(b) for b in beta)
                out[beta] = out[beta] + term if beta in out else term
        return out


@dataclass(frozen=True)
class SymbolValue:
    z: np.ndarray
    zeta: np.ndarray
    value: complex
    zeta_gradient: np.ndarray


class HoloPDO:
    """P = sum_{|alpha| <= m} a_alpha(z) (d/dz)^alpha with series coefficients."""

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], TruncatedSeries]):
        clean = {}
        for alpha, coeff in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != nvars or min(alpha, default=0) < 0:
                raise ValidationError(f"bad multi-index {alpha} for {nvars} variables")
            if coeff.nvars != nvars:
                raise ValidationError(f"coefficient of {alpha} has {coeff.nvars} variables, expected {nvars}")
            if alpha in clean:
                coeff = clean[alpha] + coeff
            clean[alpha] = coeff
        clean = {a: c for a, c in clean.items() if not c.is_zero(0.0)}
        if not clean:
            raise ValidationError("operator has no nonzero terms")
        self.nvars = nvars
        self.terms = clean
        self.m = max(sum(a) for a in clean)

    def __repr__(self):
        return f"HoloPDO(nvars={self.nvars}, m={self.m}, terms={sorted(self.terms)})"

    @property
    def order(self) -> int:
        """Truncation order shared by every coefficient (the smallest one)."""
        return min(c.order for c in self.terms.values())

    def principal_symbol(self) -> Symbol:
        return Symbol(self.nvars, self.m, {a: c for a, c in self.terms.items() if sum(a) == self.m})

    def apply(self, u: TruncatedSeries) -> TruncatedSeries:
        if u.order < self.m:
            raise ValueError(f"series order {u.order} below operator order {self.m}")
        out_order = u.order - self.m
        acc = TruncatedSeries.zero(self.nvars, out_order)
        for alpha, c in self.terms.items():
            d = u
            for j, k in enumerate(alpha):
                for _ in range(k):
                    d = d.derive(j)
            acc = acc + c.truncate(min(c.order, out_order)) * d.truncate(out_order)
        return acc.truncate(out_order)

    def scaled(self, factor: TruncatedSeries) -> "HoloPDO":
        """The operator factor * P."""
        return HoloPDO(self.nvars, {a: c * factor for a, c in self.terms.items()})

    def permute(self, perm: Sequence[int]) -> "HoloPDO":
        terms = {}
        for alpha, c in self.terms.items():
            na = [0] * self.nvars
            for i, k in enumerate(alpha):
                na[perm[i]] = k
            terms[tuple(na)] = c.permute(perm)
        return HoloPDO(self.nvars, terms)

    def compose(self, other: "HoloPDO") -> "HoloPDO":
        """Operator product self o other (Leibniz rule on the coefficients of other)."""
        n = self.nvars
        terms: dict[tuple, TruncatedSeries] = {}
        for alpha, a in self.terms.items():
            for beta, b in other.terms.items():
                for gamma in np.ndindex(*[k + 1 for k in alpha]):
                    db = b
                    for j, k in enumerate(gamma):
                        for _ in range(k):
                            db = db.derive(j)
                    if db.is_zero(0.0):
                        continue
                    mult = 1
                    for ak, gk in zip(alpha, gamma):
                        mult *= math.comb(ak, gk)
                    key = tuple(alpha[j] - gamma[j] + beta[j] for j in range(n))
                    term = a * db * mult
                    terms[key] = terms[key] + term if key in terms else term
        return HoloPDO(n, terms)

    def to_records(self) -> list[dict]:
        return [{"alpha": list(a), "coeff": c.to_records()} for a, c in sorted(self.terms.items())]

    @classmethod
    def from_records(cls, nvars: int, order: int, records) -> "HoloPDO":
        terms = {}
        for rec in records:
            try:
                alpha = tuple(int(a) for a in rec["alpha"])
                coeff = TruncatedSeries.from_records(nvars, order, rec["coeff"])
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"bad operator record {rec!r}: {exc}") from None
            terms[alpha] = terms[alpha] + coeff if alpha in terms else coeff
        return cls(nvars, terms)

    @classmethod
    def from_symbol_terms(cls, nvars: int, order: int, terms: Mapping[tuple, object]) -> "HoloPDO":
        """Convenience: coefficients given as dicts {exponent: value} or scalars."""
        built = {}
        for alpha, c in terms.items():
            if isinstance(c, TruncatedSeries):
                built[alpha] = c
            elif isinstance(c, Mapping):
                built[alpha] = TruncatedSeries.from_dict(nvars, order, c)
            else:
                built[alpha] = TruncatedSeries.constant(nvars, order, c)
        return cls(nvars, built)


def principal_symbol(P: HoloPDO) -> Symbol:
    return P.principal_symbol()


def apply(P: HoloPDO, u: TruncatedSeries) -> TruncatedSeries:
    return P.apply(u)


@dataclass(frozen=True)
class PointTest:
    verdict: str
    value: complex
    gradient: np.ndarray
    conormal: np.ndarray
    scale: float


def conormal(rho: RealAnalyticSeries, p: Sequence[complex], tol: float = ZERO_TOL) -> np.ndarray:
    grad = rho.holomorphic_gradient(p)
    if np.linalg.norm(grad) <= tol:
        raise InvalidDefiningFunction("holomorphic gradient of rho vanishes at p")
    return grad


def _three_way(mag: float, bound: float, small: str, large: str) -> str:
    if mag <= bound:
        return small
    if mag > BAND * bound:
        return large
    return INDETERMINATE


def characteristic_test(P: HoloPDO, rho: RealAnalyticSeries, p, tol: float = ZERO_TOL) -> PointTest:
    zeta = conormal(rho, p, tol)
    sym = P.principal_symbol()
    sv = sym.evaluate(p, zeta)
    scale = max(1.0, float(np.linalg.norm(zeta)) ** P.m)
    verdict = _three_way(abs(sv.value), tol * scale, CHARACTERISTIC, NON_CHARACTERISTIC)
    return PointTest(verdict, sv.value, sv.zeta_gradient, zeta, scale)


def simply_characteristic_test(P: HoloPDO, rho: RealAnalyticSeries, p, tol: float = ZERO_TOL) -> PointTest:
    first = characteristic_test(P, rho, p, tol)
    if first.verdict != CHARACTERISTIC:
        raise NotCharacteristic(f"boundary is {first.verdict} at p; simple-characteristic test undefined")
    scale = max(1.0, float(np.linalg.norm(first.conormal)) ** (P.m - 1))
    mag = float(np.linalg.norm(first.gradient))
    verdict = _three_way(mag, tol * scale, NOT_SIMPLE, SIMPLE)
    return PointTest(verdict, first.value, first.gradient, first.conormal, scale)
