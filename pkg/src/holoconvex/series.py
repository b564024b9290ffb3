"""Truncated multivariate power series over C.

Coefficients live in a dense complex array indexed by the monomials of total
degree <= N, listed in graded-lexicographic order.  Because the order is
graded, truncating to a lower order is a prefix slice.

``RealAnalyticSeries`` stores a function of (z, zbar) as a holomorphic series
in 2n independent variables (the polarization), with the reality symmetry
coeff(a, b) == conj(coeff(b, a)).
"""

from __future__ import annotations

import functools
import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CompositionError, NotAUnitError, ValidationError

#: coefficients below this magnitude are dropped after every operation
DROP_TOL = 1e-14
#: default zero test for values computed from series
ZERO_TOL = 1e-9
DEFAULT_ORDER = 8

_TABLE_LIMIT = 2_000_000


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class SeriesSpace:
    """Monomial bookkeeping shared by all series with the same (nvars, order)."""

    def __init__(self, nvars: int, order: int):
        if nvars < 0 or order < 0:
            raise ValueError("nvars and order must be non-negative")
        self.nvars = nvars
        self.order = order
        exps = [e for d in range(order + 1) for e in _compositions(d, nvars)]
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
        self.degs = self.exps.sum(axis=1) if nvars else np.zeros(1, dtype=np.int64)
        self.size = len(exps)
        # block_end[d] = number of monomials of degree <= d
        self.block_end = np.searchsorted(self.degs, np.arange(order + 1), side="right")
        self._base = order + 1
        self._weights = self._base ** np.arange(nvars, dtype=np.int64)
        keys = self.exps @ self._weights if nvars else np.zeros(1, dtype=np.int64)
        self._perm = np.argsort(keys, kind="stable")
        self._sorted_keys = keys[self._perm]
        self._keys = keys
        self._table = None
        self._deriv: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._split: dict[int, list[tuple[np.ndarray, np.ndarray]]] = {}

    def count(self, order: int) -> int:
        """Number of monomials of degree <= order."""
        return int(self.block_end[order]) if order >= 0 else 0

    def index(self, exps: np.ndarray) -> np.ndarray:
        """Positions of exponent rows (all assumed to have degree <= order)."""
        exps = np.asarray(exps, dtype=np.int64)
        keys = exps @ self._weights if self.nvars else np.zeros(len(exps), dtype=np.int64)
        pos = np.searchsorted(self._sorted_keys, keys)
        return self._perm[pos]

    def index_of(self, exp: Sequence[int]) -> int:
        return int(self.index(np.array([exp], dtype=np.int64).reshape(1, self.nvars))[0])

    def product_table(self):
        if self._table is None:
            ii, jj, kk = [], [], []
            for da in range(self.order + 1):
                ia = np.arange(self.count(da - 1), self.count(da))
                ib = np.arange(self.count(self.order - da))
                i, j, k = self._pairs(ia, ib)
                ii.append(i)
                jj.append(j)
                kk.append(k)
            self._table = (np.concatenate(ii), np.concatenate(jj), np.concatenate(kk))
        return self._table

    def _pairs(self, ia: np.ndarray, ib: np.ndarray):
        i = np.repeat(ia, len(ib))
        j = np.tile(ib, len(ia))
        keys = self._keys[i] + self._keys[j]
        k = self._perm[np.searchsorted(self._sorted_keys, keys)]
        return i, j, k

    def pair_count(self) -> int:
        return math.comb(2 * self.nvars + self.order, self.order)

    def derivative_map(self, var: int):
        """(source, target) index arrays so that d/dz_var maps src -> tgt (order N-1)."""
        if var not in self._deriv:
            mask = self.exps[:, var] > 0
            src = np.flatnonzero(mask)
            shifted = self.exps[src].copy()
            shifted[:, var] -= 1
            self._deriv[var] = (src, self.index(shifted))
        return self._deriv[var]

    def split_map(self, var: int):
        """For each power j of ``var``: (source, target) with var's exponent removed."""
        if var not in self._split:
            pieces = []
            for j in range(self.order + 1):
                src = np.flatnonzero(self.exps[:, var] == j)
                reduced = self.exps[src].copy()
                reduced[:, var] = 0
                pieces.append((src, self.index(reduced)))
            self._split[var] = pieces
        return self._split[var]


@functools.lru_cache(maxsize=None)
def space(nvars: int, order: int) -> SeriesSpace:
    return SeriesSpace(nvars, order)


def _prune(c: np.ndarray) -> np.ndarray:
    c[np.abs(c) < DROP_TOL] = 0
    return c


def _mul_arrays(sp: SeriesSpace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ia = np.flatnonzero(a)
    ib = np.flatnonzero(b)
    out = np.zeros(sp.size, dtype=complex)
    if ia.size == 0 or ib.size == 0:
        return out
    dense_work = sp.pair_count()
    if ia.size * ib.size * 4 >= dense_work and dense_work <= _TABLE_LIMIT:
        i, j, k = sp.product_table()
        vals = a[i] * b[j]
    else:
        degs_b = sp.degs[ib]
        parts_i, parts_j, parts_k = [], [], []
        da_all = sp.degs[ia]
        for da in np.unique(da_all):
            cut = np.searchsorted(degs_b, sp.order - da, side="right")
            if cut == 0:
                continue
            i, j, k = sp._pairs(ia[da_all == da], ib[:cut])
            parts_i.append(i)
            parts_j.append(j)
            parts_k.append(k)
        if not parts_i:
            return out
        i = np.concatenate(parts_i)
        j = np.concatenate(parts_j)
        k = np.concatenate(parts_k)
        vals = a[i] * b[j]
    out.real = np.bincount(k, weights=vals.real, minlength=sp.size)
    out.imag = np.bincount(k, weights=vals.imag, minlength=sp.size)
    return _prune(out)


class TruncatedSeries:
    """Holomorphic power series in ``nvars`` variables, known through total degree ``order``.

    Instances are immutable; all arithmetic returns new series truncated at the
    smaller of the operand orders.
    """

    __slots__ = ("space", "coeffs")
    __array_priority__ = 100

    def __init__(self, nvars: int, order: int, coeffs=None):
        sp = space(nvars, order)
        if coeffs is None:
            c = np.zeros(sp.size, dtype=complex)
        else:
            c = np.array(coeffs, dtype=complex)
            if c.shape != (sp.size,):
                raise ValueError(f"expected {sp.size} coefficients, got {c.shape}")
            c = _prune(c)
        c.flags.writeable = False
        self.space = sp
        self.coeffs = c

    # -- construction -------------------------------------------------------
    @classmethod
    def _wrap(cls, sp: SeriesSpace, c: np.ndarray) -> "TruncatedSeries":
        obj = cls.__new__(cls)
        c.flags.writeable = False
        obj.space = sp
        obj.coeffs = c
        return obj

    @classmethod
    def from_dict(cls, nvars: int, order: int, terms: Mapping[Sequence[int], complex]) -> "TruncatedSeries":
        sp = space(nvars, order)
        c = np.zeros(sp.size, dtype=complex)
        for exp, val in terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars or min(exp, default=0) < 0:
                raise ValidationError(f"bad exponent {exp} for {nvars} variables")
            if sum(exp) <= order:
                c[sp.index_of(exp)] += complex(val)
        return cls._wrap(sp, _prune(c))

    @classmethod
    def constant(cls, nvars: int, order: int, value: complex) -> "TruncatedSeries":
        sp = space(nvars, order)
        c = np.zeros(sp.size, dtype=complex)
        c[0] = value
        return cls._wrap(sp, _prune(c))

    @classmethod
    def zero(cls, nvars: int, order: int) -> "TruncatedSeries":
        return cls(nvars, order)

    @classmethod
    def variable(cls, nvars: int, order: int, var: int, shift: complex = 0.0) -> "TruncatedSeries":
        """The coordinate function z_var (plus an optional constant)."""
        exp = [0] * nvars
        exp[var] = 1
        terms = {tuple(exp): 1.0}
        if shift:
            terms[(0,) * nvars] = shift
        return cls.from_dict(nvars, order, terms)

    @classmethod
    def variables(cls, nvars: int, order: int) -> list["TruncatedSeries"]:
        return [cls.variable(nvars, order, i) for i in range(nvars)]

    # -- basic properties ---------------------------------------------------
    @property
    def nvars(self) -> int:
        return self.space.nvars

    @property
    def order(self) -> int:
        return self.space.order

    def coeff(self, exp: Sequence[int]) -> complex:
        if sum(exp) > self.order:
            return 0j
        return complex(self.coeffs[self.space.index_of(tuple(exp))])

    def items(self):
        """Nonzero (exponent tuple, coefficient) pairs in graded-lex order."""
        for i in np.flatnonzero(self.coeffs):
            yield tuple(int(e) for e in self.space.exps[i]), complex(self.coeffs[i])

    def to_dict(self) -> dict[tuple[int, ...], complex]:
        return dict(self.items())

    @property
    def constant_term(self) -> complex:
        return complex(self.coeffs[0])

    def gradient0(self) -> np.ndarray:
        """First-order coefficients, i.e. the gradient at the origin."""
        return np.array([self.coeff(tuple(int(i == j) for i in range(self.nvars)))
                         for j in range(self.nvars)]) if self.order >= 1 else np.zeros(self.nvars, complex)

    def homogeneous(self, degree: int) -> "TruncatedSeries":
        sp = self.space
        c = np.zeros(sp.size, dtype=complex)
        if 0 <= degree <= self.order:
            lo, hi = sp.count(degree - 1), sp.count(degree)
            c[lo:hi] = self.coeffs[lo:hi]
        return TruncatedSeries._wrap(sp, c)

    def max_abs(self, upto: int | None = None) -> float:
        """Largest coefficient magnitude over degrees <= upto (default: all)."""
        n = self.space.size if upto is None else self.space.count(min(upto, self.order))
        return float(np.max(np.abs(self.coeffs[:n]), initial=0.0))

    def is_zero(self, tol: float = ZERO_TOL) -> bool:
        return self.max_abs() <= tol

    def allclose(self, other: "TruncatedSeries", tol: float = ZERO_TOL) -> bool:
        if self.nvars != other.nvars:
            return False
        return (self - other).max_abs() <= tol

    def __eq__(self, other):
        if isinstance(other, TruncatedSeries):
            return self.allclose(other)
        if isinstance(other, (int, float, complex)):
            return self.allclose(TruncatedSeries.constant(self.nvars, self.order, other))
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        terms = list(self.items())[:8]
        body = " + ".join(f"({v:.6g})*{e}" for e, v in terms) or "0"
        more = " + ..." if np.count_nonzero(self.coeffs) > 8 else ""
        return f"TruncatedSeries(nvars={self.nvars}, order={self.order}: {body}{more})"

    # -- order management ---------------------------------------------------
    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise ValueError("cannot raise the order of a truncated series; use pad() for polynomials")
        if order == self.order:
            return self
        sp = space(self.nvars, order)
        return TruncatedSeries._wrap(sp, self.coeffs[: sp.size].copy())

    def pad(self, order: int) -> "TruncatedSeries":
        """Reinterpret as an exact polynomial at a higher (or lower) order."""
        if order <= self.order:
            return self.truncate(order)
        sp = space(self.nvars, order)
        c = np.zeros(sp.size, dtype=complex)
        c[: self.space.size] = self.coeffs
        return TruncatedSeries._wrap(sp, c)

    def _coerce(self, other) -> tuple["TruncatedSeries", "TruncatedSeries"]:
        if isinstance(other, TruncatedSeries):
            if other.nvars != self.nvars:
                raise ValidationError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            n = min(self.order, other.order)
            return self.truncate(n), other.truncate(n)
        if isinstance(other, (int, float, complex, np.number)):
            return self, TruncatedSeries.constant(self.nvars, self.order, complex(other))
        raise TypeError(f"cannot combine TruncatedSeries with {type(other).__name__}")

    # -- ring operations ----------------------------------------------------
    def __add__(self, other):
        try:
            a, b = self._coerce(other)
        except TypeError:
            return NotImplemented
        return TruncatedSeries._wrap(a.space, _prune(a.coeffs + b.coeffs))

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries._wrap(self.space, -self.coeffs)

    def __sub__(self, other):
        try:
            a, b = self._coerce(other)
        except TypeError:
            return NotImplemented
        return TruncatedSeries._wrap(a.space, _prune(a.coeffs - b.coeffs))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return TruncatedSeries._wrap(self.space, _prune(self.coeffs * complex(other)))
        try:
            a, b = self._coerce(other)
        except TypeError:
            return NotImplemented
        return TruncatedSeries._wrap(a.space, _mul_arrays(a.space, a.coeffs, b.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * other.reciprocal()
        return self * (1.0 / complex(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = TruncatedSeries.constant(self.nvars, self.order, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def conj(self) -> "TruncatedSeries":
        """Series with conjugated coefficients (the function z -> conj(s(conj z)))."""
        return TruncatedSeries._wrap(self.space, np.conj(self.coeffs))

    # -- calculus -----------------------------------------------------------
    def derive(self, var: int) -> "TruncatedSeries":
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable {var} out of range for {self.nvars} variables")
        if self.order == 0:
            return TruncatedSeries.zero(self.nvars, 0)
        sp = self.space
        src, tgt = sp.derivative_map(var)
        out_sp = space(self.nvars, self.order - 1)
        c = np.zeros(out_sp.size, dtype=complex)
        c[tgt] = self.coeffs[src] * sp.exps[src, var]
        return TruncatedSeries._wrap(out_sp, _prune(c))

    def reciprocal(self) -> "TruncatedSeries":
        c0 = self.constant_term
        if abs(c0) <= ZERO_TOL:
            raise NotAUnitError("series has zero constant term and is not invertible")
        t = self * (1.0 / c0) - 1.0
        # 1/(1+t) by Horner on the geometric series; t has no constant term
        r = TruncatedSeries.constant(self.nvars, self.order, 1.0)
        for _ in range(self.order):
            r = 1.0 - t * r
        return r * (1.0 / c0)

    # -- variable manipulation ----------------------------------------------
    def embed(self, nvars: int, var_map: Sequence[int] | None = None, order: int | None = None) -> "TruncatedSeries":
        """Re-home into ``nvars`` variables; variable i becomes var_map[i] (default: i)."""
        var_map = list(range(self.nvars)) if var_map is None else list(var_map)
        order = self.order if order is None else order
        if order > self.order:
            raise ValueError("embed cannot raise the order")
        src_sp = self.space
        n_src = src_sp.count(order)
        out_sp = space(nvars, order)
        exps = np.zeros((n_src, nvars), dtype=np.int64)
        for i, v in enumerate(var_map):
            exps[:, v] += src_sp.exps[:n_src, i]
        c = np.zeros(out_sp.size, dtype=complex)
        np.add.at(c, out_sp.index(exps), self.coeffs[:n_src])
        return TruncatedSeries._wrap(out_sp, _prune(c))

    def permute(self, perm: Sequence[int]) -> "TruncatedSeries":
        """New series whose variable perm[i] is the old variable i."""
        return self.embed(self.nvars, perm)

    def project(self, keep: Sequence[int]) -> "TruncatedSeries":
        """Set all variables not in ``keep`` to zero and drop them."""
        keep = list(keep)
        sp = self.space
        others = [v for v in range(self.nvars) if v not in keep]
        mask = np.all(sp.exps[:, others] == 0, axis=1) if others else np.ones(sp.size, bool)
        src = np.flatnonzero(mask)
        out_sp = space(len(keep), self.order)
        c = np.zeros(out_sp.size, dtype=complex)
        c[out_sp.index(sp.exps[src][:, keep])] = self.coeffs[src]
        return TruncatedSeries._wrap(out_sp, c)

    def split_var(self, var: int) -> list["TruncatedSeries"]:
        """Coefficients S_j (free of var) with self = sum_j S_j * z_var**j."""
        sp = self.space
        pieces = []
        for src, tgt in sp.split_map(var):
            c = np.zeros(sp.size, dtype=complex)
            c[tgt] = self.coeffs[src]
            pieces.append(TruncatedSeries._wrap(sp, c))
        while len(pieces) > 1 and not pieces[-1].coeffs.any():
            pieces.pop()
        return pieces

    def substitute(self, var: int, inner: "TruncatedSeries") -> "TruncatedSeries":
        """Replace z_var by ``inner`` (same variable set), by Horner in that variable.

        The outer series is treated as an exact polynomial, so ``inner`` may carry a
        constant term.
        """
        a, inner = self._coerce(inner)
        pieces = a.split_var(var)
        acc = pieces[-1]
        for piece in reversed(pieces[:-1]):
            acc = acc * inner + piece
        return acc

    def eval(self, point: Sequence[complex]) -> complex:
        point = np.asarray(point, dtype=complex)
        if point.shape != (self.nvars,):
            raise ValueError(f"point must have {self.nvars} entries")
        return complex(self.eval_many(point[None, :])[0])

    def eval_many(self, points: np.ndarray, chunk: int = 2048) -> np.ndarray:
        """Evaluate at each row of ``points`` (shape (P, nvars))."""
        points = np.asarray(points, dtype=complex).reshape(-1, self.nvars)
        nz = np.flatnonzero(self.coeffs)
        out = np.zeros(len(points), dtype=complex)
        if nz.size == 0:
            return out
        exps = self.space.exps[nz]
        c = self.coeffs[nz]
        maxdeg = self.order
        for s in range(0, len(points), chunk):
            pts = points[s:s + chunk]
            mono = np.ones((len(pts), nz.size), dtype=complex)
            for v in range(self.nvars):
                col = exps[:, v]
                if not col.any():
                    continue
                powers = pts[:, v, None] ** np.arange(maxdeg + 1)[None, :]
                mono *= powers[:, col]
            out[s:s + chunk] = mono @ c
        return out

    # -- serialization ------------------------------------------------------
    def to_records(self) -> list[dict]:
        return [{"exponents": list(e), "coeff": [v.real, v.imag]} for e, v in self.items()]

    @classmethod
    def from_records(cls, nvars: int, order: int, records: Iterable[Mapping]) -> "TruncatedSeries":
        terms: dict[tuple[int, ...], complex] = {}
        for rec in records:
            try:
                exp = tuple(int(e) for e in rec["exponents"])
                val = _complex_from_json(rec["coeff"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"bad series record {rec!r}: {exc}") from None
            terms[exp] = terms.get(exp, 0) + val
        return cls.from_dict(nvars, order, terms)


def _complex_from_json(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ValueError(f"expected [re, im], got {value!r}")


def complex_to_json(value: complex) -> list[float]:
    value = complex(value)
    return [value.real, value.imag]


# -- functional forms --------------------------------------------------------

def arith(a: TruncatedSeries, b: TruncatedSeries, op: str) -> TruncatedSeries:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def derive(s: TruncatedSeries, var: int) -> TruncatedSeries:
    return s.derive(var)


def reciprocal(s: TruncatedSeries) -> TruncatedSeries:
    return s.reciprocal()


def eval_series(s, point: Sequence[complex]):
    return s.eval(point)


def _mentions(s: TruncatedSeries, var: int) -> bool:
    return bool(s.coeffs[s.space.exps[:, var] > 0].any()) if s.nvars else False


def compose(outer: TruncatedSeries, inner: Sequence[TruncatedSeries], exact: bool = False,
            tol: float = ZERO_TOL) -> TruncatedSeries:
    """Substitute ``inner[i]`` for variable i of ``outer``.

    With ``exact=False`` every inner series must vanish at the origin, so the
    truncation of ``outer`` is respected.  ``exact=True`` declares ``outer`` an
    exact polynomial (e.g. a symbol or a finitely given coefficient), which is
    then re-expanded about the inner constant terms.
    """
    inner = list(inner)
    if len(inner) != outer.nvars:
        raise ValueError(f"need {outer.nvars} inner series, got {len(inner)}")
    if not inner:
        raise ValueError("compose needs at least one inner series")
    nvars = inner[0].nvars
    if any(s.nvars != nvars for s in inner):
        raise ValueError("inner series must share a variable count")
    if not exact:
        bad = [i for i, s in enumerate(inner) if abs(s.constant_term) > tol]
        if bad:
            raise CompositionError(
                f"inner series {bad} have nonzero constant terms; outer is truncated")
    order = min(s.order for s in inner)
    if not exact:
        order = min(order, outer.order)
    inner = [s.truncate(order) for s in inner]

    # cheap path: same variable set and every inner only mentions itself among
    # the substituted variables -> sequential one-variable Horner is exact
    if nvars == outer.nvars:
        ident = [s.allclose(TruncatedSeries.variable(nvars, order, i), 0.0) for i, s in enumerate(inner)]
        moving = [i for i in range(nvars) if not ident[i]]
        if all(not _mentions(inner[i], j) for i in moving for j in moving if j != i):
            acc = outer.truncate(order) if outer.order >= order else outer.pad(order)
            for i in moving:
                acc = acc.substitute(i, inner[i])
            return acc

    # general path: monomial loop with memoised prefix products
    powers: list[list[TruncatedSeries]] = [[TruncatedSeries.constant(nvars, order, 1.0)] for _ in inner]

    def power(i: int, k: int) -> TruncatedSeries:
        p = powers[i]
        while len(p) <= k:
            p.append(p[-1] * inner[i])
        return p[k]

    prefix: dict[tuple[int, ...], TruncatedSeries] = {(): powers[0][0]}

    def prefix_product(exp: tuple[int, ...]) -> TruncatedSeries:
        if exp in prefix:
            return prefix[exp]
        head = prefix_product(exp[:-1])
        k = exp[-1]
        val = head if k == 0 else head * power(len(exp) - 1, k)
        prefix[exp] = val
        return val

    acc = np.zeros(space(nvars, order).size, dtype=complex)
    for exp, c in outer.items():
        # trailing zeros do not change the product
        trimmed = exp
        while trimmed and trimmed[-1] == 0:
            trimmed = trimmed[:-1]
        acc += c * prefix_product(trimmed).coeffs
    return TruncatedSeries._wrap(space(nvars, order), _prune(acc))


class RealAnalyticSeries:
    """Real-valued series in (z, zbar) stored through its polarization.

    ``poly`` is a holomorphic series in 2n variables: the first n stand for z,
    the last n for zbar.
    """

    __slots__ = ("poly",)

    def __init__(self, poly: TruncatedSeries, check: bool = True, tol: float = 1e-12):
        if poly.nvars % 2:
            raise ValueError("polarized series needs an even number of variables")
        self.poly = poly
        if check:
            defect = self.reality_defect()
            scale = max(1.0, poly.max_abs())
            if defect > tol * scale:
                raise ValidationError(f"series is not real: reality defect {defect:.3e}")

    @property
    def nvars(self) -> int:
        return self.poly.nvars // 2

    @property
    def order(self) -> int:
        return self.poly.order

    def _swap(self) -> list[int]:
        n = self.nvars
        return list(range(n, 2 * n)) + list(range(n))

    def reality_defect(self) -> float:
        mirrored = self.poly.permute(self._swap()).conj()
        return (mirrored - self.poly).max_abs()

    def symmetrized(self) -> "RealAnalyticSeries":
        mirrored = self.poly.permute(self._swap()).conj()
        return RealAnalyticSeries((self.poly + mirrored) * 0.5, check=False)

    @classmethod
    def from_terms(cls, nvars: int, order: int, terms: Mapping[tuple, complex]) -> "RealAnalyticSeries":
        """``terms`` maps (alpha, beta) to the coefficient of z^alpha zbar^beta."""
        flat = {}
        for (alpha, beta), val in terms.items():
            alpha, beta = tuple(alpha), tuple(beta)
            if len(alpha) != nvars or len(beta) != nvars:
                raise ValidationError(f"bad multi-index pair {(alpha, beta)}")
            flat[alpha + beta] = flat.get(alpha + beta, 0) + val
        return cls(TruncatedSeries.from_dict(2 * nvars, order, flat))

    def coeff(self, alpha: Sequence[int], beta: Sequence[int]) -> complex:
        return self.poly.coeff(tuple(alpha) + tuple(beta))

    def items(self):
        n = self.nvars
        for exp, val in self.poly.items():
            yield (exp[:n], exp[n:]), val

    def bidegree(self, p: int, q: int) -> dict[tuple, complex]:
        return {k: v for k, v in self.items() if sum(k[0]) == p and sum(k[1]) == q}

    def __add__(self, other):
        if isinstance(other, RealAnalyticSeries):
            return RealAnalyticSeries(self.poly + other.poly, check=False)
        return RealAnalyticSeries(self.poly + float(other), check=False)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, RealAnalyticSeries):
            return RealAnalyticSeries(self.poly - other.poly, check=False)
        return RealAnalyticSeries(self.poly - float(other), check=False)

    def __neg__(self):
        return RealAnalyticSeries(-self.poly, check=False)

    def __mul__(self, other):
        if isinstance(other, RealAnalyticSeries):
            return RealAnalyticSeries(self.poly * other.poly, check=False)
        return RealAnalyticSeries(self.poly * float(other), check=False)

    __rmul__ = __mul__

    def truncate(self, order: int) -> "RealAnalyticSeries":
        return RealAnalyticSeries(self.poly.truncate(order), check=False)

    def allclose(self, other: "RealAnalyticSeries", tol: float = ZERO_TOL) -> bool:
        return self.poly.allclose(other.poly, tol)

    def polar_point(self, point: Sequence[complex]) -> np.ndarray:
        point = np.asarray(point, dtype=complex)
        return np.concatenate([point, np.conj(point)])

    def dz(self, j: int) -> TruncatedSeries:
        """d/dz_j as a polarized (complex-valued) series."""
        return self.poly.derive(j)

    def dzbar(self, j: int) -> TruncatedSeries:
        return self.poly.derive(self.nvars + j)

    def holomorphic_gradient(self, point: Sequence[complex]) -> np.ndarray:
        pp = self.polar_point(point)
        return np.array([self.dz(j).eval(pp) for j in range(self.nvars)])

    def eval(self, point: Sequence[complex], tol: float = 1e-9) -> float:
        point = np.asarray(point, dtype=complex)
        if point.shape != (self.nvars,):
            raise ValueError(f"point must have {self.nvars} entries")
        val = self.poly.eval(self.polar_point(point))
        if abs(val.imag) > tol * max(1.0, abs(val.real)):
            raise ValidationError(f"real-analytic series evaluated to non-real {val}")
        return float(val.real)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        return self.poly.eval_many(np.concatenate([points, np.conj(points)], axis=1)).real

    def pullback(self, maps: Sequence[TruncatedSeries], exact: bool = True) -> "RealAnalyticSeries":
        """rho(phi(w), conj(phi(w))) for a holomorphic map phi given by ``maps``."""
        n = self.nvars
        if len(maps) != n:
            raise ValueError(f"need {n} component series")
        m = maps[0].nvars
        inner = [phi.embed(2 * m) for phi in maps]
        inner += [phi.conj().embed(2 * m, list(range(m, 2 * m))) for phi in maps]
        return RealAnalyticSeries(compose(self.poly, inner, exact=exact), check=False).symmetrized()

    def to_records(self) -> list[dict]:
        return [{"z": list(a), "zbar": list(b), "coeff": [v.real, v.imag]} for (a, b), v in self.items()]

    @classmethod
    def from_records(cls, nvars: int, order: int, records: Iterable[Mapping]) -> "RealAnalyticSeries":
        terms = {}
        for rec in records:
            try:
                key = (tuple(int(e) for e in rec["z"]), tuple(int(e) for e in rec["zbar"]))
                val = _complex_from_json(rec["coeff"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"bad real-analytic record {rec!r}: {exc}") from None
            terms[key] = terms.get(key, 0) + val
        return cls.from_terms(nvars, order, terms)


def sphere_rho(n: int, order: int = DEFAULT_ORDER) -> RealAnalyticSeries:
    """-2 Re z_{n+1} + sum_{j<=n} |z_j|^2 on C^{n+1}: the normal form through order 2."""
    dim = n + 1
    terms = {}
    zero = (0,) * dim
    e = lambda j: tuple(int(i == j) for i in range(dim))  # noqa: E731
    terms[(e(n), zero)] = -1.0
    terms[(zero, e(n))] = -1.0
    for j in range(n):
        terms[(e(j), e(j))] = 1.0
    return RealAnalyticSeries.from_terms(dim, order, terms)
