"""Hypothesis strategies shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from holoconvex.series import RealAnalyticSeries, TruncatedSeries

finite = st.floats(-2, 2, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)


@st.composite
def series(draw, nvars=2, order=4, scale=1.0):
    n = TruncatedSeries.zero(nvars, order).coeffs.size
    vals = draw(st.lists(complexes, min_size=n, max_size=n))
    return TruncatedSeries(nvars, order, np.array(vals) * scale)


@st.composite
def units(draw, nvars=2, order=4):
    s = draw(series(nvars, order, 0.5))
    c = draw(st.sampled_from([1.0, -2.0, 0.5j, 1 + 1j]))
    return s - s.constant_term + c


def unit_index(dim, j, k=1):
    return tuple(k if i == j else 0 for i in range(dim))


@st.composite
def pseudoconvex_instances(draw, dim=None, order=6):
    """A defining function through 0 with random gradient, positive Levi form, pure terms and a cubic."""
    dim = dim or draw(st.sampled_from([2, 3]))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    levi = x @ x.conj().T + 0.5 * np.eye(dim)
    sym = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    sym = 0.3 * (sym + sym.T)
    terms = {}
    for j in range(dim):
        terms[(unit_index(dim, j), (0,) * dim)] = g[j]
        terms[((0,) * dim, unit_index(dim, j))] = np.conj(g[j])
        for k in range(dim):
            key = (unit_index(dim, j), unit_index(dim, k))
            terms[key] = terms.get(key, 0) + levi[j, k]
            a = tuple(x + y for x, y in zip(unit_index(dim, j), unit_index(dim, k)))
            terms[(a, (0,) * dim)] = terms.get((a, (0,) * dim), 0) + sym[j, k] / 2
            terms[((0,) * dim, a)] = terms.get(((0,) * dim, a), 0) + np.conj(sym[j, k]) / 2
    # a cubic real term
    c = 0.2 * (rng.standard_normal() + 1j * rng.standard_normal())
    terms[(unit_index(dim, 0, 2), unit_index(dim, dim - 1))] = c
    terms[(unit_index(dim, dim - 1), unit_index(dim, 0, 2))] = np.conj(c)
    return RealAnalyticSeries.from_terms(dim, order, terms), np.zeros(dim)
