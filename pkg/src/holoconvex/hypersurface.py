"""Everywhere-characteristic hypersurfaces S = {z_{n+1} = f(z')} and their certificates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cksolve import FirstOrderPDE, ck_solve, ck_residual, find_root, implicit_solve
from .eigen import jacobi_eigh
from .errors import DivisibilityError, NotSimplyCharacteristic, ValidationError
from .normalize import NormalizedProblem
from .operators import HoloPDO
from .series import RealAnalyticSeries, TruncatedSeries, ZERO_TOL, compose

STRONG = "strongly-P-convex"
INCONCLUSIVE = "inconclusive"
FAILED = "failed"

SAMPLE_RADII = (1e-2, 1e-3)
DEFAULT_SAMPLES = 10_000
#: H is called marginal below this fraction of its largest eigenvalue
H_MARGIN = 0.05


@dataclass(frozen=True)
class CharSurface:
    f: TruncatedSeries
    echar_residual: float
    residual_order: int
    g: TruncatedSeries
    ck_residual: float

    def to_json(self) -> dict:
        return {
            "f": self.f.to_records(),
            "order": self.f.order,
            "echar_residual": self.echar_residual,
            "residual_order": self.residual_order,
            "ck_residual": self.ck_residual,
            "initial_data": self.g.to_records(),
        }


@dataclass(frozen=True)
class InitialData:
    phase_rotation: np.ndarray
    a_rotated: np.ndarray
    g: TruncatedSeries  # in the normalized coordinates
    q_rotated: TruncatedSeries  # the same polynomial in the phase-rotated coordinates


@dataclass(frozen=True)
class ContactCertificate:
    H_matrix: np.ndarray
    H_spectrum: np.ndarray
    gamma: float
    phase_rotation: np.ndarray
    sample_min: float
    verdict: str
    radii: tuple = SAMPLE_RADII
    samples: int = DEFAULT_SAMPLES
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "H_matrix": [[float(x) for x in row] for row in self.H_matrix],
            "H_spectrum": [float(x) for x in self.H_spectrum],
            "gamma": float(self.gamma),
            "phase_rotation": [[complex(u).real, complex(u).imag] for u in self.phase_rotation],
            "sample_min": float(self.sample_min),
            "radii": list(self.radii),
            "samples": self.samples,
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class TsunoNormalization:
    c: TruncatedSeries
    psi: TruncatedSeries
    A: TruncatedSeries
    residual: float
    residual_order: int
    solve_index: int
    root: complex
    divisibility_remainder: float
    data_defect: float

    def to_json(self) -> dict:
        return {
            "c": self.c.to_records(),
            "psi": self.psi.to_records(),
            "A": self.A.to_records(),
            "residual": self.residual,
            "residual_order": self.residual_order,
            "solve_index": self.solve_index,
            "root": [self.root.real, self.root.imag],
            "divisibility_remainder": self.divisibility_remainder,
            "data_defect": self.data_defect,
        }


# -- everywhere-characteristic equation ---------------------------------------

def char_reduction(np_: NormalizedProblem, tol: float = ZERO_TOL) -> TruncatedSeries:
    """F(z', z_{n+1}, chi_1..chi_{n-1}) with P_m(z, (chi', F, -1)) = 0.

    The variables of F are laid out as the right-hand side of a first-order
    Cauchy problem in z_n: (z_1..z_n, f, f_{z_1}..f_{z_{n-1}}).
    """
    dim = np_.dim
    n = dim - 1
    sym = np_.P_n.principal_symbol()
    order = min(c.order for c in sym.terms.values())
    joint = dim + n
    zeta = [TruncatedSeries.variable(joint, order, dim + j) for j in range(n)] + [-1.0]
    B = sym.substitute(zeta, coeff_map=lambda c: c.truncate(order).embed(joint))
    return implicit_solve(B, joint - 1, tol=tol)


def echar_series(P: HoloPDO, f: TruncatedSeries) -> TruncatedSeries:
    """P_m((z', f(z')), (f_{z'}(z'), -1)) as a series in z'."""
    n = f.nvars
    sym = P.principal_symbol()
    order = f.order - 1
    inner = [TruncatedSeries.variable(n, order, j) for j in range(n)] + [f.truncate(order)]
    grads = [f.derive(j) for j in range(n)]
    return sym.substitute(grads + [-1.0], coeff_map=lambda c: compose(c, inner))


def choose_initial_data(a_tangential, order: int = 8) -> InitialData:
    """Unimodular rescaling making every a_j >= 0, and g = -a_n/2 sum_{j<n} z_j^2.

    The rescaling z = u * z~ acts on sum a_j z_j z_n + a_n z_n^2 / 2 by
    a_j -> a_j u_j u_n and a_n -> a_n u_n^2.
    """
    a = np.asarray(a_tangential, dtype=complex)
    n = len(a)
    u = np.ones(n, dtype=complex)
    if n and abs(a[-1]) > 0:
        u[-1] = np.exp(-0.5j * np.angle(a[-1]))
    for j in range(n - 1):
        if abs(a[j]) > 0:
            u[j] = np.exp(-1j * np.angle(a[j] * u[-1]))
    rotated = np.array([a[j] * u[j] * u[-1] for j in range(n - 1)] + ([a[-1] * u[-1] ** 2] if n else []))
    a_rot = rotated.real
    an = a_rot[-1] if n else 0.0
    q_terms, g_terms = {}, {}
    for j in range(n - 1):
        e = tuple(2 if i == j else 0 for i in range(n - 1))
        q_terms[e] = -0.5 * an
        g_terms[e] = -0.5 * an * np.conj(u[j]) ** 2
    nv = max(n - 1, 0)
    return InitialData(u, a_rot, TruncatedSeries.from_dict(nv, order, g_terms),
                       TruncatedSeries.from_dict(nv, order, q_terms))


def construct_surface(np_: NormalizedProblem, g: TruncatedSeries, order: int, tol: float = ZERO_TOL) -> CharSurface:
    n = np_.dim - 1
    if g.nvars != n - 1:
        raise ValidationError(f"initial data must have {n - 1} variables")
    if abs(g.constant_term) > tol or (g.nvars and np.max(np.abs(g.gradient0())) > tol):
        raise ValidationError("initial data must vanish to second order at 0")
    F = char_reduction(np_, tol)
    pde = FirstOrderPDE(n, F, g)
    f = ck_solve(pde, order)
    resid = echar_series(np_.P_n, f)
    return CharSurface(f, resid.max_abs(), resid.order, g, ck_residual(pde, f))


# -- contact form and certificate ----------------------------------------------

def quadratic_matrix(h: TruncatedSeries) -> np.ndarray:
    """Symmetric C with (degree-2 part of h)(z) = z^T C z."""
    n = h.nvars
    c = np.zeros((n, n), dtype=complex)
    for exp, v in h.homogeneous(2).items():
        idx = [i for i, e in enumerate(exp) for _ in range(e)]
        if idx[0] == idx[1]:
            c[idx[0], idx[0]] += v
        else:
            c[idx[0], idx[1]] += v / 2
            c[idx[1], idx[0]] += v / 2
    return c


def real_form(c: np.ndarray) -> np.ndarray:
    """Matrix of sum |z_j|^2 - 2 Re(z^T C z) in the real coordinates (x_1..x_n, y_1..y_n)."""
    n = c.shape[0]
    cr, ci = c.real, c.imag
    block = np.block([[cr, -ci], [-ci, -cr]])
    return np.eye(2 * n) - 2.0 * block


def contact_polynomial(a, order: int = 2) -> TruncatedSeries:
    """sum_{j<n} a_j z_j z_n + a_n z_n^2 / 2 + q(z_1..z_{n-1}) with q = -a_n/2 sum_{j<n} z_j^2."""
    a = np.asarray(a, dtype=float)
    n = len(a)
    terms = {}
    for j in range(n - 1):
        terms[tuple(int(i == j) + int(i == n - 1) for i in range(n))] = a[j]
        terms[tuple(2 * int(i == j) for i in range(n))] = -0.5 * a[-1]
    terms[tuple(2 * int(i == n - 1) for i in range(n))] = 0.5 * a[-1]
    return TruncatedSeries.from_dict(n, order, terms)


def contact_form_matrix(a) -> np.ndarray:
    return real_form(quadratic_matrix(contact_polynomial(a)))


def contact_form_spectrum(a) -> np.ndarray:
    """{1 +- gamma} twice and {1 +- a_n} (n-2 times each); {1 +- gamma} when n = 1."""
    a = np.asarray(a, dtype=float)
    n = len(a)
    gamma = float(np.sqrt(np.sum(a ** 2)))
    if n == 1:
        vals = [1 - gamma, 1 + gamma]
    else:
        vals = [1 - gamma] * 2 + [1 + gamma] * 2 + [1 - a[-1]] * (n - 2) + [1 + a[-1]] * (n - 2)
    return np.sort(np.array(vals))


def composite_on_surface(rho_n: RealAnalyticSeries, f: TruncatedSeries) -> RealAnalyticSeries:
    """rho_n((z', f(z')), conj) as a real-analytic series in z'."""
    n = f.nvars
    order = min(rho_n.order, f.order)
    zs = [TruncatedSeries.variable(2 * n, order, j) for j in range(n)]
    zbs = [TruncatedSeries.variable(2 * n, order, n + j) for j in range(n)]
    fz = f.truncate(order).embed(2 * n)
    fzb = f.truncate(order).conj().embed(2 * n, list(range(n, 2 * n)))
    poly = compose(rho_n.poly.truncate(order), zs + [fz] + zbs + [fzb])
    return RealAnalyticSeries(poly, check=False).symmetrized()


def sphere_samples(n: int, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((count, 2 * n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return radius * (x[:, :n] + 1j * x[:, n:])


def contact_certificate(rho_n: RealAnalyticSeries, S: CharSurface, a_grad0, order: int | None = None,
                        samples: int = DEFAULT_SAMPLES, seed: int = 0,
                        radii=SAMPLE_RADII) -> ContactCertificate:
    a = np.asarray(a_grad0, dtype=complex)
    n = S.f.nvars
    init = choose_initial_data(a[:n])
    u = init.phase_rotation
    c = quadratic_matrix(S.f)
    c_rot = c * np.outer(u, u)
    H = real_form(c_rot)
    spectrum, _ = jacobi_eigh(H)
    spectrum = np.sort(spectrum.real)
    gamma = float(np.sqrt(np.sum(init.a_rotated ** 2)))

    f = S.f if order is None else S.f.truncate(min(order, S.f.order))
    comp = composite_on_surface(rho_n, f)
    rng = np.random.default_rng(seed)
    sample_min = np.inf
    for r in radii:
        vals = comp.eval_many(sphere_samples(n, r, samples, rng))
        # compare at the natural r^2 scale of the quadratic part
        sample_min = min(sample_min, float(np.min(vals)) / r ** 2)

    notes = []
    lo, hi = float(spectrum[0]), float(spectrum[-1])
    if lo <= 0 or sample_min <= 0:
        verdict = FAILED
        if lo <= 0:
            notes.append("H is not positive definite")
        if sample_min <= 0:
            notes.append("rho_n o S is not positive on the sample spheres")
    elif lo < H_MARGIN * hi:
        verdict = INCONCLUSIVE
        notes.append(f"smallest H eigenvalue {lo:.3g} below {H_MARGIN} of the largest")
    else:
        verdict = STRONG
    return ContactCertificate(H, spectrum, gamma, u, sample_min, verdict, tuple(radii), samples, notes)


# -- renormalization of the defining function ---------------------------------

def divide_by(h: TruncatedSeries, phi: TruncatedSeries, tol: float = ZERO_TOL) -> tuple[TruncatedSeries, float]:
    """Quotient h / phi and the size of the remainder, in phi-adapted coordinates.

    The coordinate z_k with the largest |d phi / d z_k (0)| is replaced by
    phi itself; h is then divided by that coordinate.
    """
    dim = phi.nvars
    if abs(phi.constant_term) > tol:
        raise DivisibilityError("defining function does not vanish at 0")
    grad = phi.gradient0()
    k = int(np.argmax(np.abs(grad)))
    if abs(grad[k]) <= tol:
        raise DivisibilityError("defining function is singular at 0")
    order = min(h.order, phi.order)
    # solve phi(z) = y for z_k: variables (z_0..z_{dim-1}, y)
    B = phi.truncate(order).embed(dim + 1) - TruncatedSeries.variable(dim + 1, order, dim)
    zk = implicit_solve(B, k, tol=tol)
    rest = [v for v in range(dim + 1) if v != k]
    zk = zk.permute([v if v != dim else k for v in rest])
    inner = [TruncatedSeries.variable(dim, order, j) if j != k else zk for j in range(dim)]
    ht = compose(h.truncate(order), inner)
    pieces = ht.split_var(k)
    remainder = pieces[0].max_abs()
    # drop one power of y_k
    sp = ht.space
    sel = np.flatnonzero(sp.exps[:, k] > 0)
    exps = sp.exps[sel].copy()
    exps[:, k] -= 1
    q_sp_order = max(order - 1, 0)
    quotient = TruncatedSeries.from_dict(dim, q_sp_order, {tuple(e): v for e, v in zip(exps, ht.coeffs[sel]) if v != 0})
    back = [TruncatedSeries.variable(dim, q_sp_order, j) if j != k else phi.truncate(q_sp_order) for j in range(dim)]
    return compose(quotient, back), remainder


def _swap(dim: int, s: int) -> list[int]:
    perm = list(range(dim))
    perm[s], perm[-1] = perm[-1], perm[s]
    return perm


def tsuno_renormalize(P: HoloPDO, phi: TruncatedSeries, order: int | None = None, tol: float = ZERO_TOL,
                      root_choice: int | None = None) -> TsunoNormalization:
    """Unit c with P_m(z, d(c phi)) = 0 identically and c = 1 on {z_s = 0}."""
    dim = P.nvars
    m = P.m
    order = phi.order if order is None else min(order, phi.order)
    sym0 = P.principal_symbol()
    grad0 = phi.gradient0()
    dzeta = sym0.zeta_gradient(np.zeros(dim), grad0)
    s = int(np.argmax(np.abs(dzeta)))
    if abs(dzeta[s]) <= tol:
        raise NotSimplyCharacteristic("zeta-gradient of the symbol vanishes on S at 0")
    perm = _swap(dim, s)
    Pp = P.permute(perm)
    phip = phi.truncate(order).permute(perm)
    sym = Pp.principal_symbol()
    dphi = [phip.derive(j) for j in range(dim)]
    h = sym.substitute(dphi, coeff_map=lambda c: c.truncate(order - 1))
    A, remainder = divide_by(h, phip.truncate(order - 1) if order - 1 >= 1 else phip, tol)
    if remainder > tol:
        raise DivisibilityError(f"P_m(z, d phi) is not divisible by phi (remainder {remainder:.3e})")

    taylor = sym.taylor(dphi)
    r_order = min(A.order, min(t.order for t in taylor.values()))
    phi0 = phip.constant_term
    # anchor polynomial in zeta_last at z = 0, w = 1, zeta' = 0
    coeffs = np.zeros(m + 1, dtype=complex)
    coeffs[0] = A.constant_term
    for beta, t in taylor.items():
        if sum(beta) >= 1 and all(b == 0 for b in beta[:-1]):
            k = beta[-1]
            coeffs[k] += t.constant_term * (phi0 ** (k - 1) if k > 1 else 1.0)
    root = find_root(coeffs, tol, root_choice)

    joint = 2 * dim + 1
    zj = lambda c: c.truncate(r_order).embed(joint)  # noqa: E731
    w = TruncatedSeries.variable(joint, r_order, dim, shift=1.0)
    zeta = [TruncatedSeries.variable(joint, r_order, dim + 1 + j) for j in range(dim)]
    zeta[-1] = zeta[-1] + root
    phi_j = zj(phip)
    B = zj(A) * w ** m
    for beta, t in taylor.items():
        b = sum(beta)
        if b == 0:
            continue
        term = zj(t) * phi_j ** (b - 1) * w ** (m - b)
        for j, e in enumerate(beta):
            if e:
                term = term * zeta[j] ** e
        B = B + term
    D = implicit_solve(B, joint - 1, tol=tol)
    pde = FirstOrderPDE(dim, D + root, TruncatedSeries.constant(dim - 1, r_order + 1, 1.0))
    cp = ck_solve(pde, min(order, r_order + 1))
    data_defect = (cp.project(list(range(dim - 1))) - 1.0).max_abs()
    c = cp.permute(perm)
    psi = c * phi.truncate(c.order)
    resid = P.principal_symbol().substitute([psi.derive(j) for j in range(dim)],
                                            coeff_map=lambda cc: cc.truncate(psi.order - 1))
    return TsunoNormalization(c, psi, A.permute(perm), resid.max_abs(), resid.order, s, complex(root),
                              remainder, data_defect)
