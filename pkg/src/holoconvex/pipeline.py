"""Problem files, the check pipeline and the report it emits."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .errors import HoloconvexError, UnsupportedRegime, ValidationError
from .hypersurface import (
    DEFAULT_SAMPLES, INCONCLUSIVE, STRONG, choose_initial_data, construct_surface,
    contact_certificate, tsuno_renormalize,
)
from .normalize import normalize_domain, normalize_operator
from .operators import (
    CHARACTERISTIC, INDETERMINATE, NON_CHARACTERISTIC, NOT_SIMPLE, HoloPDO,
    characteristic_test, simply_characteristic_test,
)
from .posform import MARGINAL, NO, YES, build_Q, pos_check, reduced_criterion
from .series import RealAnalyticSeries, TruncatedSeries, ZERO_TOL, compose

SCHEMA = "holoconvex-report/1"

EXTENDS = "extends"
UNSUPPORTED = "unsupported"
DOES_NOT_EXTEND = "does-not-extend"

# classification -> exit status of `check`
EXIT_STATUS = {
    "non-characteristic": 0,
    "not-simply-characteristic": 3,
    "indeterminate": 3,
    "pos-holds": 0,
    "pos-holds-uncertified": 0,
    "pos-fails": 0,
    "marginal": 0,
    "residual-failure": 4,
}


@dataclass
class ProblemFile:
    dimension: int
    rho: RealAnalyticSeries
    operator: HoloPDO
    point: np.ndarray
    order: int = 8
    tolerance: float = ZERO_TOL
    seed: int = 0
    options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def skip_construction(self) -> bool:
        return bool(self.options.get("skip_construction", False))

    @property
    def root_choice(self) -> int | None:
        return self.options.get("root_choice")


def _field(data: dict, name: str, kind, default=None, required=True):
    if name not in data:
        if required:
            raise ValidationError(f"field '{name}': missing")
        return default
    value = data[name]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"field '{name}': expected an integer, got {value!r}")
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"field '{name}': expected a number, got {value!r}")
        value = float(value)
    elif not isinstance(value, kind):
        raise ValidationError(f"field '{name}': expected {kind.__name__}, got {type(value).__name__}")
    return value


def _complex(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ValidationError(f"{where}: expected [re, im], got {value!r}")


def parse_problem(data: dict, order: int | None = None, tol: float | None = None,
                  seed: int | None = None) -> ProblemFile:
    """Validate a decoded problem file; command-line overrides win over file values."""
    if not isinstance(data, dict):
        raise ValidationError("problem file must be an object")
    dim = _field(data, "dimension", int)
    if dim < 2:
        raise ValidationError(f"field 'dimension': must be at least 2, got {dim}")
    N = order if order is not None else _field(data, "order", int, 8, required=False)
    if N < 2:
        raise ValidationError(f"field 'order': must be at least 2, got {N}")
    eps = tol if tol is not None else _field(data, "tolerance", float, ZERO_TOL, required=False)
    if not eps > 0:
        raise ValidationError(f"field 'tolerance': must be positive, got {eps}")
    sd = seed if seed is not None else _field(data, "seed", int, 0, required=False)
    options = _field(data, "options", dict, {}, required=False)
    unknown = set(options) - {"skip_construction", "root_choice"}
    if unknown:
        raise ValidationError(f"field 'options': unknown keys {sorted(unknown)}")
    rc = options.get("root_choice")
    if rc is not None and (isinstance(rc, bool) or not isinstance(rc, int) or rc < 0):
        raise ValidationError(f"field 'options.root_choice': expected a non-negative integer, got {rc!r}")

    pt = _field(data, "point", list)
    if len(pt) != dim:
        raise ValidationError(f"field 'point': expected {dim} coordinates, got {len(pt)}")
    point = np.array([_complex(v, f"field 'point[{i}]'") for i, v in enumerate(pt)])

    rho_rec = _field(data, "rho", list)
    try:
        rho = RealAnalyticSeries.from_records(dim, N, rho_rec)
    except ValidationError as exc:
        raise ValidationError(f"field 'rho': {exc}") from None
    op_rec = _field(data, "operator", list)
    try:
        P = HoloPDO.from_records(dim, N, op_rec)
    except ValidationError as exc:
        raise ValidationError(f"field 'operator': {exc}") from None
    if P.m < 1:
        raise ValidationError("field 'operator': order m must be at least 1")
    if N <= P.m:
        raise ValidationError(f"field 'order': truncation {N} must exceed the operator order {P.m}")
    return ProblemFile(dim, rho, P, point, N, eps, sd, dict(options), raw=data)


def load_problem(path: str | Path, **overrides) -> ProblemFile:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None
    return parse_problem(data, **overrides)


@dataclass
class Report:
    classification: str
    verdict: str
    problem: dict
    point_tests: dict = field(default_factory=dict)
    posverdict: dict | None = None
    reduced: dict | None = None
    normal_form: dict | None = None
    surface: dict | None = None
    certificate: dict | None = None
    tsuno: dict | None = None
    coordinate_map: dict | None = None
    residuals: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    timing: dict | None = None

    @property
    def exit_status(self) -> int:
        return EXIT_STATUS[self.classification]

    def to_json(self) -> dict:
        out = {"schema": SCHEMA, "version": __version__}
        for k in ("classification", "verdict", "problem", "point_tests", "posverdict", "reduced",
                  "normal_form", "surface", "certificate", "tsuno", "coordinate_map", "residuals",
                  "notes", "timing"):
            out[k] = getattr(self, k)
        return out

    def dumps(self) -> str:
        return json.dumps(_plain(self.to_json()), indent=2, sort_keys=True) + "\n"


def _plain(obj: Any):
    """JSON-safe copy: numpy scalars to Python, complex to [re, im]."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _point_json(t) -> dict:
    return {"verdict": t.verdict, "value": t.value, "gradient": t.gradient, "conormal": t.conormal,
            "scale": t.scale}


def surface_in_original(f: TruncatedSeries, cmap, order: int) -> TruncatedSeries:
    """Defining function z_{n+1} - f(z') of S pulled back to the original coordinates (in z - p)."""
    dim = cmap.dim
    inv = cmap.inverse(order)
    phi = TruncatedSeries.variable(dim, order, dim - 1) - f.truncate(order).embed(dim)
    return compose(phi, inv)


def run_check(problem: ProblemFile, original_coords: bool = False, timing: bool = False,
              samples: int = DEFAULT_SAMPLES) -> Report:
    clock = {}
    t0 = time.perf_counter()
    P, rho, p, eps, N = problem.operator, problem.rho, problem.point, problem.tolerance, problem.order
    summary = {"dimension": problem.dimension, "order": N, "tolerance": eps, "seed": problem.seed,
               "operator_order": P.m, "point": p, "options": problem.options}
    report = Report("indeterminate", UNSUPPORTED, summary)

    first = characteristic_test(P, rho, p, eps)
    report.point_tests["characteristic"] = _point_json(first)
    if first.verdict == NON_CHARACTERISTIC:
        report.classification, report.verdict = "non-characteristic", EXTENDS
        report.notes.append("boundary is non-characteristic at p: every solution extends across p")
        return _finish(report, clock, t0, timing)
    if first.verdict == INDETERMINATE:
        report.notes.append("symbol value at the conormal is inside the indeterminate band")
        return _finish(report, clock, t0, timing)
    assert first.verdict == CHARACTERISTIC
    second = simply_characteristic_test(P, rho, p, eps)
    report.point_tests["simple"] = _point_json(second)
    if second.verdict == NOT_SIMPLE:
        report.classification = "not-simply-characteristic"
        report.notes.append("zeta-gradient of the symbol vanishes at the conormal")
        return _finish(report, clock, t0, timing)
    if second.verdict == INDETERMINATE:
        report.notes.append("zeta-gradient of the symbol is inside the indeterminate band")
        return _finish(report, clock, t0, timing)

    dom = normalize_domain(rho, p, eps)
    try:
        nz = normalize_operator(P, dom, eps)
    except UnsupportedRegime as exc:
        report.classification = "not-simply-characteristic"
        report.notes.append(str(exc))
        return _finish(report, clock, t0, timing)
    clock["normalize"] = time.perf_counter() - t0
    report.coordinate_map = dom.change.to_json(2) | {"rotation": nz.rotation}
    report.normal_form = {"a": nz.a.to_records(), "a_grad0": nz.a_grad0,
                          "b_tilde0": nz.b_tilde0, "levi": dom.levi}

    Q = build_Q(P, rho, p)
    pv = pos_check(Q)
    rv = reduced_criterion(nz)
    report.posverdict = pv.to_json() | {"sum_sq": rv.sum_sq}
    report.reduced = rv.to_json()
    report.residuals["Q_hermitian_defect"] = Q.hermitian_defect()
    report.residuals["rho_reality_defect"] = dom.rho_n.reality_defect()
    if pv.holds != rv.holds and MARGINAL not in (pv.holds, rv.holds):
        report.classification, report.verdict = "residual-failure", INCONCLUSIVE
        report.notes.append(f"direct form says {pv.holds}, normal-form criterion says {rv.holds}")
        return _finish(report, clock, t0, timing)
    if MARGINAL in (pv.holds, rv.holds):
        report.classification, report.verdict = "marginal", INCONCLUSIVE
        report.notes.append("(Pos) margin is within tolerance of zero; no construction attempted")
        return _finish(report, clock, t0, timing)
    if pv.holds == NO:
        report.classification, report.verdict = "pos-fails", INCONCLUSIVE
        report.notes.append("(Pos) fails at p; the criterion gives no conclusion")
        return _finish(report, clock, t0, timing)
    assert pv.holds == YES
    if problem.skip_construction:
        report.classification, report.verdict = "pos-holds-uncertified", DOES_NOT_EXTEND
        report.notes.append("construction skipped on request; verdict rests on (Pos) alone")
        return _finish(report, clock, t0, timing)

    n = nz.dim - 1
    init = choose_initial_data(nz.a_grad0[:n], N)
    S = construct_surface(nz, init.g, N, eps)
    clock["surface"] = time.perf_counter() - t0
    cert = contact_certificate(nz.rho_n, S, nz.a_grad0, samples=samples, seed=problem.seed)
    clock["certificate"] = time.perf_counter() - t0
    phi = TruncatedSeries.variable(nz.dim, N, nz.dim - 1) - S.f.embed(nz.dim)
    ts = tsuno_renormalize(nz.P_n, phi, N, eps, problem.root_choice)
    clock["renormalize"] = time.perf_counter() - t0

    report.surface = S.to_json() | {"a_rotated": init.a_rotated}
    if original_coords:
        report.surface["original"] = {
            "point": p, "defining_function": surface_in_original(S.f, nz.change, N).to_records()}
    report.certificate = cert.to_json()
    report.tsuno = ts.to_json()
    report.residuals.update({
        "echar": S.echar_residual, "echar_order": S.residual_order, "ck": S.ck_residual,
        "tsuno": ts.residual, "tsuno_order": ts.residual_order, "divisibility": ts.divisibility_remainder,
        "cauchy_data": ts.data_defect,
    })
    failed = [k for k in ("echar", "ck", "tsuno", "divisibility") if report.residuals[k] >= eps]
    if ts.data_defect != 0:
        failed.append("cauchy_data")
    if failed:
        report.classification, report.verdict = "residual-failure", INCONCLUSIVE
        report.notes.append("residual checks failed: " + ", ".join(failed))
    elif cert.verdict == STRONG:
        report.classification, report.verdict = "pos-holds", DOES_NOT_EXTEND
        report.notes.append("strongly P-convex at p: a solution on the domain does not extend across p")
    elif cert.verdict == INCONCLUSIVE:
        report.classification, report.verdict = "marginal", INCONCLUSIVE
        report.notes.extend(cert.notes)
    else:
        report.classification, report.verdict = "residual-failure", INCONCLUSIVE
        report.notes.append("(Pos) holds but the contact certificate failed")
        report.notes.extend(cert.notes)
    return _finish(report, clock, t0, timing)


def _finish(report: Report, clock: dict, t0: float, timing: bool) -> Report:
    if timing:
        clock["total"] = time.perf_counter() - t0
        report.timing = clock
    return report


def summary_lines(report: Report) -> list[str]:
    lines = [f"classification: {report.classification}", f"verdict: {report.verdict}"]
    if report.posverdict:
        pv = report.posverdict
        lines.append(f"(Pos): {pv['holds']}  margin {pv['margin']:.6g}  sum|a|^2 {pv['sum_sq']:.6g}")
    if report.surface:
        lines.append(f"surface residual: {report.residuals['echar']:.3e} (order {report.residuals['echar_order']})")
    if report.certificate:
        c = report.certificate
        values = ", ".join(f"{v:.6g}" for v in c["H_spectrum"])
        lines.append(f"H spectrum: [{values}]  sample min {c['sample_min']:.6g}  -> {c['verdict']}")
    if report.tsuno:
        lines.append(f"renormalization residual: {report.tsuno['residual']:.3e}")
    lines.extend(f"note: {s}" for s in report.notes)
    return lines


__all__ = ["ProblemFile", "Report", "parse_problem", "load_problem", "run_check", "summary_lines",
           "surface_in_original", "HoloconvexError", "SCHEMA"]
