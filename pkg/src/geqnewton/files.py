"""Problem/LCP file parsing and report serialization.

Problem files are JSON::

    {
      "family": "poly1d" | "ncp_poly" | "qp_kkt" | "external",
      "params": {...},                       # family parameters
      "box": {"lower": [...], "upper": [...]},  # optional for builtin families
      "x0": [...],
      "lambda": 0.333,                       # optional when the box is all-free
      "majorant": {"kind": "lipschitz", "K": 0.667, "b": 0.0833},  # b optional
      "solver": {"tol_residual": 1e-12}      # optional
    }

Bounds accept numbers or the strings ``"-inf"`` / ``"inf"``. Floats are
written with 17 significant digits so binary64 values round-trip.
"""
from __future__ import annotations

import csv
import importlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from geqnewton import geqn, majorant
from geqnewton.avi import solve_affine_ge
from geqnewton.driver import SolverOptions
from geqnewton.errors import GeqnError, ProblemParseError
from geqnewton.geqn import Box, vec_norm

SCHEMA_VERSION = 1
FAMILIES = ("poly1d", "ncp_poly", "qp_kkt", "external")
_SOLVER_KEYS = {"tol_residual", "tol_step", "max_iter", "max_pivots"}


@dataclass(frozen=True)
class ParsedProblem:
    problem: geqn.GEProblem
    psi: Optional[majorant.MajorantFunction]
    options: SolverOptions
    majorant_spec: Optional[dict]
    solver_spec: dict
    b_defaulted: bool = False


# -- float formatting -------------------------------------------------------

def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_scalar(v):
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        s = fmt_float(v)
        return s if math.isfinite(v) else json.dumps(s)
    return json.dumps(str(v), ensure_ascii=False)


def to_json(obj, indent=2, _level=0):
    """JSON text with floats at 17 significant digits; non-finite floats become strings."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {to_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json_scalar(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    return _json_scalar(obj)


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- parsing helpers ---------------------------------------------------------

def _load_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemParseError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ProblemParseError(f"{path}: top level must be a JSON object")
    return data


def _number(value, field):
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return math.inf
        if s in ("-inf", "-infinity"):
            return -math.inf
        raise ProblemParseError(f"field {field!r}: expected a number or 'inf'/'-inf', got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemParseError(f"field {field!r}: expected a number, got {value!r}")
    return float(value)


def _finite(value, field):
    x = _number(value, field)
    if not math.isfinite(x):
        raise ProblemParseError(f"field {field!r}: must be finite")
    return x


def _vector(value, field, finite=True):
    if not isinstance(value, list):
        raise ProblemParseError(f"field {field!r}: expected a list of numbers")
    conv = _finite if finite else _number
    return np.array([conv(v, f"{field}[{i}]") for i, v in enumerate(value)], dtype=float)


def _matrix(value, field):
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise ProblemParseError(f"field {field!r}: expected a list of rows")
    rows = [_vector(r, f"{field}[{i}]") for i, r in enumerate(value)]
    if rows and any(r.size != rows[0].size for r in rows):
        raise ProblemParseError(f"field {field!r}: rows have unequal lengths")
    return np.array(rows, dtype=float).reshape(len(rows), rows[0].size if rows else 0)


def _require(data, key, where="problem"):
    if key not in data:
        raise ProblemParseError(f"{where}: missing required field {key!r}")
    return data[key]


def _build_map(family, params):
    if not isinstance(params, dict):
        raise ProblemParseError("field 'params': expected an object")
    try:
        if family == "poly1d":
            return geqn.poly1d(_vector(_require(params, "coefficients", "params"), "params.coefficients"))
        if family == "ncp_poly":
            coeffs = _require(params, "coefficients", "params")
            if not isinstance(coeffs, list):
                raise ProblemParseError("field 'params.coefficients': expected a list of lists")
            polys = [_vector(c, f"params.coefficients[{i}]") for i, c in enumerate(coeffs)]
            coupling = params.get("coupling")
            C = _matrix(coupling, "params.coupling") if coupling is not None else None
            return geqn.ncp_poly(polys, C)
        if family == "qp_kkt":
            Q = _matrix(_require(params, "Q", "params"), "params.Q")
            A = _matrix(_require(params, "A", "params"), "params.A")
            return geqn.qp_kkt(Q, _vector(_require(params, "c", "params"), "params.c"),
                               A, _vector(_require(params, "b", "params"), "params.b"))
        if family == "external":
            target = _require(params, "factory", "params")
            mod_name, _, attr = str(target).partition(":")
            if not attr:
                raise ProblemParseError("field 'params.factory': expected 'module:callable'")
            try:
                factory = getattr(importlib.import_module(mod_name), attr)
            except (ImportError, AttributeError) as exc:
                raise ProblemParseError(f"field 'params.factory': cannot import {target!r} ({exc})") from exc
            smap = factory(**params.get("kwargs", {}))
            if not isinstance(smap, geqn.SmoothMap):
                raise ProblemParseError(f"factory {target!r} did not return a SmoothMap")
            return geqn.SmoothMap(dim=smap.dim, evaluate=smap.evaluate, jacobian=smap.jacobian,
                                  name="external", params=dict(params), second=smap.second)
    except ProblemParseError:
        raise
    except GeqnError as exc:
        raise ProblemParseError(f"family {family!r}: {exc}") from exc
    raise ProblemParseError(f"field 'family': unknown family {family!r}; expected one of {FAMILIES}")


def _default_box(family, smap):
    if family == "poly1d":
        return Box.free(smap.dim)
    if family == "ncp_poly":
        return Box.nonnegative(smap.dim)
    if family == "qp_kkt":
        n = len(smap.params["c"])
        return geqn.qp_kkt_box(n, smap.dim - n)
    raise ProblemParseError("field 'box' is required for external maps")


def _parse_box(spec, n):
    if not isinstance(spec, dict):
        raise ProblemParseError("field 'box': expected an object with 'lower' and 'upper'")
    lo = _vector(_require(spec, "lower", "box"), "box.lower", finite=False)
    up = _vector(_require(spec, "upper", "box"), "box.upper", finite=False)
    if lo.size != n or up.size != n:
        raise ProblemParseError(f"field 'box': bounds have lengths {lo.size}/{up.size}, expected {n}")
    for i in range(n):
        if lo[i] > up[i]:
            raise ProblemParseError(f"field 'box': component {i} has lower {lo[i]!r} > upper {up[i]!r}")
    try:
        return Box(lo, up)
    except GeqnError as exc:
        raise ProblemParseError(f"field 'box': {exc}") from exc


def _parse_options(spec):
    if not isinstance(spec, dict):
        raise ProblemParseError("field 'solver': expected an object")
    unknown = set(spec) - _SOLVER_KEYS
    if unknown:
        raise ProblemParseError(f"field 'solver': unknown keys {sorted(unknown)}")
    kw = {}
    for key in ("tol_residual", "tol_step"):
        if key in spec:
            kw[key] = _finite(spec[key], f"solver.{key}")
    for key, name in (("max_iter", "max_iter"), ("max_pivots", "sub_max_pivots")):
        if key in spec:
            if isinstance(spec[key], bool) or not isinstance(spec[key], int):
                raise ProblemParseError(f"field 'solver.{key}': expected an integer")
            kw[name] = spec[key]
    try:
        return SolverOptions(**kw)
    except GeqnError as exc:
        raise ProblemParseError(f"field 'solver': {exc}") from exc


def first_step_length(problem, max_pivots=None):
    """``||x_1 - x_0||_inf`` from one subproblem solve at ``x0``."""
    x0 = problem.x0
    sol = solve_affine_ge(problem.map.jac(x0), problem.map(x0), problem.box.shifted(x0),
                          max_pivots=max_pivots)
    x1 = x0 + sol.y
    if not problem.box.is_free:
        x1 = geqn.project_box(problem.box, x1)
    return vec_norm(x1 - x0)


def build_majorant(spec, lam, b):
    kind = str(spec.get("kind", "")).lower()
    if kind == majorant.LIPSCHITZ:
        return majorant.make_lipschitz(_finite(_require(spec, "K", "majorant"), "majorant.K"), b, lam)
    if kind == majorant.SMALE:
        return majorant.make_smale(_finite(_require(spec, "gamma", "majorant"), "majorant.gamma"), b, lam)
    raise ProblemParseError(f"field 'majorant.kind': expected 'lipschitz' or 'smale', got {spec.get('kind')!r}")


def parse_problem_dict(data):
    family = _require(data, "family")
    smap = _build_map(family, data.get("params", {}))
    box = _parse_box(data["box"], smap.dim) if "box" in data else _default_box(family, smap)
    x0 = _vector(_require(data, "x0"), "x0")
    if x0.size != smap.dim:
        raise ProblemParseError(f"field 'x0': length {x0.size}, expected {smap.dim}")
    lam = _finite(data["lambda"], "lambda") if data.get("lambda") is not None else None
    options = _parse_options(data.get("solver", {}))

    mspec = data.get("majorant")
    K = gamma = b_over = None
    if mspec is not None:
        if not isinstance(mspec, dict):
            raise ProblemParseError("field 'majorant': expected an object")
        if "K" in mspec:
            K = _finite(mspec["K"], "majorant.K")
        if "gamma" in mspec:
            gamma = _finite(mspec["gamma"], "majorant.gamma")
        if mspec.get("b") is not None:
            b_over = _finite(mspec["b"], "majorant.b")
    try:
        problem = geqn.make_problem(smap, box, x0, lam=lam, lip_K=K, smale_gamma=gamma, b_override=b_over)
    except GeqnError as exc:
        raise ProblemParseError(str(exc)) from exc

    psi = None
    defaulted = False
    if mspec is not None:
        b = b_over
        if b is None:
            b = first_step_length(problem, options.sub_max_pivots)
            defaulted = True
        try:
            psi = build_majorant(mspec, problem.lam, b)
        except ProblemParseError:
            raise
        except GeqnError as exc:
            raise ProblemParseError(f"field 'majorant': {exc}") from exc
    return ParsedProblem(problem=problem, psi=psi, options=options, majorant_spec=mspec,
                         solver_spec=dict(data.get("solver", {})), b_defaulted=defaulted)


def parse_problem(path):
    """Read a problem file and build the problem, majorant and solver options."""
    return parse_problem_dict(_load_json(path))


def problem_to_dict(parsed):
    """Inverse of :func:`parse_problem_dict` (majorant ``b`` only if it was given)."""
    p = parsed.problem
    out = {"family": p.map.name, "params": p.map.params,
           "box": {"lower": [fmt_bound(v) for v in p.box.lower], "upper": [fmt_bound(v) for v in p.box.upper]},
           "x0": p.x0.tolist()}
    if not p.lam_computed:
        out["lambda"] = p.lam
    if parsed.majorant_spec is not None:
        m = {"kind": parsed.majorant_spec["kind"]}
        if p.lip_K is not None:
            m["K"] = p.lip_K
        if p.smale_gamma is not None:
            m["gamma"] = p.smale_gamma
        if p.b_override is not None:
            m["b"] = p.b_override
        out["majorant"] = m
    if parsed.solver_spec:
        out["solver"] = parsed.solver_spec
    return out


def fmt_bound(v):
    return fmt_float(v) if math.isinf(v) else float(v)


def parse_lcp(path):
    data = _load_json(path)
    M = _matrix(_require(data, "M", "lcp"), "M")
    q = _vector(_require(data, "q", "lcp"), "q")
    if M.shape != (q.size, q.size):
        raise ProblemParseError(f"LCP shapes disagree: M {M.shape}, q has length {q.size}")
    return M, q


# -- reports ------------------------------------------------------------------

def history_csv(history):
    n = history.iterates[0].size
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "residual", "step", "pivots", "sub_status", "dist_to_x1"] + [f"x{i}" for i in range(n)])
    for k, x in enumerate(history.iterates):
        if k == 0:
            extra = ["", "", "", ""]
        else:
            st = history.sub_stats[k - 1]
            extra = [fmt_float(history.steps[k - 1]), st.pivots, st.status, fmt_float(history.dist_to_x1[k - 1])]
        w.writerow([k, fmt_float(history.residuals[k])] + extra + [fmt_float(v) for v in x])
    return buf.getvalue()


def majorant_dict(psi):
    out = {"kind": psi.kind}
    if psi.K is not None:
        out["K"] = psi.K
    if psi.gamma is not None:
        out["gamma"] = psi.gamma
    out.update({"b": psi.b, "lambda": psi.lam, "domain_R": psi.domain_r})
    return out


def conditions_dict(report):
    return {"h1": report.h1, "h2": report.h2, "h3": report.h3, "h4": report.h4,
            "kantorovich_ok": report.kantorovich_ok, "h2_provenance": report.h2_provenance,
            "diagnostics": dict(report.diagnostics)}


def certificate_dict(cert, history, psi, source=None):
    m = len(history.iterates) - 1
    rows = []
    for k in range(m + 1):
        row = {"k": k, "t_k": cert.t_aligned[k], "residual": history.residuals[k],
               "error_proxy": cert.terminal_errors[k], "error_envelope": cert.error_envelope[k],
               "terminal_slack": cert.terminal_slack[k], "terminal_bound_ok": cert.terminal_bound_ok[k]}
        if k < m:
            row.update({"step": history.steps[k], "step_envelope": cert.t_aligned[k + 1] - cert.t_aligned[k],
                        "step_bound_ok": cert.step_bound_ok[k]})
        rows.append(row)
    mc = None
    if cert.majorant_check is not None:
        c = cert.majorant_check
        mc = {"samples": c.samples, "passed": c.passed, "worst_margin": c.worst_margin,
              "seed": c.seed, "radius": c.radius, "ok": c.ok}
    return {
        "schema_version": SCHEMA_VERSION,
        "source": source,
        "outcome": history.outcome.value,
        "certified": cert.ok,
        "majorant": majorant_dict(psi),
        "conditions": conditions_dict(cert.condition_report),
        "t_star": cert.t_star,
        "uniqueness_radius": cert.uniqueness_radius,
        "b_observed": cert.b,
        "psi0": cert.psi0,
        "initial_condition_ok": cert.initial_ok,
        "rates": {"linear": cert.rates.linear, "quadratic": cert.rates.quadratic},
        "linear_rate_ok": cert.linear_rate_ok,
        "quadratic_rate_ok": cert.quadratic_rate_ok,
        "majorant_check": mc,
        "proxy": cert.proxy,
        "tolerance": cert.tol,
        "iterations": rows,
        "assumptions": list(cert.assumptions),
    }
