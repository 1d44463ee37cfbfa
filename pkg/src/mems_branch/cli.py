"""Command-line front end: ``mems-branch <subcommand> [options]``.

Subcommands ``formulas``, ``branch``, ``spectrum``, ``limit``, ``mp`` and
``diag``.  Settings come from built-in defaults, then an optional config file
(``--config``), then flags.  Exit status is 0 on success, 2 for configuration
errors and 3 for numerical failures; the latter also print a one-line JSON
error record on stderr.

Data files carry no timestamps and floats are written with 17 significant
digits (CSV) or as shortest round-trip literals (JSON), so identical settings
give byte-identical files.
"""

import argparse
import ast
from concurrent.futures import ProcessPoolExecutor
import copy
import csv
import io
import json
import logging
import math
import os
from pathlib import Path
import sys

import numpy as np

from .closed_forms import critical_data, hardy_stability_check, singular_amplitude
from .continuation import ContinuationParams, solve_at_sup_norm, trace_branch
from .exceptions import ConvergenceError, DomainError, SingularityError
from .newton import NewtonParams, minimal_solution
from .radial import ProblemSpec, build_grid

__all__ = ["ConfigError", "DEFAULTS", "load_config", "parse_value", "branch_svg", "main", "BRANCH_HEADER"]

log = logging.getLogger(__name__)

BRANCH_HEADER = ("s", "lambda", "u0", "sup_norm", "mu1", "mu2", "morse_index")

DEFAULTS = {
    "N": 2,
    "alpha": 0.0,
    "g0": 1.0,
    "grid.n": 1000,
    "grid.kind": "auto",
    "grid.stretch": None,
    "continuation.ds0": 0.05,
    "continuation.ds_min": 1e-9,
    "continuation.ds_max": 0.1,
    "continuation.fold_tol": 1e-3,
    "continuation.lam_scale": 1.0,
    "continuation.max_steps": 5000,
    "spectrum.l_max": 2,
    "spectrum.k_max": 3,
    "spectrum.lambda": 0.0,
    "newton.tol": 1e-10,
    "newton.max_iter": 50,
    "newton.barrier": 1e-8,
    "mp.eps": None,
    "mp.p": None,
    "mp.path_nodes": 21,
    "mp.lambda_frac": 0.98,
    "limit.rmax": 1e4,
    "limit.rtest": [10.0, 30.0, 100.0],
    "diag.branch_csv": None,
    "diag.R": 5.0,
    "output.dir": None,
    "output.formats": ["csv", "json", "svg"],
}


class ConfigError(ValueError):
    """Invalid configuration; ``where`` is ``path:line`` or the field name."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where

    def __str__(self):
        msg = super().__str__()
        return f"{self.where}: {msg}" if self.where else msg


# ---------------------------------------------------------------- config

def _pos(v):
    return v > 0


def _check(kind, test=None, hint="", optional=False, listed=False, choices=None):
    return dict(kind=kind, test=test, hint=hint, optional=optional, listed=listed, choices=choices)


SCHEMA = {
    "N": _check(int, lambda v: v >= 1, "an integer >= 1", listed=True),
    "alpha": _check(float, lambda v: v >= 0 and math.isfinite(v), "a finite number >= 0", listed=True),
    "g0": _check(float, lambda v: v > 0 and math.isfinite(v), "a finite number > 0"),
    "grid.n": _check(int, lambda v: v >= 16, "an integer >= 16"),
    "grid.kind": _check(str, choices=("auto", "uniform", "graded")),
    "grid.stretch": _check(float, _pos, "> 0", optional=True),
    "continuation.ds0": _check(float, _pos, "> 0"),
    "continuation.ds_min": _check(float, _pos, "> 0"),
    "continuation.ds_max": _check(float, _pos, "> 0"),
    "continuation.fold_tol": _check(float, _pos, "> 0"),
    "continuation.lam_scale": _check(float, _pos, "> 0"),
    "continuation.max_steps": _check(int, lambda v: v >= 1, ">= 1"),
    "spectrum.l_max": _check(int, lambda v: 1 <= v <= 50, "in [1, 50]"),
    "spectrum.k_max": _check(int, lambda v: 2 <= v <= 50, "in [2, 50]"),
    "spectrum.lambda": _check(float, lambda v: v >= 0, ">= 0"),
    "newton.tol": _check(float, lambda v: 0 < v < 1, "in (0, 1)"),
    "newton.max_iter": _check(int, lambda v: v >= 1, ">= 1"),
    "newton.barrier": _check(float, lambda v: 0 < v < 1e-2, "in (0, 0.01)"),
    "mp.eps": _check(float, lambda v: 0 < v < 1, "in (0, 1)", optional=True),
    "mp.p": _check(float, lambda v: v > 1, "> 1", optional=True),
    "mp.path_nodes": _check(int, lambda v: v >= 5, ">= 5"),
    "mp.lambda_frac": _check(float, lambda v: 0 < v < 1, "in (0, 1)"),
    "limit.rmax": _check(float, lambda v: v >= 100, ">= 100"),
    "limit.rtest": _check(float, _pos, "> 0", listed=True),
    "diag.branch_csv": _check(str, optional=True),
    "diag.R": _check(float, _pos, "> 0"),
    "output.dir": _check(str, optional=True),
    "output.formats": _check(str, listed=True, choices=("csv", "json", "svg")),
}


def parse_value(text):
    """Literal of a config value: number, ``true``/``false``/``none``, quoted
    string, bracketed or comma-separated list, or a bare string."""
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null", ""):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        pass
    if "," in text:
        return [parse_value(t) for t in text.split(",")]
    return text


def _coerce(key, value, where=None):
    rule = SCHEMA.get(key)
    if rule is None:
        raise ConfigError(f"unknown key {key!r}", where)
    where = where or f"field {key!r}"
    if value is None:
        if rule["optional"]:
            return None
        raise ConfigError("a value is required", where)
    if isinstance(value, (list, tuple)):
        if not rule["listed"]:
            raise ConfigError("expected a single value, got a list", where)
        items = list(value)
        if not items:
            raise ConfigError("empty list", where)
    else:
        items = [value]
    out = []
    kind = rule["kind"]
    for v in items:
        if isinstance(v, bool) or (kind is not str and not isinstance(v, (int, float))):
            raise ConfigError(f"expected {kind.__name__}, got {v!r}", where)
        if kind is int:
            if float(v) != int(v):
                raise ConfigError(f"expected an integer, got {v!r}", where)
            v = int(v)
        elif kind is float:
            v = float(v)
        elif not isinstance(v, str):
            raise ConfigError(f"expected a string, got {v!r}", where)
        if rule["choices"] and v not in rule["choices"]:
            raise ConfigError(f"must be one of {', '.join(rule['choices'])} (got {v!r})", where)
        if rule["test"] is not None and not rule["test"](v):
            raise ConfigError(f"must be {rule['hint']} (got {v!r})", where)
        out.append(v)
    if rule["listed"] and (isinstance(value, (list, tuple)) or key in ("limit.rtest", "output.formats")):
        return out
    return out[0]


def load_config(path):
    """Read a flat ``key = value`` file into a dict of validated settings.

    Blank lines and ``#`` comments are ignored; keys are dotted names from
    :data:`DEFAULTS`; each key may appear once.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc.strerror}", str(path))
    out = {}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{no}"
        if "=" not in line:
            raise ConfigError("expected 'key = value'", where)
        key, value = (t.strip() for t in line.split("=", 1))
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", where)
        out[key] = _coerce(key, parse_value(value), where)
    return out


def _check_cross(cfg):
    if not cfg["continuation.ds_min"] <= cfg["continuation.ds0"] <= cfg["continuation.ds_max"]:
        raise ConfigError("need ds_min <= ds0 <= ds_max", "field 'continuation.ds0'")


def _threads():
    raw = os.environ.get("MEMS_BRANCH_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        k = 0
    if k < 1:
        raise ConfigError(f"must be a positive integer (got {raw!r})", "env MEMS_BRANCH_THREADS")
    return k


# ------------------------------------------------------------- builders

def _scalar(cfg, key, cmd):
    v = cfg[key]
    if isinstance(v, list):
        if len(v) != 1:
            raise ConfigError(f"the {cmd} subcommand takes a single value", f"field {key!r}")
        v = v[0]
    return v


def _spec(cfg, N, alpha):
    return ProblemSpec(N, alpha, cfg["g0"])


def _grid(cfg, spec, n=None):
    kind = cfg["grid.kind"]
    if kind == "auto":
        # the N >= 8 branches run into r = 0 singularly and need clustering there
        kind = "graded" if spec.N >= 8 else "uniform"
    return build_grid(n or cfg["grid.n"], spec, kind=kind, stretch=cfg["grid.stretch"])


def _newton(cfg):
    return NewtonParams(tol=cfg["newton.tol"], max_iter=cfg["newton.max_iter"], barrier=cfg["newton.barrier"])


def _cont(cfg):
    return ContinuationParams(
        ds0=cfg["continuation.ds0"],
        ds_min=cfg["continuation.ds_min"],
        ds_max=cfg["continuation.ds_max"],
        fold_tol=cfg["continuation.fold_tol"],
        lam_scale=cfg["continuation.lam_scale"],
        max_steps=cfg["continuation.max_steps"],
        l_max=cfg["spectrum.l_max"],
        k_max=cfg["spectrum.k_max"],
        newton=_newton(cfg),
    )


# -------------------------------------------------------------- writers

def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _json_text(obj):
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _ticks(lo, hi, count=5):
    span = hi - lo
    raw = span / count
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9)
    last = math.floor(hi / step + 1e-9)
    return [k * step for k in range(first, last + 1)]


def branch_svg(branch, title=""):
    """Bifurcation diagram ``u(0)`` versus ``lam`` as a self-contained SVG.

    Solid strokes mark ``mu_1 > 0``, dashed strokes ``mu_1 <= 0``; folds are
    circles.
    """
    W, H = 640, 440
    left, right, top, bottom = 70, 20, 36, 56
    lam = branch.lam
    u0 = branch.u0
    mu1 = branch.mu1
    lam_hi = _ticks(0.0, max(float(np.max(lam)), 1e-12) * 1.05)[-1]
    if lam_hi < np.max(lam):
        lam_hi = float(np.max(lam)) * 1.05
    pw, ph = W - left - right, H - top - bottom

    def X(v):
        return left + pw * v / lam_hi

    def Y(v):
        return top + ph * (1.0 - v)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.2f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(0.0, lam_hi):
        x = X(t)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{t:.6g}</text>')
    for t in _ticks(0.0, 1.0):
        y = Y(t)
        out.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{t:.6g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{H - 14}" text-anchor="middle">lambda</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.2f})">u(0)</text>')
    # split into runs of equal stability, sharing the junction point
    stable = mu1 > 0
    start = 0
    for i in range(1, len(lam) + 1):
        if i == len(lam) or stable[i] != stable[start]:
            idx = range(start, min(i + 1, len(lam)))
            pts = " ".join(f"{X(lam[k]):.2f},{Y(u0[k]):.2f}" for k in idx)
            dash = "" if stable[start] else ' stroke-dasharray="6,4"'
            out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"{dash}/>')
            start = i
    for f in branch.folds:
        out.append(f'<circle cx="{X(f.lam):.2f}" cy="{Y(f.u0):.2f}" r="4" fill="none" stroke="red"/>')
    lx, ly = left + 12, top + 14
    out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 30}" y2="{ly}" stroke="black" stroke-width="1.5"/>')
    out.append(f'<text x="{lx + 36}" y="{ly + 4}">mu1 &gt; 0</text>')
    out.append(f'<line x1="{lx}" y1="{ly + 18}" x2="{lx + 30}" y2="{ly + 18}" stroke="black" '
               'stroke-width="1.5" stroke-dasharray="6,4"/>')
    out.append(f'<text x="{lx + 36}" y="{ly + 22}">mu1 &lt; 0</text>')
    out.append(f'<circle cx="{lx + 15}" cy="{ly + 36}" r="4" fill="none" stroke="red"/>')
    out.append(f'<text x="{lx + 36}" y="{ly + 40}">fold</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def branch_rows(branch):
    return [(p.s, p.lam, p.u0, p.sup_norm, p.mu1, p.mu2, p.morse_index) for p in branch.points]


# ---------------------------------------------------------- subcommands

def _out_dir(cfg, default):
    return Path(cfg["output.dir"] or default)


def cmd_formulas(cfg):
    N, alpha = _scalar(cfg, "N", "formulas"), _scalar(cfg, "alpha", "formulas")
    data = critical_data(N, alpha).as_dict()
    data["lambda_star"] = data["lambda_star_explicit"]
    text = _json_text(data)
    sys.stdout.write(text)
    if cfg["output.dir"]:
        _write(_out_dir(cfg, ".") / "formulas.json", text)


def _trace_case(cfg, N, alpha):
    spec = _spec(cfg, N, alpha)
    grid = _grid(cfg, spec)
    return trace_branch(spec, grid, _cont(cfg))


def _branch_outputs(cfg, branch, N, alpha, stem):
    out = _out_dir(cfg, "mems_out")
    fm = cfg["output.formats"]
    if "csv" in fm:
        _write(out / f"{stem}.csv", _csv_text(BRANCH_HEADER, branch_rows(branch)))
    if "json" in fm:
        summary = branch.summary()
        summary["N"], summary["alpha"] = N, alpha
        summary["points"] = len(branch)
        _write(out / f"{stem}.json", _json_text(summary))
    if "svg" in fm:
        _write(out / f"{stem}.svg", branch_svg(branch, f"N = {N}, alpha = {alpha:g}"))


def _sweep_worker(args):
    cfg, N, alpha = args
    return _trace_case(cfg, N, alpha)


def cmd_branch(cfg):
    Ns = cfg["N"] if isinstance(cfg["N"], list) else [cfg["N"]]
    alphas = cfg["alpha"] if isinstance(cfg["alpha"], list) else [cfg["alpha"]]
    cases = [(N, a) for N in Ns for a in alphas]
    if len(cases) == 1:
        N, a = cases[0]
        _branch_outputs(cfg, _trace_case(cfg, N, a), N, a, "branch")
        return
    threads = min(_threads(), len(cases))
    jobs = [(cfg, N, a) for N, a in cases]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(j) for j in jobs]
    for (N, a), br in zip(cases, results):
        br.context = None
        _branch_outputs(cfg, br, N, a, f"branch_N{N}_alpha{a:g}")


def cmd_spectrum(cfg):
    N, alpha = _scalar(cfg, "N", "spectrum"), _scalar(cfg, "alpha", "spectrum")
    from .spectrum import morse_data

    spec = _spec(cfg, N, alpha)
    grid = _grid(cfg, spec)
    lam = cfg["spectrum.lambda"]
    u = minimal_solution(lam, spec, grid, _newton(cfg)) if lam > 0 else np.zeros(grid.n)
    sr = morse_data(u, lam, spec, grid, l_max=cfg["spectrum.l_max"], k_max=cfg["spectrum.k_max"])
    data = {"N": N, "alpha": alpha, "lambda": lam, "n": grid.n, "u0": float(u[0])}
    data.update(sr.as_dict())
    text = _json_text(data)
    sys.stdout.write(text)
    if cfg["output.dir"]:
        _write(_out_dir(cfg, ".") / "spectrum.json", text)


def cmd_limit(cfg):
    from .limit import hardy_stability_certificate, instability_certificate, shoot

    N, alpha = _scalar(cfg, "N", "limit"), _scalar(cfg, "alpha", "limit")
    rmax = cfg["limit.rmax"]
    prof = shoot(N, alpha, R_max=rmax)
    certs = []
    for R in cfg["limit.rtest"]:
        if R > rmax:
            raise ConfigError(f"R_test {R:g} exceeds rmax {rmax:g}", "field 'limit.rtest'")
        mu, _ = instability_certificate(prof, R)
        certs.append({"R_test": R, "mu1_hat": mu, "certificate": prof.certificate})
    try:
        K = singular_amplitude(N, alpha)
    except DomainError:
        K = None
    data = {
        "N": N,
        "alpha": alpha,
        "R_max": rmax,
        "exponent": prof.exponent,
        "K_hat": prof.K_hat,
        "K_singular": K,
        "amplitude_ratio": prof.K_hat / K if K else None,
        "fit_residual": prof.fit_residual,
        "certificates": certs,
        "certificate": "unstable" if any(c["certificate"] == "unstable" for c in certs) else "inconclusive",
        "hardy_stable": hardy_stability_certificate(N, alpha) if N >= 2 else None,
        "hardy_window": hardy_stability_check(N, alpha) if N >= 2 else None,
        "flags": prof.flags,
    }
    out = _out_dir(cfg, "mems_out")
    fm = cfg["output.formats"]
    if "csv" in fm:
        r, U = prof.r, prof.U
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(r > 0, U / r**prof.exponent, np.nan)
        _write(out / "limit_profile.csv", _csv_text(("r", "U", "U_over_r_p"), zip(r, U, ratio)))
    if "json" in fm:
        _write(out / "limit.json", _json_text(data))


def cmd_mp(cfg):
    from .mountain_pass import PathParams, RegularizationParams, mp_search

    N, alpha = _scalar(cfg, "N", "mp"), _scalar(cfg, "alpha", "mp")
    spec = _spec(cfg, N, alpha)
    grid = _grid(cfg, spec)
    br = trace_branch(spec, grid, _cont(cfg))
    lam_star = br.lambda_star_est
    lam = cfg["mp.lambda_frac"] * lam_star
    params = None
    if cfg["mp.eps"] is not None:
        params = RegularizationParams.for_dimension(N, cfg["mp.eps"], cfg["mp.p"])
    elif cfg["mp.p"] is not None:
        raise ConfigError("mp.p needs mp.eps", "field 'mp.p'")
    res = mp_search(lam, params, spec, grid, PathParams(nodes=cfg["mp.path_nodes"]), newton=_newton(cfg))
    data = {
        "N": N,
        "alpha": alpha,
        "lambda_star": lam_star,
        "lambda": lam,
        "level": res.level,
        "energy_u_lambda": res.energy_u_lambda,
        "energy_w_eps": res.energy_w_eps,
        "accepted": res.accepted,
        "grad_norm": res.grad_norm,
        "mu1": res.mu1,
        "mu2": res.mu2,
        "sup_norm": float(np.max(res.u)),
        "eps": res.params.eps,
        "p": res.params.p,
        "sweeps": res.sweeps,
        "newton_steps": res.newton_steps,
        "flags": res.flags,
    }
    out = _out_dir(cfg, "mems_out")
    fm = cfg["output.formats"]
    if "csv" in fm:
        r = grid.r
        u = np.append(res.u, 0.0)
        ul = np.append(res.u_lambda, 0.0)
        _write(out / "mp_solution.csv", _csv_text(("r", "u", "u_lambda"), zip(r, u, ul)))
    if "json" in fm:
        _write(out / "mp.json", _json_text(data))


def read_branch_csv(path):
    """Rows of a branch CSV as dicts of floats; the header must match exactly."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != BRANCH_HEADER:
                raise ConfigError(f"header must be {','.join(BRANCH_HEADER)}", str(path))
            rows = []
            for no, rec in enumerate(reader, 2):
                if len(rec) != len(BRANCH_HEADER):
                    raise ConfigError("wrong number of columns", f"{path}:{no}")
                try:
                    rows.append(dict(zip(BRANCH_HEADER, map(float, rec))))
                except ValueError:
                    raise ConfigError("non-numeric entry", f"{path}:{no}")
    except OSError as exc:
        raise ConfigError(f"cannot read branch CSV: {exc.strerror}", str(path))
    return rows


def cmd_diag(cfg):
    from .blowup import BLOWUP_LEVEL, classify_and_rescale, compare_to_limit, pointwise_bound_constant
    from .limit import shoot

    path = cfg["diag.branch_csv"]
    if not path:
        raise ConfigError("diag needs a branch CSV (--branch-csv or diag.branch_csv)", "field 'diag.branch_csv'")
    rows = read_branch_csv(path)
    N, alpha = _scalar(cfg, "N", "diag"), _scalar(cfg, "alpha", "diag")
    spec = _spec(cfg, N, alpha)
    grid = _grid(cfg, spec)
    cont = _cont(cfg)
    limit = shoot(N, alpha, R_max=cfg["limit.rmax"])
    R = cfg["diag.R"]
    out = _out_dir(cfg, "mems_out")
    u = np.zeros(grid.n)
    lam = 0.0
    points = []
    for k, row in enumerate(rows):
        target = row["u0"]
        if target >= 1.0 - cont.newton.barrier:
            points.append({"row": k, "u0": target, "skipped": "beyond the barrier"})
            continue
        u, lam = solve_at_sup_norm(target, spec, grid, u, row["lambda"], cont)
        if target < BLOWUP_LEVEL or lam <= 0:
            continue
        prof = classify_and_rescale(u, lam, spec, grid)
        rec = {
            "row": k,
            "s": row["s"],
            "lambda": lam,
            "u0": target,
            "eps": prof.eps,
            "case_tag": prof.case_tag,
            "scale": prof.scale,
            "bound_constant": pointwise_bound_constant(u, lam, spec, grid),
        }
        try:
            rec["distance"] = compare_to_limit(prof, limit, R)
        except ValueError as exc:
            rec["distance"] = None
            rec["note"] = str(exc)
        points.append(rec)
        if "csv" in cfg["output.formats"]:
            sel = prof.y <= min(R, limit.R_max)
            y = prof.y[sel]
            c = spec.g0 ** (1.0 / (2.0 + alpha))
            _write(out / f"diag_point_{k:04d}.csv",
                   _csv_text(("y", "U_n", "U_limit"), zip(y, prof.U[sel], limit.evaluate(c * y))))
    valid = [p for p in points if p.get("distance") is not None]
    dist = [p["distance"] for p in valid]
    bounds = [p["bound_constant"] for p in valid]
    summary = {
        "N": N,
        "alpha": alpha,
        "R": R,
        "branch_csv": os.path.basename(str(path)),
        "points": points,
        "distances_strictly_decreasing": bool(len(dist) >= 2 and all(b < a for a, b in zip(dist, dist[1:]))),
        "bound_constant_liminf": min(bounds[-10:]) if bounds else None,
        "limit_K_hat": limit.K_hat,
    }
    if "json" in cfg["output.formats"]:
        _write(out / "diag.json", _json_text(summary))


COMMANDS = {
    "formulas": cmd_formulas,
    "branch": cmd_branch,
    "spectrum": cmd_spectrum,
    "limit": cmd_limit,
    "mp": cmd_mp,
    "diag": cmd_diag,
}

# flag -> config key
FLAGS = {
    "N": "N",
    "alpha": "alpha",
    "g0": "g0",
    "n": "grid.n",
    "grid_kind": "grid.kind",
    "stretch": "grid.stretch",
    "out": "output.dir",
    "formats": "output.formats",
    "lambda_": "spectrum.lambda",
    "l_max": "spectrum.l_max",
    "k_max": "spectrum.k_max",
    "rmax": "limit.rmax",
    "rtest": "limit.rtest",
    "lambda_frac": "mp.lambda_frac",
    "eps": "mp.eps",
    "p": "mp.p",
    "path_nodes": "mp.path_nodes",
    "branch_csv": "diag.branch_csv",
    "R": "diag.R",
}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("problem and output")
    g.add_argument("--config", help="flat 'key = value' config file")
    g.add_argument("--N", help="dimension (branch accepts a comma list)")
    g.add_argument("--alpha", help="profile exponent (branch accepts a comma list)")
    g.add_argument("--g0", help="profile amplitude")
    g.add_argument("--n", help="grid cells")
    g.add_argument("--grid-kind", dest="grid_kind", help="auto, uniform or graded")
    g.add_argument("--stretch", help="graded-grid stretch factor")
    g.add_argument("--out", help="output directory")
    g.add_argument("--formats", help="comma list from csv,json,svg")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    g.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="mems-branch", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("formulas", parents=[common], help="closed-form quantities as JSON")
    sub.add_parser("branch", parents=[common], help="trace the solution branch (CSV, JSON, SVG)")
    sp = sub.add_parser("spectrum", parents=[common], help="spectrum of the minimal solution as JSON")
    sp.add_argument("--lambda", dest="lambda_", help="lambda on the minimal branch (default 0)")
    sp.add_argument("--l-max", dest="l_max")
    sp.add_argument("--k-max", dest="k_max")
    lp = sub.add_parser("limit", parents=[common], help="limit profile and instability certificate")
    lp.add_argument("--rmax")
    lp.add_argument("--rtest", help="comma list of truncation radii")
    mp = sub.add_parser("mp", parents=[common], help="mountain-pass second solution")
    mp.add_argument("--lambda-frac", dest="lambda_frac", help="fraction of the computed pull-in value")
    mp.add_argument("--eps")
    mp.add_argument("--p")
    mp.add_argument("--path-nodes", dest="path_nodes")
    dp = sub.add_parser("diag", parents=[common], help="blow-up diagnostics along a branch CSV")
    dp.add_argument("--branch-csv", dest="branch_csv")
    dp.add_argument("--R", help="comparison radius in the rescaled variable")
    return ap


def build_config(args):
    """Defaults, then the config file, then flags (``--set`` last)."""
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        cfg.update(load_config(args.config))
    for attr, key in FLAGS.items():
        raw = getattr(args, attr, None)
        if raw is not None:
            cfg[key] = _coerce(key, parse_value(raw), f"flag for {key!r}")
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}", "--set")
        key, value = (t.strip() for t in item.split("=", 1))
        cfg[key] = _coerce(key, parse_value(value), f"--set {key}")
    _check_cross(cfg)
    return cfg


def _fail(command, exc):
    rec = {"error": type(exc).__name__, "message": str(exc), "subcommand": command}
    for name in ("residual", "iterations", "reason", "node"):
        v = getattr(exc, name, None)
        if v is not None:
            rec[name] = v
    sys.stderr.write(json.dumps(_clean(rec), sort_keys=True) + "\n")
    return 3


def main(argv=None):
    ap = _parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        _threads()
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (ConvergenceError, SingularityError, DomainError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(args.command, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
