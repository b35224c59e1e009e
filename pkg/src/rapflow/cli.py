"""Command-line interface: ``rapflow <command> MODEL.json [options]``.

Model files are JSON documents. Either give the matrices directly::

    {"C_plus": [[-2]], "C_minus": [[-1]], "D_pm": [[2]], "D_mp": [[1]]}

(optionally ``structure`` with block sizes per regime, ``C_zero`` and
``D_p0``/``D_m0``/``D_0p``/``D_0m``), or a ``constructor`` section::

    {"constructor": {"type": "mjp", "Q": [[-2, 2], [1, -1]], "regimes": ["+", "-"]}}

with ``type`` one of ``mjp``, ``me_renewal``, ``markov_renewal_me``. An
optional ``alpha`` gives the default initial orbit vector in the up regime,
``rates`` may restate the unit rates, and ``labels`` is free-form.

Reports go to stdout (JSON or CSV), human-readable warnings to stderr.
Exit codes: 0 success, 2 invalid model, 3 numerical failure, 64 usage.
"""
import argparse
import csv
import hashlib
import io
import json
import re
import sys
import time
import warnings

import numpy as np

from . import __version__
from .errors import ModelError, NumericalError, RapFlowError, SimulationError
from .model import (
    MINUS,
    PLUS,
    ZERO,
    BlockStructure,
    RapFluidModel,
    Regime,
    check_rates,
    from_markov_jump,
    from_markov_renewal_me,
    from_me_renewal,
    validate,
)
from .passage import (
    crossing_expectations,
    downward_record,
    first_return,
    level_hitting_prob,
    solve_passage,
)
from .sim import default_horizon, estimate_hitting, estimate_stationary
from .stationary import bin_mass, density_eval, stationary_solve

__all__ = ["ModelFileError", "LoadedModel", "parse_model", "model_from_doc",
           "fingerprint", "run", "emit", "main"]

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

_REG = r"(plus|minus|zero|p|m|0|\+|-)"
_C_KEY = re.compile(rf"^C_?{_REG}$", re.IGNORECASE)
_D_KEY = re.compile(r"^D_?([pm0+\-])([pm0+\-])$", re.IGNORECASE)
_META_KEYS = {"structure", "rates", "constructor", "alpha", "labels", "name"}


class ModelFileError(ModelError):
    """Malformed model document; the message names the offending field."""

    code = "parse-error"


class LoadedModel:
    def __init__(self, model, alpha, labels, doc):
        self.model = model
        self.alpha = alpha
        self.labels = labels
        self.doc = doc


def _matrix(doc, key, ctx=""):
    where = f"{ctx}{key}"
    try:
        a = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"field {where!r}: not a numeric array ({exc})") from None
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ModelFileError(f"field {where!r}: expected nested rows, got {a.ndim}-d data")
    if not np.all(np.isfinite(a)):
        raise ModelFileError(f"field {where!r}: non-finite entries")
    return a


def _vector(value, where):
    try:
        a = np.array(value, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"field {where!r}: not a numeric vector ({exc})") from None
    return a


def _pair_key(key, where):
    if len(key) != 2:
        raise ModelFileError(f"field {where!r}: expected two regime characters, got {key!r}")
    try:
        return Regime.parse(key[0]), Regime.parse(key[1])
    except ValueError as exc:
        raise ModelFileError(f"field {where!r}: {exc}") from None


def _build_constructor(cons, name):
    if not isinstance(cons, dict) or "type" not in cons:
        raise ModelFileError("field 'constructor': expected an object with a 'type'")
    kind = str(cons["type"]).lower().replace("-", "_")
    ctx = "constructor."
    if kind == "mjp":
        qkey = "Q" if "Q" in cons else "generator"
        if qkey not in cons or "regimes" not in cons:
            raise ModelFileError("constructor 'mjp' needs 'Q' and 'regimes'")
        blocks = BlockStructure.from_spec(cons["blocks"]) if "blocks" in cons else None
        return from_markov_jump(_matrix(cons, qkey, ctx), cons["regimes"], blocks, name=name), None
    if kind == "me_renewal":
        need = ("alpha_plus", "S_plus", "alpha_minus", "S_minus")
        missing = [k for k in need if k not in cons]
        if missing:
            raise ModelFileError(f"constructor 'me_renewal' is missing {missing}")
        aP = _vector(cons["alpha_plus"], ctx + "alpha_plus")
        aM = _vector(cons["alpha_minus"], ctx + "alpha_minus")
        model = from_me_renewal(aP, _matrix(cons, "S_plus", ctx), aM, _matrix(cons, "S_minus", ctx),
                                name=name)
        return model, aP
    if kind == "markov_renewal_me":
        if "P" not in cons or "me" not in cons:
            raise ModelFileError("constructor 'markov_renewal_me' needs 'P' and 'me'")
        P = {}
        for key, blk in dict(cons["P"]).items():
            P[_pair_key(key, ctx + "P." + key)] = _matrix(cons["P"], key, ctx + "P.")
        me = {}
        for reg, lst in dict(cons["me"]).items():
            items = []
            for i, item in enumerate(lst):
                where = f"{ctx}me.{reg}[{i}]."
                if "alpha" not in item or "S" not in item:
                    raise ModelFileError(f"field {where[:-1]!r}: needs 'alpha' and 'S'")
                items.append((_vector(item["alpha"], where + "alpha"), _matrix(item, "S", where)))
            me[Regime.parse(reg)] = items
        model = from_markov_renewal_me(P, me, name=name)
        return model, model.seed_points[PLUS][0]
    raise ModelFileError(f"field 'constructor.type': unknown constructor {cons['type']!r}")


def model_from_doc(doc):
    """Build a :class:`LoadedModel` from a decoded model document."""
    if not isinstance(doc, dict):
        raise ModelFileError("model document must be a JSON object")
    if "rates" in doc:
        check_rates(doc["rates"])
    natural_alpha = None
    if "constructor" in doc:
        extra = [k for k in doc if k not in _META_KEYS]
        if extra:
            raise ModelFileError(f"fields {extra} cannot be combined with 'constructor'")
        model, natural_alpha = _build_constructor(doc["constructor"], str(doc.get("name", "")))
    else:
        C, D = {}, {}
        for key in doc:
            if key in _META_KEYS:
                continue
            m = _C_KEY.match(key)
            if m:
                C[Regime.parse(m.group(1))] = _matrix(doc, key)
                continue
            m = _D_KEY.match(key)
            if m:
                k, l = _pair_key(m.group(1) + m.group(2), key)
                D[k, l] = _matrix(doc, key)
                continue
            raise ModelFileError(f"unknown field {key!r}")
        if PLUS not in C or MINUS not in C:
            raise ModelFileError("fields 'C_plus' and 'C_minus' are required")
        if "structure" in doc:
            try:
                st = BlockStructure.from_spec(doc["structure"])
            except (TypeError, ValueError) as exc:
                raise ModelFileError(f"field 'structure': {exc}") from None
        else:
            st = BlockStructure.single(C[PLUS].shape[0], C[MINUS].shape[0],
                                       C[ZERO].shape[0] if ZERO in C else 0)
        model = RapFluidModel(st, C, D, name=str(doc.get("name", "")))
    if "alpha" in doc:
        alpha = _vector(doc["alpha"], "alpha")
    elif natural_alpha is not None:
        alpha = np.asarray(natural_alpha, dtype=float)
    else:
        alpha = np.zeros(model.eta(PLUS))
        alpha[0] = 1.0
    if alpha.size != model.eta(PLUS):
        raise ModelFileError(f"field 'alpha': length {alpha.size}, expected {model.eta(PLUS)}")
    return LoadedModel(model, alpha, doc.get("labels", {}), doc)


def parse_model(path):
    """Read and build a model file; errors carry line or field context."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return model_from_doc(doc)


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def fingerprint(model):
    """SHA-256 of the canonical matrix representation of ``model``."""
    return hashlib.sha256(_canonical_json(model.to_dict()).encode()).hexdigest()


# -- serialisation -----------------------------------------------------------

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _fmt_float(v):
    if np.isnan(v):
        return '"nan"'
    if np.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    s = format(v, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _to_json(x, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_to_json(v, indent + 1)}" for k, v in x.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(x, list):
        if not x:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in x):
            return "[" + ", ".join(_to_json(v) for v in x) + "]"
        return "[\n" + ",\n".join(pad + _to_json(v, indent + 1) for v in x) + "\n" + end + "]"
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, float):
        return _fmt_float(x)
    if isinstance(x, int):
        return str(x)
    return json.dumps(x)


def _flatten(prefix, x, rows):
    if isinstance(x, dict):
        if "mean" in x and "stderr" in x:
            m, s = x["mean"], x["stderr"]
            if isinstance(m, list):
                for i, (mi, si) in enumerate(zip(m, s)):
                    rows.append((f"{prefix}[{i}]", mi, si))
            else:
                rows.append((prefix, m, s))
            for k, v in x.items():
                if k not in ("mean", "stderr", "n"):
                    _flatten(f"{prefix}.{k}", v, rows)
            return
        for k, v in x.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, rows)
    elif isinstance(x, list):
        for i, v in enumerate(x):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, x, None))


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _fmt_float(v).strip('"')
    return str(v)


def emit(report, fmt="json"):
    """Serialise a report to bytes; identical reports give identical bytes.

    JSON carries the full structure; CSV has one row per scalar result with
    columns ``name,value,stderr``.
    """
    report = _plain(report)
    if fmt == "json":
        return (_to_json(report) + "\n").encode()
    if fmt == "csv":
        rows = []
        _flatten("", report.get("results", {}), rows)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "value", "stderr"])
        for name, v, s in rows:
            w.writerow([name, _csv_cell(v), _csv_cell(s)])
        return buf.getvalue().encode()
    raise ValueError(f"unknown format {fmt!r}")


# -- commands ----------------------------------------------------------------

def _parse_floats(text, name):
    try:
        return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise ValueError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


def _alpha(args, loaded):
    if getattr(args, "alpha", None):
        return np.array(_parse_floats(args.alpha, "alpha"))
    return loaded.alpha


def _est(e):
    return {"mean": e.mean, "stderr": e.stderr, "n": e.n_samples}


def _psi_block(ps):
    p = ps.psi
    return {"psi": p.psi, "iterations": p.iterations, "residual": p.residual,
            "converged": p.converged, "censored": p.censored,
            "error_estimate": p.error_estimate}


def _cmd_validate(args, loaded):
    rep = validate(loaded.model)
    checks = {c.name: {"passed": c.passed, "value": c.value, "detail": c.detail}
              for c in rep.checks}
    return {"ok": rep.ok, "checks": checks}, {"assumptions": rep.assumptions}, \
        EXIT_OK if rep.ok else EXIT_INVALID


def _cmd_psi(args, loaded):
    ps = solve_passage(loaded.model, tol=args.tol, max_iter=args.max_iter)
    res = _psi_block(ps)
    res["U"], res["K"] = ps.gens.U, ps.gens.K
    return res, {}, EXIT_OK if ps.psi.converged else EXIT_NUMERICAL


def _passage(args, loaded):
    ps = solve_passage(loaded.model)
    return ps, {"psi_converged": ps.psi.converged, "psi_residual": ps.psi.residual,
                "psi_iterations": ps.psi.iterations}


def _cmd_first_return(args, loaded):
    ps, diag = _passage(args, loaded)
    fr = first_return(_alpha(args, loaded), ps.psi)
    diag["prob_out_of_range"] = fr.out_of_range
    return {"prob": fr.prob, "vector": fr.vector}, diag, \
        EXIT_OK if ps.psi.converged else EXIT_NUMERICAL


def _cmd_record(args, loaded):
    ps, diag = _passage(args, loaded)
    if args.beta:
        start, from_plus = np.array(_parse_floats(args.beta, "beta")), False
    else:
        start, from_plus = _alpha(args, loaded), True
    vec = downward_record(start, from_plus, args.x, ps.gens, ps.psi)
    return {"x": args.x, "from_plus": from_plus, "vector": vec, "prob": vec.sum()}, diag, \
        EXIT_OK if ps.psi.converged else EXIT_NUMERICAL


def _cmd_hitting(args, loaded):
    ps, diag = _passage(args, loaded)
    a = _alpha(args, loaded)
    vec = downward_record(a, True, args.x, ps.gens, ps.psi)
    return {"x": args.x, "prob": level_hitting_prob(a, args.x, ps.gens, ps.psi), "vector": vec}, \
        diag, EXIT_OK if ps.psi.converged else EXIT_NUMERICAL


def _cmd_crossings(args, loaded):
    ps, diag = _passage(args, loaded)
    up, down = crossing_expectations(_alpha(args, loaded), args.x, ps.gens, ps.psi)
    return {"x": args.x, "up": up, "down": down, "up_total": up.sum(), "down_total": down.sum()}, \
        diag, EXIT_OK if ps.psi.converged else EXIT_NUMERICAL


def _grid(args):
    g = _parse_floats(args.grid, "grid") if args.grid else [0.0, 0.5, 1.0, 2.0]
    if not g or any(x < 0 for x in g) or any(b <= a for a, b in zip(g, g[1:])):
        raise ValueError("--grid must be increasing non-negative numbers")
    return g


def _bin_names(edges):
    return [f"({a:g},{b:g})" for a, b in zip(edges[:-1], edges[1:])]


def _cmd_stationary(args, loaded):
    sol = stationary_solve(loaded.model, normalize=args.normalize)
    grid = _grid(args)
    edges = grid + [float("inf")]
    dens = {}
    for x in grid:
        d = density_eval(sol, x)
        dens[f"{x:g}"] = {"pi": d.pi, "pi_plus": d.pi_plus, "pi_minus": d.pi_minus,
                          "pi_zero": d.pi_zero}
    bins = {n: bin_mass(sol, a, b) for n, (a, b) in zip(_bin_names(edges), zip(edges[:-1], edges[1:]))}
    res = {"c_minus": sol.c_minus, "atom_zero": sol.atom_zero,
           "total_mass": sol.diagnostics["total_mass"], "v0": sol.v0, "K": sol.K,
           "psi": sol.psi, "density": dens, "bins": bins}
    diag = dict(sol.diagnostics)
    diag["stability"] = sol.stability.status
    return res, diag, EXIT_OK


def _sim_settings(args, loaded):
    horizon = args.horizon if args.horizon is not None else default_horizon(loaded.model)
    return horizon


def _simulate(args, loaded):
    a = _alpha(args, loaded)
    if args.target in ("return", "hitting"):
        x = 0.0 if args.target == "return" else args.x
        horizon = _sim_settings(args, loaded)
        e = estimate_hitting(loaded.model, a, x, args.paths, horizon, args.seed)
        res = {"x": x, "prob": _est(e.prob), "vector": _est(e.orbit)}
        diag = {"horizon": e.horizon, "truncated": e.truncated,
                "truncation_rate": e.truncation_rate, "aborted": e.aborted}
        return res, diag
    total = args.horizon if args.horizon is not None else 1e5
    burn = args.burn_in if args.burn_in is not None else 0.01 * total
    grid = _grid(args)
    e = estimate_stationary(loaded.model, a, total, burn, grid, args.seed, args.batches)
    names = _bin_names(list(e.edges))
    bins = {n: {"mean": float(m), "stderr": float(s), "n": e.bins.n_samples}
            for n, m, s in zip(names, e.bins.mean, e.bins.stderr)}
    res = {"atom_minus": _est(e.atom_minus), "atom_zero": _est(e.atom_zero), "bins": bins,
           "jump_rate": _est(e.jump_rate)}
    diag = {"total_time": total, "burn_in": burn, "batches": args.batches, "aborted": e.aborted}
    return res, diag


def _cmd_simulate(args, loaded):
    res, diag = _simulate(args, loaded)
    diag["seed"] = args.seed
    return res, diag, EXIT_OK


def _z(mean, se, target):
    mean, se, target = (np.asarray(v, dtype=float) for v in (mean, se, target))
    diff = mean - target
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / np.where(se > 0, se, 1.0),
                     np.where(np.abs(diff) <= 1e-12, 0.0, np.copysign(np.inf, diff)))
    return z


def _cmd_compare(args, loaded):
    sim_res, diag = _simulate(args, loaded)
    a = _alpha(args, loaded)
    rows = {}
    if args.target in ("return", "hitting"):
        ps = solve_passage(loaded.model)
        x = sim_res["x"]
        vec = downward_record(a, True, x, ps.gens, ps.psi)
        rows["prob"] = (sim_res["prob"], vec.sum())
        rows["vector"] = (sim_res["vector"], vec)
        diag["psi_converged"] = ps.psi.converged
    else:
        sol = stationary_solve(loaded.model)
        unit = sol.normalized()
        rows["atom_minus"] = (sim_res["atom_minus"], sol.c_minus, unit.c_minus)
        rows["atom_zero"] = (sim_res["atom_zero"], sol.atom_zero, unit.atom_zero)
        edges = _grid(args) + [float("inf")]
        for n, (lo, hi) in zip(_bin_names(edges), zip(edges[:-1], edges[1:])):
            rows[f"bin{n}"] = (sim_res["bins"][n], bin_mass(sol, lo, hi), bin_mass(unit, lo, hi))
        diag["normalization_residual"] = sol.normalization_residual
    out = {}
    worst = 0.0
    worst_unit = 0.0
    for name, (est, exact, *unit) in rows.items():
        z = _z(est["mean"], est["stderr"], exact)
        worst = max(worst, float(np.max(np.abs(z))))
        out[name] = {"analytic": exact, "mean": est["mean"], "stderr": est["stderr"], "z": z}
        if unit:
            zu = _z(est["mean"], est["stderr"], unit[0])
            worst_unit = max(worst_unit, float(np.max(np.abs(zu))))
            out[name].update(analytic_normalized=unit[0], z_normalized=zu)
    res = {"comparisons": out, "max_abs_z": worst, "agree": worst <= args.z_max}
    if args.target == "stationary":
        res.update(max_abs_z_normalized=worst_unit, agree_normalized=worst_unit <= args.z_max)
    diag["seed"] = args.seed
    return res, diag, EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "psi": _cmd_psi,
    "first-return": _cmd_first_return,
    "record": _cmd_record,
    "hitting": _cmd_hitting,
    "crossings": _cmd_crossings,
    "stationary": _cmd_stationary,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser():
    p = _Parser(prog="rapflow", description="Matrix-analytic solver and simulator "
                "for RAP-modulated fluid queues.")
    p.add_argument("--version", action="version", version=f"rapflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("model", help="model file (JSON)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--output", "-o", help="write the report here instead of stdout")
        sp.add_argument("--timing", action="store_true",
                        help="include wall time in the report (makes output non-reproducible)")

    def alpha(sp):
        sp.add_argument("--alpha", help="initial up-regime orbit vector, comma separated")

    sp = sub.add_parser("validate", help="check model conditions")
    common(sp)
    sp = sub.add_parser("psi", help="first-return matrix")
    common(sp)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--max-iter", type=int, default=10000)
    sp = sub.add_parser("first-return", help="first-return probability and orbit")
    common(sp)
    alpha(sp)
    for name, hlp in (("record", "downward record orbit at level -x"),
                      ("hitting", "probability of reaching level -x"),
                      ("crossings", "expected orbit sums over crossings of level x")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        alpha(sp)
        sp.add_argument("--x", type=float, required=True)
        if name == "record":
            sp.add_argument("--beta", help="start in the down regime with this orbit vector")
    sp = sub.add_parser("stationary", help="stationary law of the regulated queue")
    common(sp)
    sp.add_argument("--grid", help="levels for densities and bin edges, comma separated")
    sp.add_argument("--normalize", action="store_true",
                    help="rescale atoms and density to total mass one")
    for name in ("simulate", "compare"):
        sp = sub.add_parser(name, help="Monte Carlo estimate" if name == "simulate"
                            else "analytic value next to Monte Carlo estimate")
        common(sp)
        alpha(sp)
        sp.add_argument("--target", choices=("return", "hitting", "stationary"), required=True)
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--paths", type=int, default=10000)
        sp.add_argument("--horizon", type=float,
                        help="path horizon (passage targets) or total time (stationary)")
        sp.add_argument("--x", type=float, default=1.0, help="level for --target hitting")
        sp.add_argument("--burn-in", type=float)
        sp.add_argument("--batches", type=int, default=32)
        sp.add_argument("--grid", help="bin edges for --target stationary")
        if name == "compare":
            sp.add_argument("--z-max", type=float, default=3.0)
    return p


def run(argv):
    """Parse ``argv`` and execute; returns ``(report, exit_code, fmt)``."""
    args = build_parser().parse_args(argv)
    report = {"command": args.command, "args": _echo(args)}
    t0 = time.perf_counter()
    code = EXIT_OK
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            loaded = parse_model(args.model)
            report["model"] = {"fingerprint": fingerprint(loaded.model),
                               "name": loaded.model.name, "labels": loaded.labels,
                               "structure": loaded.model.structure.to_dict()}
            results, diag, code = _COMMANDS[args.command](args, loaded)
            report["results"] = results
            report["diagnostics"] = diag
        except ModelError as exc:
            code = EXIT_INVALID
            report["error"] = {"code": exc.code, "message": str(exc)}
        except (NumericalError, SimulationError) as exc:
            code = EXIT_NUMERICAL
            report["error"] = {"code": exc.code, "message": str(exc)}
            if getattr(exc, "report", None) is not None:
                r = exc.report
                report["diagnostics"] = {
                    "status": r.status, "psi_row_sum_error": r.psi_row_sum_error,
                    "abscissa_K": r.abscissa_K, "u_zero_count": r.u_zero_count,
                    "mean_drift": r.mean_drift, "reasons": list(r.reasons)}
        except ValueError as exc:
            code = EXIT_USAGE
            report["error"] = {"code": "bad-argument", "message": str(exc)}
    msgs = [str(w.message) for w in caught]
    report["warnings"] = msgs
    report["exit_code"] = code
    if args.timing:
        report["wall_time"] = time.perf_counter() - t0
    return report, code, args


def _echo(args):
    skip = {"output", "format", "timing"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and k != "command"}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    report, code, args = run(argv)
    for msg in report["warnings"]:
        sys.stderr.write(f"warning: {msg}\n")
    if "error" in report:
        sys.stderr.write(f"error [{report['error']['code']}]: {report['error']['message']}\n")
    data = emit(report, args.format)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
