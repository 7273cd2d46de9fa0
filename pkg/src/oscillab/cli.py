"""Scenario runner and command-line interface.

Subcommands: run, vdc-verify, decay-fit, hyperplane-check, fourier-check,
proofkit, basis.  Each analysis writes CSV + JSON (+ SVG) into its own
subdirectory of the output directory; the run record (the only file with
timestamps) is written last.  Exit codes: 0 all verdicts pass, 1 verdict
failure, 2 parse error, 3 precondition failure."""

from __future__ import annotations

import argparse
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import decayfit, fourier1d, homog, hyperplane, proofkit, vdc
from . import expr as ex
from . import powerlog as pl
from . import report
from .scenario import (
    KNOWN_ANALYSES,
    PreconditionError,
    Scenario,
    ScenarioError,
    load,
    scenario_hash,
)

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3


def _write_rows(outdir: Path, stem: str, header, rows, fmt: str) -> str:
    if fmt == "json":
        path = outdir / f"{stem}.json"
        report.write_json(path, [dict(zip(header, row)) for row in rows])
    else:
        path = outdir / f"{stem}.csv"
        report.write_csv(path, header, rows)
    return path.name


def _x_columns(s: Scenario):
    if not s.x_grid:
        return []
    k = len(s.x_grid[0])
    return [f"x{i + 1}" for i in range(k)]


# --------------------------------------------------------------------------
# Analysis drivers: each returns {"verdict": bool, "files": [...], ...}


def run_decay(s: Scenario, outdir: Path, opts: dict, fmt: str, plot: bool) -> dict:
    window = float(opts.get("window_fraction", decayfit.DEFAULT_WINDOW_FRACTION))
    certify_theoretical = bool(opts.get("certify_theoretical", False))
    tol = opts.get("tol")
    rows = []
    entries = []
    verdict = True
    first_plot = None
    for x in s.parameter_grid():
        f = s.amplitude(x)
        phase = s.phase(x)
        rep = decayfit.analyze(f, phase, s.xi, s.lambda_min, s.lambda_max,
                               s.lambda_points, tol, window)
        cert = None
        if certify_theoretical and phase.is_polynomial:
            hv = hyperplane.check_polynomial(phase)
            if hv.passed:
                p_theory = 1.0 / (4.0 * phase.derivative_bound)
                g = 1.1 * rep.c_hat
                cert = decayfit.certify_envelope(rep.samples, p_theory, g)
        entry = {
            "x": list(x),
            "p_hat": rep.p_hat,
            "c_hat": rep.c_hat,
            "r_squared": rep.fit.r_squared,
            "window": list(rep.fit.window),
            "low_confidence": rep.samples.low_confidence,
        }
        ok = not rep.samples.low_confidence
        if cert is not None:
            entry["certificate"] = {
                "p": cert.p, "g": cert.g, "ok": cert.ok,
                "worst_margin": cert.worst_margin, "worst_lambda": cert.worst_lam,
            }
            ok = ok and cert.ok
        verdict = verdict and ok
        entries.append(entry)
        bound_vals = None
        if cert is not None:
            bound_vals = cert.g * rep.samples.lams ** (-cert.p)
        for i, lam in enumerate(rep.samples.lams):
            row = list(x) + [lam, rep.samples.abs_values[i], rep.envelope[i]]
            row.append(bound_vals[i] if bound_vals is not None else "")
            rows.append(row)
        if first_plot is None:
            first_plot = (rep, bound_vals)
    header = _x_columns(s) + ["lambda", "abs_F", "envelope", "bound"]
    files = [_write_rows(outdir, "samples", header, rows, fmt)]
    report.write_json(outdir / "report.json", {"per_x": entries, "verdict": verdict})
    files.append("report.json")
    if plot and first_plot is not None:
        rep, bound_vals = first_plot
        samples = list(zip(rep.samples.lams, rep.samples.abs_values))
        envelope = list(zip(rep.samples.lams, rep.envelope))
        bound = (list(zip(rep.samples.lams, bound_vals))
                 if bound_vals is not None else None)
        report.emit_plot(samples, outdir / "plot.svg", envelope=envelope,
                         bound=bound, title=f"{s.name}: decay")
        files.append("plot.svg")
    return {"verdict": verdict, "files": files}


def run_vdc(s: Scenario, outdir: Path, opts: dict, fmt: str, plot: bool) -> dict:
    if "d" not in opts or "interval" not in opts:
        raise PreconditionError("vdc analysis needs d and interval in the scenario")
    d = int(opts["d"])
    interval = tuple(float(v) for v in opts["interval"])
    lams = [float(v) for v in opts.get("lambdas", (10.0, 100.0, 1000.0, 10000.0))]
    x = s.parameter_grid()[0]
    try:
        cert = vdc.verify(s.amplitude(x), s.phase(x), s.xi, d, interval, lams,
                          tol=float(opts.get("tol", 1e-10)))
    except ValueError as err:
        raise PreconditionError(str(err)) from err
    files = [_write_rows(outdir, "certificate",
                         ["lambda", "actual", "bound", "margin"],
                         cert.csv_rows(), fmt)]
    report.write_json(outdir / "certificate.json", cert.json_header())
    files.append("certificate.json")
    if plot:
        samples = [(r.lam, max(r.actual, report.PLOT_FLOOR)) for r in cert.rows]
        bound = [(r.lam, r.bound) for r in cert.rows]
        report.emit_plot(samples, outdir / "plot.svg", bound=bound,
                         title=f"{s.name}: van der Corput")
        files.append("plot.svg")
    return {"verdict": cert.verdict and not cert.low_confidence, "files": files}


def run_hyperplane(s: Scenario, outdir: Path, opts: dict, fmt: str, plot: bool) -> dict:
    # Verdicts are per swept parameter value; no uniformity over a continuum
    # of parameters is claimed.
    per_x = []
    for x_point in s.parameter_grid():
        v = hyperplane.check_polynomial(s.phase(x_point))
        entry = {"x": list(x_point), "passed": v.passed, "method": v.method,
                 "detail": v.detail}
        if v.witness is not None:
            entry["witness"] = {"xi": list(v.witness_xi), "b": v.witness_b,
                                "residual": v.witness_residual}
        per_x.append(entry)
    x = s.parameter_grid()[0]
    phase = s.phase(x)
    verdict = hyperplane.check_polynomial(phase)
    payload = {
        "passed": all(e["passed"] for e in per_x),
        "method": verdict.method,
        "detail": verdict.detail,
        "per_x": per_x,
    }
    if verdict.witness is not None:
        payload["witness"] = {
            "xi": list(verdict.witness_xi),
            "b": verdict.witness_b,
            "residual": verdict.witness_residual,
        }
    if "fiber" in opts:
        fiber = opts["fiber"]
        box = ex.DomainBox(tuple(ex.AxisInterval(float(lo), float(hi))
                                 for lo, hi in fiber["box"]))
        hp_pair = (tuple(float(v) for v in fiber["xi"]), float(fiber["b"]))
        est = hyperplane.monte_carlo_fiber(phase, hp_pair, box,
                                           int(fiber.get("samples", 20000)),
                                           float(fiber.get("delta", 1e-3)),
                                           seed=s.seed)
        payload["fiber"] = {
            "fraction": est.fraction, "ci_low": est.ci_low,
            "ci_high": est.ci_high, "samples": est.samples, "delta": est.delta,
        }
    files = []
    if not verdict.passed and "counterexample_box" in opts:
        box = [(float(lo), float(hi)) for lo, hi in opts["counterexample_box"]]
        lams = [float(v) for v in opts.get("lambdas", (1.0, 10.0, 100.0, 1000.0))]
        rep = hyperplane.counterexample_integral(phase, verdict.witness, box, lams)
        files.append(_write_rows(outdir, "counterexample", ["lambda", "abs_F"],
                                 rep.rows, fmt))
        payload["counterexample"] = {
            "volume": rep.volume,
            "max_deviation": rep.max_deviation,
        }
    report.write_json(outdir / "verdict.json", payload)
    files.append("verdict.json")
    return {"verdict": payload["passed"], "files": files}


def run_proofkit(s: Scenario, outdir: Path, opts: dict, fmt: str, plot: bool) -> dict:
    x = s.parameter_grid()[0]
    f = s.amplitude(x)
    piece = int(opts.get("piece", 0))
    term_idx = int(opts.get("term", 0))
    try:
        cell, terms = f.pieces[piece]
        term = terms[term_idx]
    except IndexError as err:
        raise PreconditionError(
            f"proofkit piece/term selection out of range: {err}") from err
    rewritten = False
    ax = cell.axes[-1]
    if ax.classify() == pl.MIDDLE and term.beta[-1] > 0:
        term = pl.eliminate_middle_log(term, cell, cell.dimension - 1)[0]
        rewritten = True
    n_bound = s.derivative_bound or s.phase(x).derivative_bound
    p_default, r_default = proofkit.default_parameters(n_bound, term.alpha[-1])
    p = float(opts.get("p", p_default))
    r = float(opts.get("r", r_default))
    lams = [float(v) for v in opts.get("lambdas", [10.0 ** k for k in range(1, 7)])]

    fam = proofkit.build_truncation(term, cell, r, lams)
    split = proofkit.factor_split(term, cell)
    split_residual = proofkit.verify_factor_split(split, term)
    hb = proofkit.verify_h_bounds(split, fam, p)
    single = pl.PiecewisePowerLog(((cell, (term,)),))
    cm = proofkit.complement_mass(single, fam)
    minor = proofkit.psi_minorization(split, fam)
    g_info = None
    if cell.dimension == 2:
        g_info = proofkit.verify_g_bound(split, fam)

    mass_by_lam = dict(cm.rows)
    hb_by_lam = {row.lam: row for row in hb.rows}
    rows = []
    for lam, reg in zip(fam.lam_grid, fam.regions):
        lo, hi = reg if reg is not None else ("", "")
        hrow = hb_by_lam.get(lam)
        rows.append([lam, lo, hi,
                     hrow.sup_h if hrow else "",
                     hrow.int_abs_dh if hrow else "",
                     mass_by_lam.get(lam, "")])
    files = [_write_rows(outdir, "truncation",
                         ["lambda", "region_lo", "region_hi", "sup_h",
                          "int_abs_dh", "complement_mass"], rows, fmt)]
    ok = (hb.ok and cm.decreasing and minor["ok"]
          and (g_info is None or g_info["ok"]))
    payload = {
        "p": p, "r": r, "K": fam.K,
        "middle_log_eliminated": rewritten,
        "factor_split_residual": split_residual,
        "h_growth_exponent": hb.growth_exponent,
        "h_minimal_constant": hb.minimal_constant,
        "complement_decay_exponent": cm.decay_exponent,
        "complement_decreasing": cm.decreasing,
        "psi_minorization": minor,
        "verdict": ok,
    }
    if g_info is not None:
        payload["g_bound"] = {"G": g_info["G"],
                              "growth_exponent": g_info["growth_exponent"],
                              "ok": g_info["ok"]}
    report.write_json(outdir / "report.json", payload)
    files.append("report.json")
    if plot:
        masses = [(lam, max(m, report.PLOT_FLOOR)) for lam, m in cm.rows]
        report.emit_plot(masses, outdir / "plot.svg",
                         title=f"{s.name}: complement mass",
                         y_label="complement mass")
        files.append("plot.svg")
    return {"verdict": ok, "files": files}


def run_fourier(s: Scenario, outdir: Path, opts: dict, fmt: str, plot: bool) -> dict:
    x = s.parameter_grid()[0]
    f = s.amplitude(x)
    z_max = float(opts.get("z_max", 100.0))
    points = int(opts.get("points", 64))
    window = float(opts.get("window_fraction", decayfit.DEFAULT_WINDOW_FRACTION))
    rep = fourier1d.check_ft_integrability(f, z_max, points, window,
                                           tol=float(opts.get("tol", 1e-8)))
    residual_at = dict(rep.ibp_residuals)
    rows = []
    for z, val in zip(rep.z_grid, rep.values):
        rows.append([z, val.real, val.imag, abs(val), residual_at.get(float(z), "")])
    for z, resid in rep.ibp_residuals:
        if z not in rep.z_grid:
            val, _ = fourier1d.fourier_transform(f, z)
            rows.append([z, val.real, val.imag, abs(val), resid])
    rows.sort(key=lambda row: row[0])
    files = [_write_rows(outdir, "transform",
                         ["z", "re_ft", "im_ft", "abs_ft", "ibp_residual"],
                         rows, fmt)]
    dichotomy_ok = rep.continuous == (rep.verdict == "integrable")
    payload = {
        "q_hat": rep.q_hat, "c_hat": rep.c_hat, "r_squared": rep.r_squared,
        "window": list(rep.fit_window),
        "continuous": rep.continuous,
        "verdict": rep.verdict,
        "integral_estimate": rep.integral_estimate,
        "integral_model_error": rep.integral_model_error,
        "ibp_residuals": [[z, r] for z, r in rep.ibp_residuals],
        "dichotomy_ok": dichotomy_ok,
        "low_confidence": rep.low_confidence,
    }
    report.write_json(outdir / "report.json", payload)
    files.append("report.json")
    if plot:
        samples = list(zip(rep.z_grid, rep.abs_values))
        envelope = list(zip(rep.z_grid, decayfit.sliding_envelope(rep.abs_values)))
        report.emit_plot(samples, outdir / "plot.svg", envelope=envelope,
                         title=f"{s.name}: |fourier transform|",
                         x_label="z", y_label="|ft|")
        files.append("plot.svg")
    return {"verdict": dichotomy_ok and not rep.low_confidence, "files": files}


def run_basis(s: Scenario, outdir: Path, opts: dict, fmt: str, plot: bool,
              echo: bool = False) -> dict:
    pairs = [(int(m), int(d)) for m, d in opts.get("pairs", [[2, 2]])]
    entries = []
    files = []
    ok = True
    for m, d in pairs:
        basis = homog.build_basis(m, d)
        rank = int(np.linalg.matrix_rank(basis.matrix, tol=1e-9))
        ok = ok and rank == basis.size
        vec_rows = [[j + 1] + list(v) for j, v in enumerate(basis.vectors)]
        files.append(_write_rows(outdir, f"vectors_m{m}_d{d}",
                                 ["j"] + [f"v{i + 1}" for i in range(m)],
                                 vec_rows, fmt))
        mat_rows = []
        for k, mono in enumerate(basis.monomials):
            mat_rows.append(["".join(str(e) for e in mono)] + list(basis.matrix[k]))
        files.append(_write_rows(outdir, f"matrix_m{m}_d{d}",
                                 ["monomial"] + [f"c{j + 1}" for j in range(basis.size)],
                                 mat_rows, fmt))
        entries.append({"m": m, "d": d, "size": basis.size, "rank": rank,
                        "condition_number": basis.condition_number,
                        "enumeration": basis.enumeration})
        if echo:
            print(f"# basis m={m} d={d}: ell={basis.size} rank={rank} "
                  f"cond={basis.condition_number:.6g}")
            print(",".join(["j"] + [f"v{i + 1}" for i in range(m)]))
            for row in vec_rows:
                print(",".join(report.format_float(v) if isinstance(v, float)
                               else str(v) for v in row))
            print(",".join(["monomial"] + [f"c{j + 1}" for j in range(basis.size)]))
            for row in mat_rows:
                print(",".join(report.format_float(v) if isinstance(v, float)
                               else str(v) for v in row))
    report.write_json(outdir / "report.json", {"bases": entries, "verdict": ok})
    files.append("report.json")
    return {"verdict": ok, "files": files}


_DRIVERS = {
    "decay": run_decay,
    "vdc": run_vdc,
    "hyperplane": run_hyperplane,
    "proofkit": run_proofkit,
    "fourier": run_fourier,
    "basis": run_basis,
}


# --------------------------------------------------------------------------
# Runner


def _apply_overrides(s: Scenario, args) -> Scenario:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.lambda_min is not None:
        changes["lambda_min"] = args.lambda_min
    if args.lambda_max is not None:
        changes["lambda_max"] = args.lambda_max
    if args.lambda_points is not None:
        changes["lambda_points"] = args.lambda_points
    if args.tol is not None:
        changes["tol"] = args.tol
    if not changes:
        return s
    from dataclasses import replace

    return replace(s, **changes)


def run_scenario(s: Scenario, outdir: Path, args, only: str | None = None) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    analyses = [a for a in KNOWN_ANALYSES if a in s.analyses]
    if only is not None:
        analyses = [only]
    started = time.time()
    record = {
        "scenario": s.name,
        "scenario_hash": scenario_hash(s.path) if s.path else "",
        "tool_version": __version__,
        "analyses": {},
    }
    all_ok = True
    for name in analyses:
        opts = dict(s.options.get(name, {}))
        if args.tol is not None:
            opts["tol"] = args.tol
        driver = _DRIVERS[name]
        subdir = outdir / name
        subdir.mkdir(parents=True, exist_ok=True)
        if name == "basis":
            result = run_basis(s, subdir, opts, args.format, not args.no_plot,
                               echo=(only == "basis"))
        else:
            result = driver(s, subdir, opts, args.format, not args.no_plot)
        record["analyses"][name] = {
            "verdict": "pass" if result["verdict"] else "fail",
            "files": [f"{name}/{fn}" for fn in result["files"]],
        }
        all_ok = all_ok and result["verdict"]
        print(f"[{s.name}] {name}: {'pass' if result['verdict'] else 'FAIL'}")
    record["overall"] = "pass" if all_ok else "fail"
    record["started_unix"] = started
    record["finished_unix"] = time.time()
    report.write_json(outdir / "run_record.json", record)
    return EXIT_OK if all_ok else EXIT_VERDICT


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscillab",
        description="Oscillatory-integral decay laboratory: scenario runner "
                    "and analysis commands.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "run": "run every analysis requested by the scenario",
        "vdc-verify": "van der Corput bound certificate",
        "decay-fit": "sample |F| and fit/certify the decay envelope",
        "hyperplane-check": "hyperplane condition decision",
        "fourier-check": "Fourier transform decay and integrability",
        "proofkit": "truncation family and factor-bound verification",
        "basis": "homogeneous bases and change-of-basis matrices",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", help="path to a scenario TOML file")
        p.add_argument("--out-dir", default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--lambda-min", type=float, default=None)
        p.add_argument("--lambda-max", type=float, default=None)
        p.add_argument("--lambda-points", type=int, default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--no-plot", action="store_true")
    return parser


_COMMAND_ANALYSIS = {
    "vdc-verify": "vdc",
    "decay-fit": "decay",
    "hyperplane-check": "hyperplane",
    "fourier-check": "fourier",
    "proofkit": "proofkit",
    "basis": "basis",
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        s = load(args.scenario)
    except ScenarioError as err:
        print(f"scenario error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except PreconditionError as err:
        print(f"precondition failure: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    s = _apply_overrides(s, args)
    outdir = Path(args.out_dir) if args.out_dir else Path("out") / s.name
    only = _COMMAND_ANALYSIS.get(args.command)
    try:
        return run_scenario(s, outdir, args, only=only)
    except PreconditionError as err:
        print(f"precondition failure: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (pl.NotIntegrableError, pl.PartitionError) as err:
        print(f"precondition failure: {err}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    raise SystemExit(main())
