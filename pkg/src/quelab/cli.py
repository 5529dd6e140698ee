"""Command-line interface with a scriptable exit-code contract.

Exit codes: 0 for PASS or TREND-ONLY, 1 for a scientific FAIL, 2 for
usage errors, 3 for numeric errors.  Reports are emitted as JSON or CSV
with all numbers as decimal strings; emitted bytes are deterministic
(the wall-time field is zeroed unless --timing is given), so warm-cache
reruns reproduce reports byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

from mpmath import mp, mpf

from .config import RunConfig, parse_config_file
from .errors import QuelabError
from .massmeasure import (
    Rectangle,
    SiegelDomain,
    rect_mass,
    siegel_mass,
    vertical_mass,
)
from .numfmt import fmt
from .store import ProfileStore
from .verify import (
    VERDICT_FAIL,
    ScenarioReport,
    run_gamma_lemma,
    run_horizontal,
    run_lehmer_scan,
    run_mean_values,
    run_orthogonality,
    run_siegel_bound,
    run_vertical,
)


def emit_report(report: ScenarioReport, output_format: str, timing: bool = False) -> bytes:
    runtime = report.runtime_s if timing else 0.0
    if output_format == "json":
        doc = {
            "scenario": report.scenario,
            "params": report.params,
            "rows": report.rows,
            "verdict": report.verdict,
            "tolerances": report.tolerances,
            "runtime_s": runtime,
            "detail": report.detail,
        }
        return (json.dumps(doc, indent=2) + "\n").encode()
    if output_format == "csv":
        lines = [",".join(report.columns)]
        for row in report.rows:
            lines.append(
                ",".join("" if row.get(c) is None else str(row.get(c, "")) for c in report.columns)
            )
        return ("\n".join(lines) + "\n").encode()
    raise QuelabError(f"unknown output format {output_format!r}")


def emit_plot_data(report: ScenarioReport) -> bytes:
    xkey, ykey = report.plot
    lines = [f"{xkey},{ykey}"]
    for row in report.rows:
        if xkey in row and ykey in row and row[ykey] is not None:
            lines.append(f"{row[xkey]},{row[ykey]}")
    return ("\n".join(lines) + "\n").encode()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--precision", type=int, default=256, help="working precision in bits")
    p.add_argument("--cache-dir", default=None, help="eigenform cache directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="write report to this file instead of stdout")
    p.add_argument("--plot-data", action="store_true", help="emit two-column plot CSV")
    p.add_argument("--timing", action="store_true", help="include real wall time in reports")
    p.add_argument("--Y", dest="y_split", type=float, default=2.0, help="norm split height")
    p.add_argument("--quad-tol", type=float, default=1e-8, help="norm quadrature tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="quelab",
        description="mass-equidistribution laboratory for Hecke eigenforms",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_eig = sub.add_parser("eigenforms", help="compute normalized coefficients")
    p_eig.add_argument("--weight", type=int, required=True)
    p_eig.add_argument("--ncoeffs", type=int, required=True)
    _add_common(p_eig)

    p_norm = sub.add_parser("norm", help="Petersson norm of one eigenform")
    p_norm.add_argument("--weight", type=int, required=True)
    p_norm.add_argument("--index", type=int, default=1)
    _add_common(p_norm)

    p_mass = sub.add_parser("mass", help="mass of a region")
    mass_sub = p_mass.add_subparsers(dest="region", required=True)
    p_rect = mass_sub.add_parser("rect")
    p_rect.add_argument("--weight", type=int, required=True)
    p_rect.add_argument("--index", type=int, default=1)
    p_rect.add_argument("--a", type=float, required=True)
    p_rect.add_argument("--b", type=float, required=True)
    p_rect.add_argument("--t1", type=float, required=True)
    p_rect.add_argument("--t2", type=float, default=None)
    _add_common(p_rect)
    p_sieg = mass_sub.add_parser("siegel")
    p_sieg.add_argument("--weight", type=int, required=True)
    p_sieg.add_argument("--index", type=int, default=1)
    p_sieg.add_argument("--a", type=float, default=-0.5)
    p_sieg.add_argument("--b", type=float, default=0.5)
    p_sieg.add_argument("--T", type=float, required=True)
    _add_common(p_sieg)

    p_ver = sub.add_parser("verify", help="run a verification scenario")
    p_ver.add_argument(
        "scenario",
        choices=(
            "vertical",
            "horizontal",
            "siegel",
            "meanvalues",
            "lehmer",
            "orthogonality",
            "gammalemma",
        ),
    )
    p_ver.add_argument("--k-min", type=int, default=12)
    p_ver.add_argument("--k-max", type=int, default=120)
    p_ver.add_argument("--T", type=float, default=1.0)
    p_ver.add_argument("--a", type=float, default=0.0)
    p_ver.add_argument("--b", type=float, default=0.25)
    p_ver.add_argument("--t2", type=float, default=None)
    p_ver.add_argument("--delta", type=float, default=0.1)
    p_ver.add_argument("--epsilon", type=float, default=1.0 / (4 * math.pi))
    p_ver.add_argument("--p", type=int, default=2)
    p_ver.add_argument("--k-grid", default="100,1000,10000,100000")
    _add_common(p_ver)

    p_sweep = sub.add_parser("sweep", help="run scenarios from a config file")
    p_sweep.add_argument("--config", required=True)

    return ap


def _make_store(args) -> ProfileStore:
    cfg = RunConfig(
        precision_bits=args.precision,
        cache_dir=args.cache_dir,
        jobs=args.jobs,
        y_split=args.y_split,
        quad_tol=args.quad_tol,
    )
    return ProfileStore(
        precision_bits=cfg.precision_bits,
        cache_dir=cfg.resolved_cache_dir(),
        y_split=cfg.y_split,
        quad_tol=cfg.quad_tol,
        jobs=cfg.jobs,
    )


def _write(args, data: bytes) -> None:
    if getattr(args, "out", None):
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)


def _run_scenario(args) -> ScenarioReport:
    store = _make_store(args)
    name = args.scenario
    if name == "gammalemma":
        grid = [int(s) for s in str(args.k_grid).split(",") if s.strip()]
        return run_gamma_lemma(args.delta, grid, args.precision)
    weights = store.weights(args.k_min, args.k_max)
    store.prefetch(weights, t_min=min(args.T, 1.0) if name != "siegel" else 1.0)
    if name == "vertical":
        return run_vertical(store, args.k_min, args.k_max, args.T)
    if name == "horizontal":
        return run_horizontal(store, args.k_min, args.k_max, args.a, args.b, args.T)
    if name == "siegel":
        return run_siegel_bound(store, args.k_min, args.k_max)
    if name == "meanvalues":
        return run_mean_values(store, args.k_min, args.k_max, args.epsilon)
    if name == "lehmer":
        return run_lehmer_scan(store, args.p, args.k_max)
    if name == "orthogonality":
        t2 = mp.inf if args.t2 is None else args.t2
        rect = Rectangle(args.a, args.b, args.T, t2)
        return run_orthogonality(store, args.k_min, args.k_max, rect)
    raise QuelabError(f"unknown scenario {name}")


def _cmd_eigenforms(args) -> int:
    mp.prec = args.precision
    store = _make_store(args)
    basis = store.basis(args.weight, ncoeffs=args.ncoeffs)
    rows = []
    for f in basis.forms:
        rows.append(
            {
                "k": f.weight,
                "index": f.index,
                "t2_eigenvalue": fmt(f.t2_eigenvalue),
                "lam": [fmt(x) for x in f.lam[: args.ncoeffs]],
            }
        )
    doc = {"weight": args.weight, "dim": basis.dim, "forms": rows}
    _write(args, (json.dumps(doc, indent=2) + "\n").encode())
    return 0


def _cmd_norm(args) -> int:
    mp.prec = args.precision
    store = _make_store(args)
    prof = store.profile(args.weight, args.index)
    doc = {
        "weight": args.weight,
        "index": args.index,
        "log_norm_sq": fmt(prof.log_norm_sq.logmag),
        "sym2_l": fmt(prof.sym2.l_value),
        "sym2_residue": fmt(prof.sym2.residue),
    }
    _write(args, (json.dumps(doc, indent=2) + "\n").encode())
    return 0


def _cmd_mass(args) -> int:
    mp.prec = args.precision
    store = _make_store(args)
    prof = store.profile(args.weight, args.index)
    form = store.form(args.weight, args.index)
    if args.region == "rect":
        t2 = mp.inf if args.t2 is None else args.t2
        rect = Rectangle(args.a, args.b, args.t1, t2)
        full_width = abs((rect.b - rect.a) - 1) < mpf(2) ** -40
        if full_width and t2 == mp.inf:
            value = vertical_mass(form, args.t1, prof)
        else:
            value = rect_mass(form, rect, prof)
        doc = {
            "weight": args.weight,
            "index": args.index,
            "region": {
                "a": fmt(rect.a, 17),
                "b": fmt(rect.b, 17),
                "t1": fmt(rect.t1, 17),
                "t2": "inf" if t2 == mp.inf else fmt(rect.t2, 17),
            },
            "mass": fmt(value),
        }
    else:
        dom = SiegelDomain(args.a, args.b, args.T)
        res = siegel_mass(form, dom, prof)
        doc = {
            "weight": args.weight,
            "index": args.index,
            "region": {"a": fmt(dom.a, 17), "b": fmt(dom.b, 17), "T": fmt(dom.t, 17)},
            "mass": fmt(res.value),
            "log_mass": fmt(res.log_mu.logmag) if res.log_mu.sign else "-inf",
            "bound_log": fmt(res.bound_log),
            "in_hypothesis": res.in_hypothesis,
            "within_bound": res.within_bound,
            "underflow": res.underflow,
        }
    _write(args, (json.dumps(doc, indent=2) + "\n").encode())
    return 0


def _cmd_verify(args) -> int:
    mp.prec = args.precision
    report = _run_scenario(args)
    if args.plot_data:
        _write(args, emit_plot_data(report))
    else:
        _write(args, emit_report(report, args.output_format, args.timing))
    return 1 if report.verdict == VERDICT_FAIL else 0


def _cmd_sweep(args) -> int:
    cfg = parse_config_file(args.config)
    mp.prec = cfg.precision_bits
    store = ProfileStore(
        precision_bits=cfg.precision_bits,
        cache_dir=cfg.resolved_cache_dir(),
        y_split=cfg.y_split,
        quad_tol=cfg.quad_tol,
        jobs=cfg.jobs,
    )
    weights = store.weights(cfg.k_min, cfg.k_max)
    store.prefetch(weights, t_min=min(cfg.t, 1.0))
    worst = 0
    import os

    os.makedirs(cfg.out_dir, exist_ok=True)
    for name in cfg.scenarios:
        if name == "vertical":
            rep = run_vertical(store, cfg.k_min, cfg.k_max, cfg.t)
        elif name == "horizontal":
            rep = run_horizontal(store, cfg.k_min, cfg.k_max, cfg.a, cfg.b, cfg.t)
        elif name == "siegel":
            rep = run_siegel_bound(store, cfg.k_min, cfg.k_max)
        elif name == "meanvalues":
            rep = run_mean_values(store, cfg.k_min, cfg.k_max, cfg.epsilon)
        elif name == "lehmer":
            rep = run_lehmer_scan(store, cfg.p, cfg.k_max)
        elif name == "orthogonality":
            rect = Rectangle(cfg.a, cfg.b, cfg.t, cfg.t2)
            rep = run_orthogonality(store, cfg.k_min, cfg.k_max, rect)
        elif name == "gammalemma":
            rep = run_gamma_lemma(cfg.delta, None, cfg.precision_bits)
        else:
            raise QuelabError(f"unknown scenario {name!r} in config")
        path = os.path.join(cfg.out_dir, f"report_{name}.{cfg.output_format}")
        with open(path, "wb") as fh:
            fh.write(emit_report(rep, cfg.output_format, cfg.timing))
        print(f"{name}: {rep.verdict} -> {path}", file=sys.stderr)
        if rep.verdict == VERDICT_FAIL:
            worst = 1
    return worst


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0,) else 0
    start = time.perf_counter()
    try:
        if args.command == "eigenforms":
            return _cmd_eigenforms(args)
        if args.command == "norm":
            return _cmd_norm(args)
        if args.command == "mass":
            return _cmd_mass(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        parser.print_usage(sys.stderr)
        return 2
    except QuelabError as exc:
        print(f"quelab: numeric error: {exc}", file=sys.stderr)
        return 3
    finally:
        if getattr(args, "timing", False):
            print(f"elapsed: {time.perf_counter() - start:.3f}s", file=sys.stderr)


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
