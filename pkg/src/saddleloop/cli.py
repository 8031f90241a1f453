"""Command-line entry point.

Every module is exposed as a subcommand with reproducible runs: a run is
fully described by its config (flags, or a JSON file overriding them), and
every run writes its artifact plus a manifest echoing the config, the
toolkit version, and wall time. Artifacts are deterministic for a fixed
config and --threads 1; the manifest is not (it carries the wall time).

Exit codes: 0 success, 1 hard failure, 2 invalid config, 3 degraded
(artifact written, but one or more numerical quality flags were raised).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, abelian, acceptance, centroid, melnikov, picard_fuchs
from .flowsim import (FlowSpec, QuadraticOneForm, appendix_flow, census,
                      integrate)
from .model import (Annulus, Family, HamiltonianSpec, MelnikovCoeffs,
                    PerturbationSpec)
from .ovals import section_segment

OUT_DIR_ENV = "SADDLELOOP_OUT_DIR"


class ConfigError(Exception):
    """Invalid run configuration; message names the offending field."""


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _parse_grid(text: str, field: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"{field}: expected LO:HI:N, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"{field}: {exc}") from exc
    if n < 1:
        raise ConfigError(f"{field}: need at least one point")
    return np.linspace(lo, hi, n)


def _parse_pair(text: str, field: str) -> tuple[float, float]:
    sep = ":" if ":" in text else ","
    parts = text.split(sep)
    if len(parts) != 2:
        raise ConfigError(f"{field}: expected two values, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"{field}: {exc}") from exc


def _parse_coeffs(text: str, field: str) -> tuple[float, ...]:
    parts = text.split(",")
    if len(parts) != 6:
        raise ConfigError(f"{field}: expected 6 comma-separated coefficients "
                          f"(1, x, y, x^2, x*y, y^2), got {len(parts)}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"{field}: {exc}") from exc


def _annulus(name: str) -> Annulus:
    return Annulus.SIGMA_PLUS if name == "plus" else Annulus.SIGMA_MINUS


def _out_path(args, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    base = os.environ.get(OUT_DIR_ENV, ".")
    return Path(base) / default_name


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(path: Path, config: dict, artifacts: list[str],
                    wall: float, flags: list[str]) -> None:
    _write_json(Path(str(path) + ".manifest.json"), {
        "config": config,
        "version": __version__,
        "wall_time_s": wall,
        "artifacts": artifacts,
        "degraded": bool(flags),
        "flags": flags,
    })


def _config_echo(args, fields) -> dict:
    return {k: getattr(args, k) for k in fields if getattr(args, k) is not None}


def _apply_config_file(args) -> None:
    """--config file.json overrides flags; keys use flag spelling."""
    if not getattr(args, "config", None):
        return
    try:
        overrides = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ConfigError("config: top level must be an object")
    for key, val in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"config: unknown field {key!r}")
        setattr(args, attr, val)


def _spec_for(args) -> HamiltonianSpec:
    if args.family == "appendix":
        if getattr(args, "a", None) is not None:
            raise ConfigError("a not applicable to family=appendix")
        return HamiltonianSpec(family=Family.APPENDIX_ELLIPSE,
                               c=float(args.c))
    a = args.a if getattr(args, "a", None) is not None else 1.0
    return HamiltonianSpec(family=Family.NORMAL_FORM, a=float(a))


def cmd_abelian(args) -> int:
    spec = HamiltonianSpec(family=Family.NORMAL_FORM, a=float(args.a))
    ts = _parse_grid(args.t_grid, "t-grid")
    trs = abelian.triples_on_grid(spec, _annulus(args.annulus), ts,
                                  tol=args.tol, threads=args.threads)
    out = _out_path(args, "abelian.csv")
    t0 = time.time()
    rows = [(tr.t, tr.jm1, tr.j0, tr.j1,
             tr.err[0], tr.err[1], tr.err[2], int(tr.converged))
            for tr in trs]
    _write_csv(out, ["t", "j_minus1", "j0", "j1",
                     "err_minus1", "err0", "err1", "converged"], rows)
    flags = [f"row t={tr.t:g} not converged" for tr in trs if not tr.converged]
    _write_manifest(out, _config_echo(args, ("a", "annulus", "t_grid", "tol",
                                             "threads", "seed")),
                    [str(out)], time.time() - t0, flags)
    print(out)
    return 3 if flags else 0


def cmd_pf(args) -> int:
    sys_ = picard_fuchs.pf_system(float(args.a))
    fund = picard_fuchs.fundamental(float(args.a), order=args.order)
    out = _out_path(args, "pf.json")
    t0 = time.time()
    payload = {
        "a": float(args.a),
        "A1": sys_.A1.tolist(),
        "A0": sys_.A0.tolist(),
        "B": sys_.B.tolist(),
        "log_coefficient": fund.lam,
        "p_const": np.asarray(fund.p_const).tolist(),
        "p_lin": np.asarray(fund.p_lin).tolist(),
        "q": np.asarray(fund.q).tolist(),
    }
    _write_json(out, payload)
    _write_manifest(out, _config_echo(args, ("a", "order", "seed")),
                    [str(out)], time.time() - t0, [])
    print(out)
    return 0


def cmd_melnikov(args) -> int:
    flags: list[str] = []
    out = _out_path(args, "melnikov.csv")
    t0 = time.time()
    if args.family == "appendix":
        if args.a is not None:
            raise ConfigError("a not applicable to family=appendix")
        if args.alpha is not None or args.beta is not None or args.gamma:
            raise ConfigError("alpha/beta/gamma not applicable to "
                              "family=appendix; use --mu2")
        spec = HamiltonianSpec(family=Family.APPENDIX_ELLIPSE, c=float(args.c))
        if not args.h_grid:
            raise ConfigError("h-grid required for family=appendix")
        hs = _parse_grid(args.h_grid, "h-grid")
        if np.any(hs >= 0.0) or np.any(hs <= -4.0 / 3.0):
            raise ConfigError("h-grid: appendix ovals live in (-4/3, 0)")
        rows = [(float(h),
                 melnikov.appendix_first_order(spec, args.mu2, float(h),
                                               tol=args.tol))
                for h in hs]
        _write_csv(out, ["h", "value"], rows)
    else:
        if args.mu2 != 0.0:
            raise ConfigError("mu2 applies to family=appendix only")
        if args.alpha is None or args.beta is None:
            raise ConfigError("alpha and beta are required for family=normal")
        spec = _spec_for(args)
        order = 2 if args.gamma else 1
        coeffs = MelnikovCoeffs(alpha=args.alpha, beta=args.beta,
                                gamma=args.gamma, order_k=order)
        if not args.t_grid:
            raise ConfigError("t-grid required for family=normal")
        ts = _parse_grid(args.t_grid, "t-grid")
        vals, conv = melnikov.values_on_grid(spec, coeffs,
                                             _annulus(args.annulus), ts,
                                             tol=args.tol,
                                             threads=args.threads)
        rows = list(zip((float(t) for t in ts), (float(v) for v in vals)))
        _write_csv(out, ["t", "value"], rows)
        flags = [f"row t={float(t):g} not converged"
                 for t, c in zip(ts, conv) if not c]
    _write_manifest(out, _config_echo(args, ("family", "a", "c", "annulus",
                                             "alpha", "beta", "gamma", "mu2",
                                             "t_grid", "h_grid", "tol",
                                             "threads", "seed")),
                    [str(out)], time.time() - t0, flags)
    print(out)
    return 3 if flags else 0


def cmd_centroid(args) -> int:
    spec = HamiltonianSpec(family=Family.NORMAL_FORM, a=float(args.a))
    curve = centroid.sample_curve(spec, _annulus(args.annulus), n=args.n,
                                  tol=args.tol, threads=args.threads)
    out = _out_path(args, "centroid.csv")
    t0 = time.time()
    rows = list(zip((float(t) for t in curve.ts),
                    (float(x) for x in curve.xi),
                    (float(e) for e in curve.eta)))
    _write_csv(out, ["t", "xi", "eta"], rows)
    flags = [] if curve.converged else ["curve quadrature not converged"]
    _write_manifest(out, _config_echo(args, ("a", "annulus", "n", "tol",
                                             "threads", "seed")),
                    [str(out)], time.time() - t0, flags)
    print(out)
    return 3 if flags else 0


def _sim_flow(args) -> FlowSpec:
    spec = _spec_for(args)
    if args.family == "appendix":
        if args.f or args.g:
            raise ConfigError("f/g apply to family=normal only; appendix "
                              "perturbation is set by mu1, mu2, c")
        pert = PerturbationSpec(epsilon=args.eps, mu1=args.mu1, mu2=args.mu2)
        return appendix_flow(spec, pert, tol=args.tol)
    if args.mu1 != 0.0 or args.mu2 != 0.0:
        raise ConfigError("mu1/mu2 apply to family=appendix only; "
                          "use --f/--g for family=normal")
    f = _parse_coeffs(args.f, "f") if args.f else (0.0,) * 6
    g = _parse_coeffs(args.g, "g") if args.g else (0.0,) * 6
    one_form = QuadraticOneForm(f=f, g=g)
    return FlowSpec(hamiltonian=spec, epsilon=args.eps, one_form=one_form,
                    tol=args.tol)


def cmd_sim(args) -> int:
    if bool(args.census) == bool(args.traj):
        raise ConfigError("exactly one of --census or --traj is required")
    flow = _sim_flow(args)
    flags: list[str] = []
    config_fields = ("family", "a", "c", "eps", "mu1", "mu2", "f", "g",
                     "annulus", "window", "n", "traj", "start", "T",
                     "tol", "threads", "seed")
    if args.census:
        out = _out_path(args, "census.json")
        t0 = time.time()
        s_range = (_parse_pair(args.window, "window")
                   if args.window else None)
        res = census(flow, annulus=_annulus(args.annulus), s_range=s_range,
                     n=args.n, threads=args.threads)
        payload = {
            "family": args.family,
            "epsilon": args.eps,
            "grid_size": res.grid_size,
            "degenerate_continuum": res.degenerate_continuum,
            "no_return_count": res.no_return_count,
            "cycles": [{
                "section_coordinate": c.section_coordinate,
                "energy": c.energy_estimate,
                "stability": c.stability,
                "return_derivative": c.return_derivative,
            } for c in res.cycles],
        }
        if res.saddle_traces is not None:
            payload["traces"] = {"sigma1": res.saddle_traces[0],
                                 "sigma2": res.saddle_traces[1]}
        if res.shifts is not None:
            payload["shifts"] = {"b1": res.shifts[0], "b2": res.shifts[1]}
        _write_json(out, payload)
        flags = [f"cycle at s={c.section_coordinate:.6g} stability undetermined"
                 for c in res.cycles if c.stability == "undetermined"]
        _write_manifest(out, _config_echo(args, config_fields),
                        [str(out)], time.time() - t0, flags)
        print(out)
        return 3 if flags else 0

    out = _out_path(args, "traj.csv")
    t0 = time.time()
    start = _parse_pair(args.start, "start") if args.start else None
    if start is None:
        raise ConfigError("start (X,Y) is required with --traj")
    traj = integrate(flow, np.array(start), args.T)
    rows = [(float(t), float(z[0]), float(z[1]), float(flow.energy(z)))
            for t, z in zip(traj.ts, traj.states)]
    _write_csv(out, ["t", "x", "y", "H"], rows)
    if traj.status == "failed":
        flags.append("integration failed before reaching T")
    _write_manifest(out, _config_echo(args, config_fields),
                    [str(out)], time.time() - t0, flags)
    print(out)
    return 3 if flags else 0


def cmd_verify(args) -> int:
    if args.criteria:
        try:
            numbers = tuple(int(p) for p in args.criteria.split(","))
        except ValueError as exc:
            raise ConfigError(f"criteria: {exc}") from exc
        bad = [n for n in numbers if n not in acceptance.CRITERIA]
        if bad:
            raise ConfigError(f"criteria: unknown criterion {bad}")
    elif args.quick:
        numbers = acceptance.QUICK
    elif args.slow:
        numbers = acceptance.ALL
    else:
        numbers = acceptance.DEFAULT
    results = acceptance.run(numbers, threads=args.threads)
    print(acceptance.format_table(results))
    if args.out:
        payload = {
            "results": [{
                "number": r.number, "title": r.title, "passed": r.passed,
                "runtime_s": r.runtime_s, "budget_s": r.budget_s,
                "detail": r.detail,
            } for r in results],
            "version": __version__,
        }
        _write_json(Path(args.out), payload)
    return 0 if all(r.passed for r in results) else 1


def _add_common(p, tol_default: float = 1e-11) -> None:
    p.add_argument("--out", help="artifact path (default: subcommand name "
                   f"under ${OUT_DIR_ENV} or the working directory)")
    p.add_argument("--config", help="JSON file whose fields override flags")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads; 1 is the deterministic reference path")
    p.add_argument("--seed", type=int, default=None,
                   help="seed echoed into the manifest for randomized scans")
    p.add_argument("--tol", type=float, default=tol_default)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="saddleloop",
        description="Numerics for limit cycles bifurcating from two-saddle "
                    "loops of quadratic Hamiltonian systems.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("abelian", help="integral triples on a parameter grid")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--annulus", choices=("plus", "minus"), default="plus")
    p.add_argument("--t-grid", required=True, metavar="LO:HI:N")
    _add_common(p)
    p.set_defaults(fn=cmd_abelian)

    p = sub.add_parser("pf", help="ODE system and fundamental series")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--order", type=int, default=8)
    _add_common(p)
    p.set_defaults(fn=cmd_pf)

    p = sub.add_parser("melnikov", help="first-order displacement function")
    p.add_argument("--family", choices=("normal", "appendix"),
                   default="normal")
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--c", type=float, default=17.0)
    p.add_argument("--annulus", choices=("plus", "minus"), default="plus")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--mu2", type=float, default=0.0)
    p.add_argument("--t-grid", metavar="LO:HI:N")
    p.add_argument("--h-grid", metavar="LO:HI:N")
    _add_common(p)
    p.set_defaults(fn=cmd_melnikov)

    p = sub.add_parser("centroid", help="centroid curve samples")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--annulus", choices=("plus", "minus"), default="plus")
    p.add_argument("--n", type=int, default=200)
    _add_common(p)
    p.set_defaults(fn=cmd_centroid)

    p = sub.add_parser("sim", help="direct flow simulation")
    p.add_argument("--family", choices=("normal", "appendix"),
                   default="appendix")
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--c", type=float, default=17.0)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--mu1", type=float, default=0.0)
    p.add_argument("--mu2", type=float, default=0.0)
    p.add_argument("--f", help="6 comma-separated coefficients (normal family)")
    p.add_argument("--g", help="6 comma-separated coefficients (normal family)")
    p.add_argument("--annulus", choices=("plus", "minus"), default="plus")
    p.add_argument("--census", action="store_true")
    p.add_argument("--window", metavar="LO:HI",
                   help="section window for the census")
    p.add_argument("--n", type=int, default=100, help="census grid size")
    p.add_argument("--traj", action="store_true")
    p.add_argument("--start", metavar="X,Y")
    p.add_argument("--T", type=float, default=100.0)
    _add_common(p, tol_default=1e-10)
    p.set_defaults(fn=cmd_sim)

    p = sub.add_parser("verify", help="run the acceptance suite")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--quick", action="store_true",
                   help="criteria 1-7 (no flow simulation)")
    g.add_argument("--slow", action="store_true",
                   help="all criteria including the long census scan")
    g.add_argument("--criteria", help="comma-separated criterion numbers")
    _add_common(p)
    p.set_defaults(fn=cmd_verify)
    return ap


# Flags whose values routinely start with a minus sign (grids, coordinates,
# coefficient lists).  argparse refuses "--t-grid -1.9:..." because the value
# looks like an option, so merge such pairs into "--flag=value" form up front.
_DASH_VALUE_FLAGS = frozenset(
    {"--t-grid", "--h-grid", "--window", "--start", "--f", "--g",
     "--alpha", "--beta", "--gamma", "--mu1", "--mu2", "--a", "--t"}
)


def _merge_dash_values(argv: list[str]) -> list[str]:
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _DASH_VALUE_FLAGS and nxt is not None and nxt.startswith("-"):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(_merge_dash_values(list(sys.argv[1:] if argv is None else argv)))
    try:
        _apply_config_file(args)
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # hard failure: keep the message, lose the trace
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
