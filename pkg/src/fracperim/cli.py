"""Command-line front end: ``fracperim compute|sweep|verify|report``.

Exit status: 0 success, 1 a check failed (expected failures excluded),
2 usage or configuration error, 3 numerical failure. Errors are printed to
stderr as one JSON object with a machine-readable ``reason``.

Every flag may also be given in a JSON file passed with ``--config``; keys
are the flag names with dashes replaced by underscores, and flags given on
the command line override the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymmetry import asymmetry_report
from .errors import ConfigError, FracperimError, NumericalError
from .experiments import ShapeFamily, SweepConfig, estimate_constant, read_rows, run_sweep
from .geometry import Ball, Cuboid, Ellipsoid, Polytope, body_from_dict
from .sets import TwoBallSet
from .spherical import build_grid, harmonic_values, from_radial_samples, radial_set_from_dict
from .verify import (
    MAIN_THEOREM_BOUND,
    SIGMA_BAND,
    check_fuglede_family,
    check_limits,
    check_main_theorem,
    check_scale_invariance,
    check_slicing_steps,
    check_small_deficit_qualitative,
    check_step3_family,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
SUITES = ("convex", "counterexample", "fuglede", "all")

DEFAULTS = {
    "s": [0.5],
    "budget": 1_000_000,
    "seed": 0,
    "workers": None,
    "out": None,
    "shape": None,
    "family": None,
    "suite": "convex",
    "results": None,
    "verdicts": None,
    "c_bound": MAIN_THEOREM_BOUND,
    "fraenkel": False,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fracperim", description="Fractional perimeters, asymmetries and stability checks.")
    p.add_argument("--version", action="version", version=f"fracperim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with defaults for any flag")
        sp.add_argument("--s", type=float, nargs="+", default=argparse.SUPPRESS, help="values of s in (0, 1)")
        sp.add_argument("--budget", type=int, default=argparse.SUPPRESS, help="Monte Carlo sample or line budget")
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--out", default=argparse.SUPPRESS, help="output path")

    c = sub.add_parser("compute", help="asymmetries, deficit and P_s of one shape")
    common(c)
    c.add_argument("--shape", default=argparse.SUPPRESS, help="shape description (JSON file)")
    c.add_argument("--fraenkel", action="store_true", default=argparse.SUPPRESS)

    w = sub.add_parser("sweep", help="run a family over a grid of s")
    common(w)
    w.add_argument("--family", default=argparse.SUPPRESS, help="family description (JSON file)")
    w.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    w.add_argument("--fraenkel", action="store_true", default=argparse.SUPPRESS)

    v = sub.add_parser("verify", help="run a suite of checks")
    common(v)
    v.add_argument("--suite", choices=SUITES, default=argparse.SUPPRESS)
    v.add_argument("--c-bound", dest="c_bound", type=float, default=argparse.SUPPRESS,
                   help="working constant of the main-inequality check")

    r = sub.add_parser("report", help="summarize existing result files")
    r.add_argument("--config", help="JSON file with defaults for any flag")
    r.add_argument("--results", nargs="+", default=argparse.SUPPRESS, help="sweep CSV files")
    r.add_argument("--verdicts", nargs="+", default=argparse.SUPPRESS, help="verify report JSON files")
    r.add_argument("--out", default=argparse.SUPPRESS)
    return p


def _options(ns: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if getattr(ns, "config", None):
        try:
            file_opts = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from None
        unknown = set(file_opts) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        opts.update(file_opts)
    opts.update({k: v for k, v in vars(ns).items() if k not in ("config", "command")})
    if isinstance(opts["s"], (int, float)):
        opts["s"] = [opts["s"]]
    return opts


def _load_json(path) -> dict:
    if path is None:
        raise ConfigError("missing input file")
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def shape_from_dict(spec: dict):
    """Convex body, radial set (has ``grid``) or ``{"kind": "two_ball", "eps", "separation", "dim"}``."""
    if not isinstance(spec, dict):
        raise ConfigError("shape description must be a JSON object")
    if "grid" in spec:
        return radial_set_from_dict(spec)
    if spec.get("kind") == "two_ball":
        extra = set(spec) - {"kind", "eps", "separation", "dim"}
        if extra:
            raise ConfigError(f"unknown fields for two_ball: {sorted(extra)}")
        dim = int(spec.get("dim", 2))
        eps = float(spec["eps"])
        sep = spec.get("separation")
        return TwoBallSet(eps, TwoBallSet.min_separation(eps, dim) if sep is None else float(sep), dim)
    return body_from_dict(spec)


def _clean(x):
    """JSON-safe copy with numpy scalars and arrays converted and NaN as null."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _emit(obj, out) -> None:
    text = json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if out:
        Path(out).write_text(text)


def _cmd_compute(o) -> int:
    shape = shape_from_dict(_load_json(o["shape"]))
    reports = [asymmetry_report(shape, s, o["budget"], o["seed"], fraenkel=bool(o["fraenkel"])).to_dict()
               for s in o["s"]]
    _emit({"version": __version__, "options": {k: o[k] for k in ("shape", "s", "budget", "seed", "fraenkel")},
           "reports": reports}, o["out"])
    return EXIT_OK


def _cmd_sweep(o) -> int:
    fam = ShapeFamily.from_dict(_load_json(o["family"]))
    cfg = SweepConfig(fam, tuple(o["s"]), o["budget"], o["seed"], bool(o["fraenkel"]))
    if not o["out"]:
        raise ConfigError("sweep needs --out")
    res = run_sweep(cfg, o["out"], o["workers"])
    failed = sum(1 for r in res.rows if r["error"])
    _emit({"rows": len(res.rows), "failed_rows": failed, "out": str(res.path), "config_hash": cfg.hash()}, None)
    return EXIT_OK


def _convex_suite(s, budget, seed, c_bound):
    out = []
    tri = Polytope.from_vertices([[0.0, 0.0], [2.0, 0.0], [1.0, 0.5]])
    square = Cuboid(np.zeros(2), [1.0, 1.0])
    family = [Ellipsoid(np.zeros(2), [1 + e, 1 / (1 + e)]) for e in (0.1, 0.3, 0.5)]
    family += [Cuboid(np.zeros(2), [a, 1.0]) for a in (1.0, 2.0)]
    family += [Polytope.regular_polygon(3), Polytope.from_vertices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])]
    out.append(check_scale_invariance(Cuboid.interval(0.0, 1.0), s))
    out.append(check_scale_invariance(Ball.unit(2), s, 2.0, budget, seed, method="ray_mc"))
    for body in (Ball.unit(2), square, tri):
        out.extend(check_slicing_steps(body, s, budget=budget, seed=seed))
    out.append(check_step3_family(family, s, budget, seed))
    for body in (Cuboid.interval(0.0, 1.0), Ball.unit(2)):
        out.extend(check_limits(body, budget=budget, seed=seed))
    for body in [Ball.unit(2)] + family:
        out.append(check_main_theorem(body, s, budget, seed, c_bound))
    ells = [Ellipsoid(np.zeros(2), [1 + e, 1 / (1 + e)]) for e in (0.4, 0.2, 0.1, 0.05)]
    out.append(check_small_deficit_qualitative(ells, s, budget, seed))
    return out


def _counterexample_suite(s, budget, seed, c_bound):
    return [
        check_main_theorem(TwoBallSet(eps, TwoBallSet.min_separation(eps)), s, min(budget, 200_000), seed, c_bound)
        for eps in (0.05, 0.02)
    ]


def _fuglede_suite(s, budget, seed, c_bound):
    grid = build_grid(2, 256)
    fam = [from_radial_samples(grid, harmonic_values(grid, [(2, e)])) for e in (0.01, 0.02, 0.03)]
    return [check_fuglede_family(fam, s, min(budget, 262_144), seed)]


def _cmd_verify(o) -> int:
    suites = {"convex": _convex_suite, "counterexample": _counterexample_suite, "fuglede": _fuglede_suite}
    names = list(suites) if o["suite"] == "all" else [o["suite"]]
    verdicts = []
    for s in o["s"]:
        for name in names:
            for v in suites[name](float(s), o["budget"], o["seed"], o["c_bound"]):
                d = v.to_dict()
                d["suite"] = name
                verdicts.append(d)
    bad = [v for v in verdicts if not v["as_expected"]]
    _emit({"version": __version__, "sigma_band": SIGMA_BAND,
           "options": {k: o[k] for k in ("suite", "s", "budget", "seed", "c_bound")},
           "all_as_expected": not bad, "verdicts": verdicts}, o["out"])
    return EXIT_CHECK if bad else EXIT_OK


def _cmd_report(o) -> int:
    summary: dict = {"version": __version__}
    if o["results"]:
        rows = [r for path in o["results"] for r in read_rows(path)]
        summary["rows"] = len(rows)
        try:
            est = estimate_constant(rows)
            summary["constant"] = {"C_emp": est.C_emp, "slope": est.slope, "slope_stderr": est.slope_stderr,
                                   "rows_used": est.rows_used, "excluded_nonconvex": est.excluded_nonconvex}
        except FracperimError as exc:
            summary["constant"] = {"error": exc.reason, "message": str(exc)}
    if o["verdicts"]:
        kappas, counts = [], {"passed": 0, "failed": 0, "expected_failures": 0}
        for path in o["verdicts"]:
            for v in _load_json(path).get("verdicts", []):
                counts["passed" if v["passed"] else "failed"] += 1
                counts["expected_failures"] += int(v.get("expected_failure", False))
                if v["name"] == "limit_s_to_1":
                    kappas.append(v["details"]["kappa"])
        summary["verdicts"] = counts
        summary["kappa"] = kappas
    if not o["results"] and not o["verdicts"]:
        raise ConfigError("report needs --results and/or --verdicts")
    _emit(summary, o["out"])
    return EXIT_OK


def run_cli(argv=None) -> int:
    try:
        ns = _parser().parse_args(argv)
        o = _options(ns)
        handler = {"compute": _cmd_compute, "sweep": _cmd_sweep, "verify": _cmd_verify, "report": _cmd_report}
        return handler[ns.command](o)
    except NumericalError as exc:
        _fail(exc.reason, exc)
        return EXIT_NUMERICAL
    except FracperimError as exc:
        _fail(exc.reason, exc)
        return EXIT_USAGE
    except (KeyError, TypeError, ValueError) as exc:
        _fail("config", exc)
        return EXIT_USAGE


def _fail(reason: str, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": reason, "message": str(exc)}) + "\n")


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
