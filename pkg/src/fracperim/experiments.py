"""Shape families, parameter sweeps and empirical constants.

A sweep writes one CSV row per (shape, s) through a single ordered writer,
flushing after every row, plus a JSON manifest holding the canonical config,
its hash and the library version. Rows contain no timestamps, so a fixed
config reproduces the file byte for byte; wall times go to a separate
``.timing.csv`` sidecar. An interrupted sweep resumes by skipping the
(shape_id, s) pairs already on disk.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.stats import linregress

from . import __version__
from .asymmetry import asymmetry_report
from .errors import ConfigError, FracperimError, ParameterError, PreconditionError
from .geometry import Ball, Cuboid, Ellipsoid, Polytope
from .montecarlo import check_seed, default_workers
from .nonlocal_perimeter import check_s
from .sets import TwoBallSet
from .spherical import build_grid, from_radial_samples, harmonic_values

FAMILY_KINDS = ("ellipsoids", "perturbed_balls", "regular_polygons", "cuboids", "simplices", "two_ball", "balls")

COLUMNS = (
    "shape_id", "kind", "params", "convex", "s", "perimeter", "perimeter_std_error", "perimeter_method",
    "lambda0", "lambda0_std_error", "fraenkel", "deficit", "deficit_std_error", "hausdorff_d", "ratio",
    "seed", "budget", "error",
)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Member:
    shape_id: str
    params: dict
    shape: Any
    convex: bool


@dataclass(frozen=True)
class ShapeFamily:
    """A named list of shapes.

    ``params`` per kind: ellipsoids, a list of eccentricities e (semiaxes
    ``1+e, [1,] 1/(1+e)``); perturbed_balls, a list of harmonic lists
    (see :func:`fracperim.spherical.harmonic_values`) with optional
    ``resolution``; regular_polygons, side counts; cuboids, aspect ratios a
    (half extents ``a, 1[, 1]``); simplices, vertex lists (default: the
    standard simplex); two_ball, eps values with optional ``separation``;
    balls, radii.
    """

    kind: str
    params: tuple
    dim: int = 2
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ConfigError(f"unknown family kind {self.kind!r}; expected one of {FAMILY_KINDS}")
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"family dimension must be 1, 2 or 3, got {self.dim}")
        if self.kind == "regular_polygons" and self.dim != 2:
            raise ConfigError("regular polygons are planar")

    @classmethod
    def from_dict(cls, spec: dict) -> "ShapeFamily":
        extra = set(spec) - {"kind", "params", "dim", "options"}
        if extra:
            raise ConfigError(f"unknown fields in family description: {sorted(extra)}")
        if "kind" not in spec:
            raise ConfigError("family description needs 'kind'")
        params = spec.get("params")
        if params is None:
            params = [] if spec["kind"] == "simplices" else None
        if params is None:
            raise ConfigError("family description needs 'params'")
        return cls(spec["kind"], tuple(_freeze(p) for p in params), int(spec.get("dim", 2)), dict(spec.get("options", {})))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": [_thaw(p) for p in self.params], "dim": self.dim, "options": self.options}

    def members(self) -> list[Member]:
        n = self.dim
        out = []
        if self.kind == "simplices" and not self.params:
            params: tuple = (_freeze(np.vstack([np.zeros(n), np.eye(n)]).tolist()),)
        else:
            params = self.params
        for i, p in enumerate(params):
            p = _thaw(p)
            sid = f"{self.kind}-{i}"
            if self.kind == "ellipsoids":
                e = float(p)
                ax = [1 + e] + [1.0] * (n - 2) + [1 / (1 + e)] if n > 1 else [1.0]
                out.append(Member(sid, {"e": e}, Ellipsoid(np.zeros(n), ax), True))
            elif self.kind == "balls":
                out.append(Member(sid, {"radius": float(p)}, Ball(np.zeros(n), float(p)), True))
            elif self.kind == "cuboids":
                a = float(p)
                out.append(Member(sid, {"aspect": a}, Cuboid(np.zeros(n), [a] + [1.0] * (n - 1)), True))
            elif self.kind == "regular_polygons":
                out.append(Member(sid, {"sides": int(p)}, Polytope.regular_polygon(int(p)), True))
            elif self.kind == "simplices":
                V = np.asarray(p, dtype=float)
                if V.shape != (n + 1, n):
                    raise ConfigError(f"a simplex in R^{n} needs {n + 1} vertices")
                out.append(Member(sid, {"vertices": V.tolist()}, Polytope.from_vertices(V), True))
            elif self.kind == "perturbed_balls":
                res = self.options.get("resolution", 256 if n == 2 else [16, 32])
                grid = build_grid(n, res)
                ns = from_radial_samples(grid, harmonic_values(grid, p))
                out.append(Member(sid, {"harmonics": p}, ns, False))
            elif self.kind == "two_ball":
                eps = float(p)
                if eps == 0.0:
                    out.append(Member(sid, {"eps": 0.0}, Ball.unit(n), True))
                    continue
                sep = self.options.get("separation")
                sep = TwoBallSet.min_separation(eps, n) if sep is None else float(sep)
                out.append(Member(sid, {"eps": eps, "separation": sep}, TwoBallSet(eps, sep, n), False))
        return out


def _freeze(p):
    if isinstance(p, list):
        return tuple(_freeze(x) for x in p)
    return p


def _thaw(p):
    if isinstance(p, tuple):
        return [_thaw(x) for x in p]
    return p


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    family: ShapeFamily
    s_values: tuple
    budget: int = 1_000_000
    seed: int = 0
    fraenkel: bool = False

    def __post_init__(self):
        for s in self.s_values:
            check_s(s)
        check_seed(self.seed)
        if self.budget <= 0:
            raise ConfigError("budget must be positive")

    def to_dict(self) -> dict:
        return {"family": self.family.to_dict(), "s_values": [float(s) for s in self.s_values],
                "budget": int(self.budget), "seed": int(self.seed), "fraenkel": bool(self.fraenkel)}

    @classmethod
    def from_dict(cls, spec: dict) -> "SweepConfig":
        extra = set(spec) - {"family", "s_values", "budget", "seed", "fraenkel"}
        if extra:
            raise ConfigError(f"unknown fields in sweep config: {sorted(extra)}")
        try:
            return cls(ShapeFamily.from_dict(spec["family"]), tuple(float(s) for s in spec["s_values"]),
                       int(spec.get("budget", 1_000_000)), int(spec.get("seed", 0)), bool(spec.get("fraenkel", False)))
        except KeyError as exc:
            raise ConfigError(f"sweep config is missing {exc.args[0]!r}") from None

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def row_seed(seed: int, i: int, j: int) -> int:
    """Seed of the row for shape i and s index j."""
    return int(np.random.SeedSequence([seed, i, j]).generate_state(1, np.uint64)[0])


@dataclass
class SweepResult:
    rows: list[dict]
    path: Path | None = None
    manifest: dict | None = None


def _row(member: Member, s: float, budget: int, seed: int, fraenkel: bool) -> dict:
    row = {c: "" for c in COLUMNS}
    row.update(shape_id=member.shape_id, kind=type(member.shape).__name__,
               params=json.dumps(member.params, sort_keys=True), convex=member.convex, s=s, seed=seed, budget=budget)
    try:
        rep = asymmetry_report(member.shape, s, budget, seed, fraenkel=fraenkel)
    except FracperimError as exc:
        row["error"] = f"{exc.reason}: {exc}"
        return row
    row.update(perimeter=rep.perimeter_estimate.value, perimeter_std_error=rep.perimeter_estimate.std_error,
               perimeter_method=rep.perimeter_estimate.method, lambda0=rep.lambda0,
               lambda0_std_error=rep.lambda0_std_error, fraenkel=rep.fraenkel, deficit=rep.deficit,
               deficit_std_error=rep.deficit_std_error, hausdorff_d=rep.hausdorff_d, ratio=rep.ratio)
    return row


def _parse_row(raw: dict) -> dict:
    row = dict(raw)
    for k in ("s", "perimeter", "perimeter_std_error", "lambda0", "lambda0_std_error", "fraenkel", "deficit",
              "deficit_std_error", "hausdorff_d", "ratio"):
        row[k] = float(row[k]) if row[k] not in ("", None) else float("nan")
    row["convex"] = row["convex"] in (True, "True")
    row["seed"] = int(row["seed"])
    row["budget"] = int(row["budget"])
    return row


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [_parse_row(r) for r in csv.DictReader(fh)]


def run_sweep(config: SweepConfig, out: str | os.PathLike | None = None, workers: int | None = None) -> SweepResult:
    """One row per (shape, s), in family order then s order.

    Shapes are evaluated concurrently; rows are written in order through one
    writer and flushed as they complete. Per-shape failures are recorded in
    the ``error`` column instead of aborting.
    """
    members = config.family.members()
    jobs = [(i, j, m, float(s)) for i, m in enumerate(members) for j, s in enumerate(config.s_values)]
    manifest = {"config": config.to_dict(), "config_hash": config.hash(), "version": __version__,
                "columns": list(COLUMNS)}
    done: set[tuple[str, str]] = set()
    existing: list[dict] = []
    writer = fh = timing = None
    if out is not None:
        out = Path(out)
        man_path = out.with_suffix(out.suffix + ".manifest.json")
        if out.exists():
            if not man_path.exists() or json.loads(man_path.read_text()).get("config_hash") != config.hash():
                raise PreconditionError(f"{out} exists but was produced by a different config")
            existing = read_rows(out)
            done = {(r["shape_id"], repr(r["s"])) for r in existing}
        else:
            man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        fh = open(out, "a", newline="")
        writer = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        if not existing:
            writer.writeheader()
        timing = open(out.with_suffix(out.suffix + ".timing.csv"), "a")
    todo = [job for job in jobs if (job[2].shape_id, repr(job[3])) not in done]

    def work(job):
        i, j, m, s = job
        t0 = time.perf_counter()
        row = _row(m, s, config.budget, row_seed(config.seed, i, j), config.fraenkel)
        return row, time.perf_counter() - t0

    workers = default_workers() if workers is None else int(workers)
    rows = list(existing)
    try:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            for row, dt in pool.map(work, todo):
                rows.append(_parse_row({k: _fmt(v) for k, v in row.items()}))
                if writer is not None:
                    writer.writerow({k: _fmt(v) for k, v in row.items()})
                    fh.flush()
                    timing.write(f"{row['shape_id']},{row['s']},{dt:.6f}\n")
                    timing.flush()
    finally:
        if fh is not None:
            fh.close()
            timing.close()
    return SweepResult(rows, out, manifest)


# ---------------------------------------------------------------------------
# Constants and the counterexample
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantEstimate:
    C_emp: float
    slope: float
    slope_stderr: float
    rows_used: int
    excluded_nonconvex: int


def estimate_constant(rows, max_lambda0: float | None = None) -> ConstantEstimate:
    """Largest ratio ``lambda_0 / sqrt(delta_s)`` and the log-log slope of lambda_0 against delta_s.

    Only convex rows whose deficit exceeds three standard errors (and, with
    ``max_lambda0``, whose asymmetry is in the small regime) are used.
    """
    rows = [r if isinstance(r.get("s"), float) else _parse_row(r) for r in rows]
    nonconvex = [r for r in rows if not r["convex"]]
    if nonconvex:
        warnings.warn(f"excluding {len(nonconvex)} non-convex rows from the constant fit", stacklevel=2)
    use = [
        r for r in rows
        if r["convex"] and np.isfinite(r["deficit"]) and r["deficit"] > 3 * r["deficit_std_error"] and r["deficit"] > 0
        and r["lambda0"] > 0 and (max_lambda0 is None or r["lambda0"] <= max_lambda0)
    ]
    if len(use) < 5:
        raise ParameterError(f"need at least 5 usable rows, got {len(use)}")
    d = np.array([r["deficit"] for r in use])
    lam = np.array([r["lambda0"] for r in use])
    fit = linregress(np.log(d), np.log(lam))
    return ConstantEstimate(float(np.max(lam / np.sqrt(d))), float(fit.slope), float(fit.stderr), len(use), len(nonconvex))


@dataclass(frozen=True)
class CounterexampleRow:
    eps: float
    separation: float
    lambda0: float
    deficit: float
    deficit_std_error: float


@dataclass(frozen=True)
class CounterexampleCurve:
    s: float
    rows: tuple
    exponent: float
    exponent_stderr: float


def counterexample_curve(
    eps_list, s: float, budget: int = 200_000, seed: int = 0, dim: int = 2, separation: float | None = None
) -> CounterexampleCurve:
    """(eps, lambda_0, delta_s) for the two-ball sets and the fitted exponent of delta_s in eps.

    ``separation`` defaults per eps to the smallest value for which the
    reference ball misses both components; a smaller explicit value is a
    precondition error. ``eps = 0`` gives the unit ball row (excluded from the fit).
    """
    from .asymmetry import barycentric_asymmetry, s_deficit

    s = check_s(s)
    rows = []
    for k, eps in enumerate(eps_list):
        eps = float(eps)
        if eps == 0.0:
            b = Ball.unit(dim)
            dv = s_deficit(b, s)
            rows.append(CounterexampleRow(0.0, 0.0, barycentric_asymmetry(b).value, dv.value, dv.std_error))
            continue
        need = TwoBallSet.min_separation(eps, dim)
        sep = need if separation is None else float(separation)
        if sep < need:
            raise PreconditionError(
                f"separation {sep} is below {need:.6g}, the smallest for which the reference ball misses both balls"
            )
        tb = TwoBallSet(eps, sep, dim)
        dv = s_deficit(tb, s, budget, seed + k)
        rows.append(CounterexampleRow(eps, sep, barycentric_asymmetry(tb).value, dv.value, dv.std_error))
    fit_rows = [r for r in rows if r.eps > 0]
    if len(fit_rows) >= 2:
        fit = linregress(np.log([r.eps for r in fit_rows]), np.log([r.deficit for r in fit_rows]))
        slope, err = float(fit.slope), float(fit.stderr) if len(fit_rows) > 2 else 0.0
    else:
        slope, err = float("nan"), float("nan")
    return CounterexampleCurve(s, tuple(rows), slope, err)
