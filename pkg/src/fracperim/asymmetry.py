"""Barycentric and Fraenkel asymmetry and the s-isoperimetric deficit.

With ``m = |E|`` and ``B(m)`` the ball of the same volume,

* ``lambda_0(E) = |E sym-diff (bar(E) + B(m))| / |E|``,
* ``lambda(E) = min_x |E sym-diff (x + B(m))| / |E|``,
* ``delta_s(E) = (P_s(E) - P_s(B(m))) / P_s(B(m))``.

For a set star-shaped about a point c with radial function R, the symmetric
difference with ``B(c, r)`` is ``(1/n) int_S |R^n - r^n|``; this gives exact
values for convex bodies about their barycenter. Other sets fall back to
Monte Carlo membership inside the reference ball, using
``|E sym-diff B| = 2 (|E| - |E cap B|)`` when ``|B| = |E|``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .constants import unit_ball_volume
from .errors import DegenerateInputError, ParameterError, PreconditionError
from .geometry import ConvexBody, direction_grid, hausdorff_to_unit_ball, normalize
from .montecarlo import check_seed, chunk_rng, uniform_in_ball
from .nonlocal_perimeter import SPerimeterEstimate, check_s, sperimeter, sperimeter_ball
from .sets import TwoBallSet
from .spherical import NearlySphericalSet, build_grid, lambda0_ns

ASYMMETRY_STREAM = 4
FRAENKEL_STARTS = 8
DEFAULT_MC_POINTS = 1_000_000


@dataclass(frozen=True)
class AsymmetryValue:
    """An asymmetry with its statistical error (0 for exact routes) and the route used."""

    value: float
    std_error: float
    method: str


def reference_radius(set_) -> float:
    """Radius of the ball with the same volume as ``set_``."""
    n = set_.dim
    v = set_.volume()
    if not v > 0:
        raise DegenerateInputError("asymmetry needs a set of positive volume")
    return (v / unit_ball_volume(n)) ** (1.0 / n)


def _sphere_rule(n: int, count: int | None):
    """Quadrature (directions, weights) on the unit sphere of R^n."""
    if n == 1:
        return np.array([[-1.0], [1.0]]), np.ones(2)
    if n == 2:
        d = direction_grid(2, count)
        return d, np.full(d.shape[0], 2 * np.pi / d.shape[0])
    if n == 3:
        k = int(count or 256)
        g = build_grid(3, (k, 2 * k))
        return g.nodes, g.weights
    raise ParameterError(f"radial quadrature is available for n <= 3, got {n}")


def _radial_symdiff(body: ConvexBody, center: np.ndarray, r: float, dirs, w) -> float:
    """``|E sym-diff B(center, r)| / |E|`` for a convex body and an interior center."""
    n = body.dim
    R = body.ray_exit(np.broadcast_to(center, dirs.shape), dirs)
    return float(np.dot(w, np.abs(R**n - r**n))) / (n * body.volume())


def _mc_lambda(set_, center: np.ndarray, r: float, U: np.ndarray) -> tuple[float, float]:
    """``2 (1 - p)`` with ``p`` the fraction of ``center + r U`` inside the set."""
    p = float(np.mean(set_.contains(center + r * U)))
    return 2.0 * (1.0 - p), 2.0 * float(np.sqrt(p * (1.0 - p) / U.shape[0]))


def _crn_points(set_, seed: int, budget: int) -> np.ndarray:
    return uniform_in_ball(chunk_rng(seed, ASYMMETRY_STREAM, 0), budget, set_.dim)


def barycentric_asymmetry(
    set_, budget: int = DEFAULT_MC_POINTS, seed: int = 0, n_dirs: int | None = None, method: str = "auto"
) -> AsymmetryValue:
    """lambda_0 by the most exact route available for the set (``method="auto"``)
    or by Monte Carlo membership in the reference ball (``method="mc"``)."""
    seed = check_seed(seed)
    if method not in ("auto", "mc"):
        raise ParameterError(f"unknown asymmetry method {method!r}")
    if method == "mc":
        val, err = _mc_lambda(set_, set_.barycenter(), reference_radius(set_), _crn_points(set_, seed, budget))
        return AsymmetryValue(val, err, "mc")
    if isinstance(set_, TwoBallSet) and set_.separation >= TwoBallSet.min_separation(set_.eps, set_.dim):
        # the reference ball misses both components
        return AsymmetryValue(2.0, 0.0, "exact")
    if isinstance(set_, NearlySphericalSet) and set_.normalized:
        return AsymmetryValue(lambda0_ns(set_), 0.0, "radial")
    r = reference_radius(set_)
    bar = set_.barycenter()
    if isinstance(set_, ConvexBody) and set_.dim <= 3:
        dirs, w = _sphere_rule(set_.dim, n_dirs)
        return AsymmetryValue(min(2.0, _radial_symdiff(set_, bar, r, dirs, w)), 0.0, "radial")
    val, err = _mc_lambda(set_, bar, r, _crn_points(set_, seed, budget))
    return AsymmetryValue(val, err, "mc")


@dataclass(frozen=True)
class FraenkelResult:
    value: float
    std_error: float
    argmin: np.ndarray
    converged: bool
    evaluations: int
    method: str


def _fraenkel_starts(set_, rng: np.random.Generator, k: int) -> list[np.ndarray]:
    starts = [set_.barycenter()]
    starts += [c.center for c in set_.star_components()]
    starts.append(set_.bounding_ball()[0])
    extra = max(0, k - len(starts))
    if extra:
        starts += list(set_.sample_uniform(rng, extra))
    return [np.asarray(x, dtype=float) for x in starts[:k]]


def fraenkel_asymmetry(
    set_,
    budget: int = 200_000,
    seed: int = 0,
    starts: int = FRAENKEL_STARTS,
    max_iter: int = 400,
    n_dirs: int | None = None,
) -> FraenkelResult:
    """``min_x |E sym-diff (x + B(m))| / |E|`` by multistart Nelder-Mead.

    Convex bodies use the radial formula about the trial center (exact for
    interior centers; exterior centers are rejected). Other sets use common
    random numbers: one fixed sample of the unit ball is moved with the
    center, so the objective is a deterministic step function and the
    comparison between centers carries no independent noise. The returned
    value never exceeds the barycentric asymmetry computed the same way.
    """
    seed = check_seed(seed)
    n = set_.dim
    r = reference_radius(set_)
    rng = chunk_rng(seed, ASYMMETRY_STREAM, 1)
    radial = isinstance(set_, ConvexBody) and n <= 3
    if radial:
        # a coarser rule during the search, the full one for the final value
        search_dirs, search_w = _sphere_rule(n, 1024 if n == 2 else 64)
        dirs, w = _sphere_rule(n, n_dirs)

        def objective(x, d=search_dirs, ww=search_w):
            if set_.interior_margin(np.asarray(x)[None, :])[0] <= 0:
                return 4.0
            return _radial_symdiff(set_, np.asarray(x), r, d, ww)

        def final(x):
            return _radial_symdiff(set_, x, r, dirs, w), 0.0

    else:
        U = _crn_points(set_, seed, budget)

        def objective(x):
            return _mc_lambda(set_, np.asarray(x), r, U)[0]

        def final(x):
            return _mc_lambda(set_, x, r, U)

    scale = set_.bounding_ball()[1]
    best_x, best_f, evals, converged = None, np.inf, 0, True
    for x0 in _fraenkel_starts(set_, rng, starts):
        simplex = np.vstack([x0, x0 + 0.1 * r * np.eye(n)])
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"initial_simplex": simplex, "xatol": 1e-4 * scale, "fatol": 1e-12, "maxiter": max_iter},
        )
        evals += int(res.nfev)
        if res.fun < best_f:
            best_f, best_x, converged = float(res.fun), np.asarray(res.x), bool(res.success)
    value, err = final(best_x)
    bar = set_.barycenter()
    v0, e0 = final(bar)
    if v0 < value:
        value, err, best_x = v0, e0, bar
    return FraenkelResult(min(value, 2.0), err, best_x, converged, evals, "radial" if radial else "mc")


@dataclass(frozen=True)
class DeficitValue:
    value: float
    std_error: float
    perimeter: SPerimeterEstimate
    ball_reference: float


def s_deficit(set_, s: float, budget: int = 1_000_000, seed: int = 0) -> DeficitValue:
    """``(P_s(E) - P_s(B(m))) / P_s(B(m))`` with the error of the numerator propagated."""
    s = check_s(s)
    PB = sperimeter_ball(set_.dim, reference_radius(set_), s)
    est = sperimeter(set_, s, budget, seed)
    return DeficitValue((est.value - PB) / PB, est.std_error / PB, est, PB)


def hausdorff_d(set_) -> float:
    """``d(E)`` of the set normalized to volume omega_n and barycenter 0."""
    if isinstance(set_, NearlySphericalSet):
        if not set_.normalized:
            raise PreconditionError("d(E) of a radial set needs the normalized set")
        return set_.sup_u()
    if isinstance(set_, TwoBallSet):
        # volume is already omega_n; measure radii from the barycenter
        bar = set_.barycenter()
        dist = [float(np.linalg.norm(c - bar)) for c in set_.centers]
        outer = max(d + r for d, r in zip(dist, set_.radii))
        inner = max([r - d for d, r in zip(dist, set_.radii) if d < r], default=0.0)
        return max(outer - 1.0, 1.0 - inner)
    if isinstance(set_, ConvexBody):
        return hausdorff_to_unit_ball(normalize(set_).body)
    raise PreconditionError(f"d(E) is not available for {type(set_).__name__}")


@dataclass(frozen=True)
class AsymmetryReport:
    s: float
    lambda0: float
    lambda0_std_error: float
    fraenkel: float
    fraenkel_std_error: float
    hausdorff_d: float
    deficit: float
    deficit_std_error: float
    perimeter_estimate: SPerimeterEstimate
    ball_reference: float

    def __post_init__(self):
        if np.isnan(self.fraenkel):
            return
        tol = 3.0 * (self.lambda0_std_error + self.fraenkel_std_error) + 1e-9
        if not (0.0 <= self.fraenkel <= self.lambda0 + tol and self.lambda0 <= 2.0):
            raise PreconditionError(
                f"asymmetries out of order: fraenkel {self.fraenkel}, lambda0 {self.lambda0}"
            )

    @property
    def ratio(self) -> float:
        """``lambda_0 / sqrt(delta_s)``; NaN when the deficit is not positive."""
        return self.lambda0 / np.sqrt(self.deficit) if self.deficit > 0 else float("nan")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        return d


def asymmetry_report(set_, s: float, budget: int = 1_000_000, seed: int = 0, fraenkel: bool = True) -> AsymmetryReport:
    """All asymmetry quantities of one (set, s) pair."""
    s = check_s(s)
    seed = check_seed(seed)
    lam0 = barycentric_asymmetry(set_, budget, seed)
    if fraenkel:
        fr = fraenkel_asymmetry(set_, min(budget, 200_000), seed)
        fval, ferr = fr.value, fr.std_error
    else:
        fval, ferr = float("nan"), float("nan")
    dfc = s_deficit(set_, s, budget, seed)
    try:
        d = hausdorff_d(set_)
    except PreconditionError:
        d = float("nan")
    return AsymmetryReport(
        s, lam0.value, lam0.std_error, fval, ferr, d, dfc.value, dfc.std_error, dfc.perimeter, dfc.ball_reference
    )
