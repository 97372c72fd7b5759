"""Estimators of the fractional s-perimeter

    P_s(E) = int_E int_{E^c} |x - y|^(-n-s) dy dx.

Four independent routes are provided:

* :func:`sperimeter_ray_mc`: complement integral along rays,
  ``P_s = (1/s) int_E int_S sum_i (a_i^-s - b_i^-s) dtheta dx`` where
  ``[a_i, b_i)`` are the forward gaps of E along the ray from x. Points are
  stratified into a bulk and a boundary shell of every star-shaped piece.
* :func:`sperimeter_direct_mc`: the double integral sampled directly with a
  power-law radial proposal and an exact far-field tail. Kept as an oracle.
* :func:`sperimeter_line_mc`: the same integral written over lines,
  ``P_s = int_S int_{theta^perp} J(line) dz dtheta``, where ``J`` is the
  one-dimensional forward interaction of the chord pattern. Randomized
  quasi-Monte Carlo, optionally against an equal-volume control ball.
* deterministic values for intervals and balls, and for planar ellipses,
  polygons and radial sets by the boundary double integral of
  :mod:`fracperim.boundary`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .boundary import CURVE_NODES, converged_curve_sperimeter, ellipse_curve, polygon_sperimeter
from .constants import unit_ball_volume, unit_sphere_area
from .errors import NumericalError, ParameterError, PreconditionError
from .geometry import Ball, Cuboid, Ellipsoid, Polytope, diameter, slice_body
from .montecarlo import (
    DEFAULT_CHUNK,
    Moments,
    check_seed,
    chunk_rng,
    chunk_sizes,
    map_chunks,
    uniform_directions,
    uniform_in_ball,
)
from .sets import EmptySet, EvaluableSet, LineIntervals, StarComponent, TwoBallSet, ball_chords


class Method(str, Enum):
    RAY_MC = "ray_mc"
    DIRECT_MC = "direct_mc"
    LINE_MC = "line_mc"
    DECOMPOSITION = "decomposition"
    QUADRATURE = "quadrature"
    ANALYTIC = "analytic"


DETERMINISTIC = {Method.QUADRATURE.value, Method.ANALYTIC.value}


@dataclass(frozen=True)
class SPerimeterEstimate:
    value: float
    std_error: float
    method: str
    budget: int
    seed: int | None = None

    def __post_init__(self):
        if not (np.isfinite(self.value) and np.isfinite(self.std_error)):
            raise NumericalError(f"non-finite perimeter estimate {self.value} +- {self.std_error}")
        if self.std_error < 0:
            raise NumericalError("negative standard error")
        if self.method in DETERMINISTIC and self.std_error != 0:
            raise NumericalError(f"{self.method} estimates carry no statistical error")

    def scaled(self, factor: float) -> "SPerimeterEstimate":
        return SPerimeterEstimate(self.value * factor, self.std_error * abs(factor), self.method, self.budget, self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


def check_s(s: float) -> float:
    s = float(s)
    if not (0.0 < s < 1.0):
        raise ParameterError(f"s must lie in (0, 1), got {s}")
    return s


def _check_budget(n: int) -> int:
    if isinstance(n, bool) or int(n) != n or n <= 0:
        raise ParameterError(f"sample budget must be a positive integer, got {n!r}")
    return int(n)


# ---------------------------------------------------------------------------
# Deterministic values
# ---------------------------------------------------------------------------


def sperimeter_interval_exact(L: float, s: float) -> float:
    """``P_s((0, L)) = 2 L^(1-s) / (s (1-s))`` in one dimension.

    Each end point contributes ``int_0^L int_0^inf (a + b)^(-1-s) db da
    = int_0^L a^-s / s da = L^(1-s) / (s (1-s))``.
    """
    s = check_s(s)
    if not (np.isfinite(L) and L > 0):
        raise ParameterError(f"interval length must be positive, got {L}")
    return 2.0 * L ** (1.0 - s) / (s * (1.0 - s))


def _gl(m: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _ball_inner_2d(r: np.ndarray, q: np.ndarray, s: float, m: int) -> np.ndarray:
    """``q^(2s) int_0^(2 pi) rho(r, psi)^(-s) dpsi`` for the unit disc, q = sqrt(1 - r^2).

    ``rho`` is the exit distance from a point at radius r along a direction
    at angle psi to its position vector. The middle panel uses
    ``mu = cos psi = q sinh(w) / r`` which makes ``rho = q e^-w`` exactly.
    Vectorized over the radii.
    """
    r = r[:, None]
    q = q[:, None]
    logq = np.log(q)
    tot = np.zeros(r.shape[0])
    for a, b in ((0.0, np.pi / 3), (2 * np.pi / 3, np.pi)):
        p, w = _gl(m, a, b)
        rmu = r * np.cos(p)
        root = np.sqrt(q * q + rmu * rmu)
        # cancellation-free form on the forward side
        rho = q * q / (rmu + root) if a == 0.0 else root - rmu
        tot += np.sum(w * np.exp(s * (2 * logq - np.log(rho))), axis=1)
    W = np.arcsinh(0.5 * r / q)
    x, wx = np.polynomial.legendre.leggauss(m)
    ww, wt = W * x, W * wx
    mu = np.clip(q * np.sinh(ww) / r, -0.5, 0.5)
    logt = (1 + s) * logq + s * ww + np.log(np.cosh(ww)) - np.log(r)
    tot += np.sum(wt * np.exp(logt) / np.sqrt(1 - mu * mu), axis=1)
    return 2.0 * tot


def _ball_quadrature(n: int, s: float, m: int) -> float:
    if n == 1:
        # (2/s) int_{-1}^{1} (1-x)^-s dx with 1 - x = 2 v^p
        p = 2.0 / (1.0 - s)
        v, w = _gl(m, 0.0, 1.0)
        logf = (1 - s) * np.log(2.0) + np.log(p) + (p * (1 - s) - 1) * np.log(v)
        return float(2.0 / s * np.sum(w * np.exp(logf)))
    p = 4.0 / (1.0 - s)
    v, wv = _gl(m, 0.0, 1.0)
    logv = np.log(v)
    logom = p * logv
    om = np.exp(logom)
    r = 1.0 - om
    if n == 2:
        logq = 0.5 * (np.maximum(logom, -1200.0) + np.log(2 - om))
        q = np.exp(np.maximum(logq, -300.0))
        h = _ball_inner_2d(r, q, s, m)
        logw = np.log(p) + (p * (1 - s) - 1) * logv - s * np.log(2 - om)
        return float(2 * np.pi / s * np.sum(wv * r * h * np.exp(logw)))
    if n == 3:
        # int_{S^2} rho^-s = (pi / r) [((1+r)^(1-s) - w^(1-s))/(1-s) + ((1+r) w^-s - w (1+r)^-s)/(1+s)]
        # with w = 1 - r; the w^-s factor is merged with the Jacobian p v^(p-1) in log space.
        two = 2.0 - om
        jac_log = np.log(p) + (p - 1) * logv
        a = (two ** (1 - s) - np.exp((1 - s) * logom)) / (1 - s) * np.exp(jac_log)
        b = (two * np.exp(jac_log - s * logom) - om * two ** (-s) * np.exp(jac_log)) / (1 + s)
        inner_jac = np.pi / r * (a + b)
        return float(4 * np.pi / s * np.sum(wv * r * r * inner_jac))
    raise ParameterError(f"ball quadrature supports n in {{1, 2, 3}}, got {n}")


@lru_cache(maxsize=256)
def _unit_ball_cached(n: int, s: float, nodes: int) -> float:
    coarse = _ball_quadrature(n, s, nodes)
    fine = _ball_quadrature(n, s, 2 * nodes)
    if not np.isfinite(fine) or abs(fine - coarse) > 1e-6 * abs(fine):
        raise NumericalError(
            f"ball quadrature did not converge under node doubling (n={n}, s={s}, nodes={nodes}): "
            f"{coarse!r} vs {fine!r}"
        )
    return fine


def sperimeter_unit_ball(n: int, s: float, nodes: int = 96) -> float:
    """``P_s`` of the unit ball in R^n, n in {1, 2, 3}, by Gauss-Legendre quadrature.

    The ray reduction is integrated in (radius, angle) with a graded radial
    substitution ``1 - r = v^(4/(1-s))`` that flattens the boundary
    singularity. The value at ``2 * nodes`` is returned after checking that
    it agrees with the value at ``nodes`` to 1e-6 relative.
    """
    s = check_s(s)
    if n not in (1, 2, 3):
        raise ParameterError(f"unit-ball quadrature supports n in {{1, 2, 3}}, got {n}")
    if nodes < 8:
        raise ParameterError("at least 8 quadrature nodes are required")
    return _unit_ball_cached(int(n), s, int(nodes))


def sperimeter_ball(n: int, radius: float, s: float) -> float:
    """``P_s(B_radius) = radius^(n-s) P_s(B)``."""
    return radius ** (n - s) * sperimeter_unit_ball(n, s)


def equal_volume_ball_perimeter(n: int, volume: float, s: float) -> float:
    """``P_s`` of the ball with the given volume (the reference in the deficit)."""
    r = (volume / unit_ball_volume(n)) ** (1.0 / n)
    return sperimeter_ball(n, r, s)


# ---------------------------------------------------------------------------
# Point sampling shared by the two pointwise estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Strata:
    """Boundary-shell stratification of every star-shaped piece.

    A point is written ``c + tau R(phi) phi`` with R the radial function of
    the piece about its centre c. The shell is ``tau in [1 - width, 1]`` and
    receives ``fraction`` of the samples; inside it tau is drawn with density
    proportional to ``(1 - tau)^-exponent`` (``None`` means ``exponent = s``)
    and reweighted, which keeps the estimator variance finite for every s.
    """

    enabled: bool = True
    width: float = 0.1
    fraction: float = 0.5
    exponent: float | None = None

    def __post_init__(self):
        if not 0 < self.width < 1:
            raise ParameterError("shell width must lie in (0, 1)")
        if not 0 < self.fraction < 1:
            raise ParameterError("shell fraction must lie in (0, 1)")
        if self.exponent is not None and not 0 <= self.exponent < 1:
            raise ParameterError("shell exponent must lie in [0, 1)")


NO_STRATA = Strata(enabled=False)


@dataclass(frozen=True)
class _Stratum:
    comp: int
    lo: float  # tau range
    hi: float
    shell: bool
    mass: float  # volume of this stratum
    share: float  # fraction of the sample budget


def _strata_plan(comps: list[StarComponent], n: int, cfg: Strata) -> list[_Stratum]:
    total = sum(c.volume for c in comps)
    plan = []
    for k, c in enumerate(comps):
        share = c.volume / total
        if not cfg.enabled:
            plan.append(_Stratum(k, 0.0, 1.0, False, c.volume, share))
            continue
        inner = (1 - cfg.width) ** n
        plan.append(_Stratum(k, 0.0, 1 - cfg.width, False, c.volume * inner, share * (1 - cfg.fraction)))
        plan.append(_Stratum(k, 1 - cfg.width, 1.0, True, c.volume * (1 - inner), share * cfg.fraction))
    return plan


def _allocate(total: int, shares: list[float]) -> list[int]:
    """Largest-remainder split of ``total`` proportional to ``shares`` (deterministic)."""
    raw = np.asarray(shares) * total
    base = np.floor(raw).astype(int)
    rest = total - base.sum()
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:rest]] += 1
    return base.tolist()


def _cone_directions(comp: StarComponent, rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """Directions distributed like the direction of a uniform point of the piece."""
    y = comp.sample(rng, m) - comp.center
    r = np.linalg.norm(y, axis=1, keepdims=True)
    bad = r[:, 0] == 0
    if bad.any():
        y[bad] = uniform_directions(rng, int(bad.sum()), n)
        r[bad] = 1.0
    return y / r


def _draw_points(st: _Stratum, comp: StarComponent, rng, m: int, n: int, b: float):
    """Points of one stratum, their likelihood weights (mean one) and a radius
    ``(1 - tau) * inradius`` around each point that is certainly inside."""
    phi = _cone_directions(comp, rng, m, n)
    R = comp.radial(phi)
    u = rng.random(m)
    if st.shell:
        h = st.hi - st.lo
        gap = h * u ** (1.0 / (1.0 - b))
        tau = 1.0 - gap
        w = n * tau ** (n - 1) * gap**b * h ** (1 - b) / ((1 - b) * (1 - st.lo**n))
    else:
        gap = 1.0 - st.hi * u ** (1.0 / n)
        tau = 1.0 - gap
        w = np.ones(m)
    return comp.center + (tau * R)[:, None] * phi, w, gap * comp.inradius


def forward_gap_sum(iv: LineIntervals, s: float) -> np.ndarray:
    """``sum_i (a_i^-s - b_i^-s)`` over the complement gaps ``[a_i, b_i)`` at t > 0.

    The base point of each line must lie inside the set (t = 0 inside an
    interval). The unbounded last gap contributes ``a^-s``.
    """
    S, E = iv.starts, iv.ends
    fwd = E > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        te = np.where(fwd, np.abs(E) ** -s, 0.0)
        nxt = np.concatenate([S[:, 1:], np.full((S.shape[0], 1), np.nan)], axis=1)
        tn = np.where(fwd & ~np.isnan(nxt), np.abs(nxt) ** -s, 0.0)
    return np.sum(te - tn, axis=1)


def _pointwise_estimate(
    set_: EvaluableSet,
    s: float,
    n_samples: int,
    seed: int,
    strata: Strata,
    stream: int,
    integrand,
    workers: int | None,
) -> tuple[float, float]:
    n = set_.dim
    comps = set_.star_components()
    plan = _strata_plan(comps, n, strata)
    b = s if strata.exponent is None else strata.exponent
    sizes = chunk_sizes(n_samples)
    # every stratum gets at least two samples so its variance is defined
    shares = [p.share for p in plan]

    def run(ci: int) -> list[Moments]:
        rng = chunk_rng(seed, stream, ci)
        alloc = [max(2, a) for a in _allocate(sizes[ci], shares)]
        out = []
        for st, m in zip(plan, alloc):
            x, w, safe = _draw_points(st, comps[st.comp], rng, m, n, b)
            out.append(Moments.of(w * integrand(x, safe, rng)))
        return out

    parts = map_chunks(run, len(sizes), workers)
    value = 0.0
    var = 0.0
    for k, st in enumerate(plan):
        mom = Moments.combine([p[k] for p in parts])
        value += st.mass * mom.mean
        var += st.mass**2 * mom.sem**2
    return value, float(np.sqrt(var))


def _require_nonempty(set_) -> bool:
    return isinstance(set_, EmptySet) or set_.volume() == 0


def sperimeter_ray_mc(
    set_: EvaluableSet,
    s: float,
    n_samples: int = 1_000_000,
    seed: int = 0,
    strata: Strata = Strata(),
    workers: int | None = None,
) -> SPerimeterEstimate:
    """Ray-reduction Monte Carlo estimate; one (point, direction) pair per sample."""
    s = check_s(s)
    n_samples = _check_budget(n_samples)
    seed = check_seed(seed)
    if _require_nonempty(set_):
        return SPerimeterEstimate(0.0, 0.0, Method.RAY_MC.value, n_samples, seed)
    n = set_.dim
    area = unit_sphere_area(n)

    def f(x, safe, rng):
        theta = uniform_directions(rng, x.shape[0], n)
        return area / s * forward_gap_sum(set_.line_intervals(x, theta), s)

    value, err = _pointwise_estimate(set_, s, n_samples, seed, strata, 0, f, workers)
    return SPerimeterEstimate(value, err, Method.RAY_MC.value, n_samples, seed)


def sperimeter_direct_mc(
    set_: EvaluableSet,
    s: float,
    n_samples: int = 1_000_000,
    seed: int = 0,
    far_factor: float = 4.0,
    workers: int | None = None,
) -> SPerimeterEstimate:
    """Direct double-integral estimate, independent of the ray reduction.

    For each x (boundary-stratified as in the ray estimator, with shell
    exponent ``(1+s)/2``) a partner ``y = x + r theta`` is drawn with theta
    uniform and ``r ~ r^-a`` on ``(0, R_far]``, ``a = (3+s)/4``; the
    complement indicator of y is weighted by ``r^(-1-s) / q(r)``. These
    exponents keep the fourth moment finite, so the reported error is
    itself reliable. Beyond ``R_far`` (``far_factor`` times the bounding
    radius, at least twice it) every y is outside the set and the tail
    ``|S| R_far^-s / s`` is added exactly.
    """
    s = check_s(s)
    n_samples = _check_budget(n_samples)
    seed = check_seed(seed)
    if _require_nonempty(set_):
        return SPerimeterEstimate(0.0, 0.0, Method.DIRECT_MC.value, n_samples, seed)
    if far_factor < 2:
        raise ParameterError("far_factor must be at least 2")
    n = set_.dim
    area = unit_sphere_area(n)
    _, Rbb = set_.bounding_ball()
    Rf = far_factor * Rbb
    a = 0.25 * (3 + s)
    tail = area * Rf**-s / s

    def f(x, safe, rng):
        m = x.shape[0]
        theta = uniform_directions(rng, m, n)
        r = Rf * rng.random(m) ** (1.0 / (1.0 - a))
        # partners closer than the certified inner radius are inside; this
        # also shields points that rounding has pushed onto the boundary
        out = (r > safe) & ~set_.contains(x + r[:, None] * theta)
        q = (1 - a) * r**-a * Rf ** (a - 1)
        return area * np.where(out, r ** (-1 - s) / q, 0.0) + tail

    value, err = _pointwise_estimate(set_, s, n_samples, seed, Strata(exponent=0.5 * (1 + s)), 1, f, workers)
    return SPerimeterEstimate(value, err, Method.DIRECT_MC.value, n_samples, seed)


# ---------------------------------------------------------------------------
# Line (chord) estimator
# ---------------------------------------------------------------------------


def chord_functional(iv: LineIntervals, s: float) -> np.ndarray:
    """Forward interaction ``int_A int_{A^c, t > x} (t - x)^(-1-s)`` of each chord pattern A.

    For a single chord of length l this is ``l^(1-s) / (s (1-s))``.
    """
    S, E = iv.starts, iv.ends
    K = S.shape[1]
    F = lambda u: np.where(np.isnan(u), 0.0, np.abs(np.nan_to_num(u, nan=0.0)) ** (1 - s))
    total = np.zeros(S.shape[0])
    for i in range(K):
        ai, bi = S[:, i], E[:, i]
        for j in range(i, K):
            bj = E[:, j]
            part = F(bj - ai) - F(bj - bi)
            if j + 1 < K:
                an = S[:, j + 1]
                part = part - F(an - ai) + F(an - bi)
            total += np.where(np.isnan(ai) | np.isnan(bj), 0.0, part)
    return total / (s * (1 - s))


def _orthonormal_complement(theta: np.ndarray) -> np.ndarray:
    """Two unit vectors spanning theta^perp for each row of a (m, 3) array."""
    x, y, z = theta.T
    sign = np.where(z >= 0, 1.0, -1.0)
    a = -1.0 / (sign + z)
    b = x * y * a
    e1 = np.column_stack([1 + sign * x * x * a, sign * b, -sign * x])
    e2 = np.column_stack([b, sign + y * y * a, -y])
    return np.stack([e1, e2], axis=1)


def _lines_from_unit(u: np.ndarray, n: int, center: np.ndarray, W: float):
    if n == 2:
        ang = 2 * np.pi * u[:, 0]
        d = np.column_stack([np.cos(ang), np.sin(ang)])
        nrm = np.column_stack([-d[:, 1], d[:, 0]])
        p = center + (W * (2 * u[:, 1] - 1))[:, None] * nrm
        return p, d
    z = 1 - 2 * u[:, 0]
    az = 2 * np.pi * u[:, 1]
    rr = np.sqrt(np.maximum(0.0, 1 - z * z))
    d = np.column_stack([rr * np.cos(az), rr * np.sin(az), z])
    basis = _orthonormal_complement(d)
    rad = W * np.sqrt(u[:, 2])
    ph = 2 * np.pi * u[:, 3]
    off = (rad * np.cos(ph))[:, None] * basis[:, 0] + (rad * np.sin(ph))[:, None] * basis[:, 1]
    return center + off, d


def _line_chunking(n_lines: int, chunk: int | None) -> tuple[int, int]:
    if chunk is None:
        target = max(1, n_lines // 8)
        chunk = min(DEFAULT_CHUNK, 1 << max(4, int(np.floor(np.log2(target)))))
    if chunk & (chunk - 1):
        raise ParameterError("line chunk size must be a power of two")
    n_chunks = max(2, -(-n_lines // chunk))
    return chunk, n_chunks


def sperimeter_line_mc(
    set_: EvaluableSet,
    s: float,
    n_lines: int = 1_000_000,
    seed: int = 0,
    control: bool = True,
    chunk: int | None = None,
    workers: int | None = None,
) -> SPerimeterEstimate:
    """Randomized quasi-Monte Carlo over lines.

    Lines are parametrized by a direction on the sphere and an offset in a
    disc of ``theta^perp`` covering the set. Each chunk is an independently
    scrambled Sobol net; the standard error is the spread of chunk means. With
    ``control`` the same lines are evaluated on the equal-volume ball at the
    barycenter and the exact ball value is added back, so only the (small)
    difference is estimated.
    """
    return sperimeter_line_mc_multi(set_, [s], n_lines, seed, control, chunk, workers)[0]


def sperimeter_line_mc_multi(
    set_: EvaluableSet,
    s_values,
    n_lines: int = 1_000_000,
    seed: int = 0,
    control: bool = True,
    chunk: int | None = None,
    workers: int | None = None,
) -> list[SPerimeterEstimate]:
    """:func:`sperimeter_line_mc` for several s on the same lines.

    Chord patterns are computed once per chunk; each s reuses them, so the
    estimates for different s share their random lines.
    """
    s_list = [check_s(s) for s in s_values]
    if not s_list:
        raise ParameterError("no s values given")
    n_lines = _check_budget(n_lines)
    seed = check_seed(seed)
    if _require_nonempty(set_):
        return [SPerimeterEstimate(0.0, 0.0, Method.LINE_MC.value, n_lines, seed) for _ in s_list]
    n = set_.dim
    if n == 1:
        iv = set_.line_intervals(np.zeros((1, 1)), np.ones((1, 1)))
        return [
            SPerimeterEstimate(float(2 * chord_functional(iv, s)[0]), 0.0, Method.QUADRATURE.value, 2)
            for s in s_list
        ]
    if n not in (2, 3):
        raise ParameterError(f"line estimator supports n in {{1, 2, 3}}, got {n}")
    c, W = set_.bounding_ball()
    refs = [0.0] * len(s_list)
    if control:
        bar = set_.barycenter()
        rm = (set_.volume() / unit_ball_volume(n)) ** (1.0 / n)
        W = max(W, float(np.linalg.norm(bar - c)) + rm)
        refs = [sperimeter_ball(n, rm, s) for s in s_list]
    measure = unit_sphere_area(n) * unit_ball_volume(n - 1) * W ** (n - 1)
    chunk, n_chunks = _line_chunking(n_lines, chunk)
    dims = 2 * (n - 1)
    m_exp = int(np.log2(chunk))

    def run(ci: int) -> list[float]:
        rng = chunk_rng(seed, 2, ci)
        u = qmc.Sobol(dims, scramble=True, seed=rng).random_base2(m_exp)
        p, d = _lines_from_unit(u, n, c, W)
        iv = set_.line_intervals(p, d)
        ivb = LineIntervals.single(*ball_chords(bar, rm, p, d)) if control else None
        out = []
        for s in s_list:
            J = chord_functional(iv, s)
            if control:
                J = J - chord_functional(ivb, s)
            out.append(float(np.mean(J)))
        return out

    means = np.array(map_chunks(run, n_chunks, workers))
    result = []
    for k, s in enumerate(s_list):
        mom = Moments.of(means[:, k])
        result.append(
            SPerimeterEstimate(refs[k] + measure * mom.mean, measure * mom.sem, Method.LINE_MC.value, chunk * n_chunks, seed)
        )
    return result


# ---------------------------------------------------------------------------
# Two-ball configuration
# ---------------------------------------------------------------------------


def sperimeter_two_ball(tb: TwoBallSet, s: float, n_samples: int = 200_000, seed: int = 0) -> SPerimeterEstimate:
    """``P_s(B1) + P_s(B2) - 2 I(B1, B2)`` for the disjoint two-ball set.

    Both ball values are deterministic; only the interaction
    ``I = int_B1 int_B2 |x - y|^(-n-s)`` is sampled (uniform pairs).
    """
    s = check_s(s)
    n_samples = _check_budget(n_samples)
    seed = check_seed(seed)
    n = tb.dim
    base = sperimeter_ball(n, tb.radii[0], s) + sperimeter_ball(n, tb.radii[1], s)
    v1, v2 = tb.component_volumes()
    sizes = chunk_sizes(n_samples)

    def run(ci: int) -> Moments:
        rng = chunk_rng(seed, 3, ci)
        m = sizes[ci]
        x = tb.centers[0] + tb.radii[0] * uniform_in_ball(rng, m, n)
        y = tb.centers[1] + tb.radii[1] * uniform_in_ball(rng, m, n)
        return Moments.of(np.linalg.norm(x - y, axis=1) ** (-n - s))

    mom = Moments.combine(map_chunks(run, len(sizes)))
    inter = v1 * v2 * mom.mean
    return SPerimeterEstimate(base - 2 * inter, 2 * v1 * v2 * mom.sem, Method.DECOMPOSITION.value, n_samples, seed)


def _ccw(V: np.ndarray) -> np.ndarray:
    c = V.mean(axis=0)
    return V[np.argsort(np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]))]


def has_boundary_quadrature(set_) -> bool:
    if getattr(set_, "dim", 0) != 2:
        return False
    return isinstance(set_, (Ball, Ellipsoid, Cuboid, Polytope)) or hasattr(set_, "boundary_curve")


def sperimeter_boundary_quadrature(set_, s: float, nodes: int = CURVE_NODES) -> SPerimeterEstimate:
    """Deterministic P_s of a planar ball, ellipse, polygon or radial set.

    Smooth boundaries are refined by node doubling until two successive values
    agree to 1e-10 relative; the reported budget is the final node count
    (the edge count for polygons).
    """
    s = check_s(s)
    if not has_boundary_quadrature(set_):
        raise PreconditionError(f"no boundary quadrature for {type(set_).__name__} in dimension {getattr(set_, 'dim', '?')}")
    if isinstance(set_, (Cuboid, Polytope)):
        V = set_.to_polytope().vertices if isinstance(set_, Cuboid) else set_.vertices
        return SPerimeterEstimate(polygon_sperimeter(_ccw(V), s), 0.0, Method.QUADRATURE.value, int(V.shape[0]))
    if isinstance(set_, Ball):
        curve = ellipse_curve(set_.radius, set_.radius)
    elif isinstance(set_, Ellipsoid):
        curve = ellipse_curve(*set_.semiaxes)
    else:
        curve = set_.boundary_curve()
    value, used = converged_curve_sperimeter(curve, s, nodes)
    return SPerimeterEstimate(value, 0.0, Method.QUADRATURE.value, used)


def sperimeter(set_, s: float, budget: int = 1_000_000, seed: int = 0) -> SPerimeterEstimate:
    """Best available estimate: deterministic for intervals, balls and planar
    sets with a boundary quadrature, lines otherwise."""
    s = check_s(s)
    if isinstance(set_, EmptySet):
        return SPerimeterEstimate(0.0, 0.0, Method.ANALYTIC.value, 0)
    if isinstance(set_, Ball) and set_.dim <= 3:
        return SPerimeterEstimate(sperimeter_ball(set_.dim, set_.radius, s), 0.0, Method.QUADRATURE.value, 192)
    if isinstance(set_, Cuboid) and set_.dim == 1:
        L = 2 * float(set_.half_extents[0])
        return SPerimeterEstimate(sperimeter_interval_exact(L, s), 0.0, Method.ANALYTIC.value, 0)
    if has_boundary_quadrature(set_):
        return sperimeter_boundary_quadrature(set_, s)
    if isinstance(set_, TwoBallSet):
        return sperimeter_two_ball(set_, s, min(budget, 200_000), seed)
    return sperimeter_line_mc(set_, s, budget, seed)


ESTIMATORS = ("auto", "ray_mc", "direct_mc", "line_mc", "quadrature")


def estimate_sperimeter(set_, s: float, method: str = "auto", budget: int = 1_000_000, seed: int = 0) -> SPerimeterEstimate:
    """P_s by a named route; ``auto`` is :func:`sperimeter`."""
    if method == "auto":
        return sperimeter(set_, s, budget, seed)
    if method == "ray_mc":
        return sperimeter_ray_mc(set_, s, budget, seed)
    if method == "direct_mc":
        return sperimeter_direct_mc(set_, s, budget, seed)
    if method == "line_mc":
        return sperimeter_line_mc(set_, s, budget, seed)
    if method == "quadrature":
        return sperimeter_boundary_quadrature(set_, s)
    raise ParameterError(f"unknown estimator {method!r}; expected one of {ESTIMATORS}")


# ---------------------------------------------------------------------------
# Slicewise functional
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SliceBound:
    """``D(E) int_0^1 P_s^(n-1)(E_t) dt`` by the trapezoidal rule, with its MC error."""

    value: float
    std_error: float
    diameter: float
    t: tuple[float, ...]
    slice_perimeters: tuple[float, ...]


def slicewise_lower_bound(body, s: float, n_t: int = 33, per_slice_budget: int = 100_000, seed: int = 0) -> SliceBound:
    """Integrate the (n-1)-dimensional s-perimeter of slices along a diameter.

    The slice at t is orthogonal to ``x1 - x0`` through ``(1-t) x0 + t x1``
    where ``(x0, x1)`` realizes the diameter. Slices of dimension at most two
    are evaluated deterministically; others use the line estimator.
    """
    s = check_s(s)
    if body.dim < 2:
        raise ParameterError("slicewise bound needs dimension >= 2")
    if not getattr(body, "convex", False):
        raise PreconditionError("slicewise bound is defined for convex bodies")
    if n_t < 2:
        raise ParameterError("need at least two slice positions")
    seed = check_seed(seed)
    dm = diameter(body)
    ts = np.linspace(0.0, 1.0, n_t)
    vals, errs = [], []
    for k, t in enumerate(ts):
        sl = slice_body(body, dm.x0, dm.x1, float(t))
        if isinstance(sl, EmptySet):
            vals.append(0.0)
            errs.append(0.0)
        elif sl.dim == 1 or isinstance(sl, Ball) or has_boundary_quadrature(sl):
            est = sperimeter(sl, s)
            vals.append(est.value)
            errs.append(0.0)
        else:
            est = sperimeter_line_mc(sl, s, per_slice_budget, seed + k)
            vals.append(est.value)
            errs.append(est.std_error)
    w = np.full(n_t, 1.0 / (n_t - 1))
    w[[0, -1]] *= 0.5
    value = dm.value * float(np.dot(w, vals))
    err = dm.value * float(np.sqrt(np.dot(w**2, np.square(errs))))
    return SliceBound(value, err, dm.value, tuple(ts.tolist()), tuple(vals))
