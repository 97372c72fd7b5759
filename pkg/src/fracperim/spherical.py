"""Nearly spherical sets ``{r x : x in S^(n-1), 0 <= r <= 1 + u(x)}`` in n = 2, 3.

``u`` is stored by its values on a sphere quadrature grid together with a
band-limited expansion (Fourier modes on the circle, real spherical
harmonics on S^2) that makes it evaluable at arbitrary directions. The
expansion interpolates the node values exactly, so grid quadratures and
off-grid evaluations describe the same set.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from scipy.special import eval_legendre, sph_harm_y, zeta

from .constants import unit_ball_volume, unit_sphere_area
from .errors import (
    ConfigError,
    NormalizationError,
    ParameterError,
    PreconditionError,
    UndefinedRatioError,
)
from .montecarlo import uniform_in_ball
from .nonlocal_perimeter import (
    SPerimeterEstimate,
    check_s,
    sperimeter_boundary_quadrature,
    sperimeter_line_mc_multi,
    sperimeter_unit_ball,
)
from .sets import LineIntervals, StarComponent, rejection_sample

EPS0_DEFAULT = 0.1
MAX_NORMALIZE_ITER = 100
NORMALIZE_TOL = 1e-8


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Quadrature nodes on the unit sphere of R^n.

    n=2: ``N`` equally spaced angles, weights ``2 pi / N``.
    n=3: Gauss-Legendre in ``cos(polar)`` times a uniform azimuth grid;
    node ``(i, j)`` is stored at row ``i * n_azim + j``.
    ``neighbors`` lists index pairs of adjacent nodes.
    """

    n: int
    resolution: tuple[int, ...]
    nodes: np.ndarray
    weights: np.ndarray
    neighbors: np.ndarray
    polar: np.ndarray | None = None  # n=3 polar angles per GL row
    azimuth: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def build_grid(n: int, resolution: Any = 256) -> SphereGrid:
    if n == 2:
        N = int(resolution if np.isscalar(resolution) else resolution[0])
        if N < 4:
            raise ParameterError("circle grids need at least 4 nodes")
        a = 2 * np.pi * np.arange(N) / N
        nodes = np.column_stack([np.cos(a), np.sin(a)])
        nb = np.column_stack([np.arange(N), (np.arange(N) + 1) % N])
        return SphereGrid(2, (N,), nodes, np.full(N, 2 * np.pi / N), nb)
    if n == 3:
        if np.isscalar(resolution):
            n_pol, n_az = int(resolution), 2 * int(resolution)
        else:
            n_pol, n_az = (int(r) for r in resolution)
        if n_pol < 2 or n_az < 3:
            raise ParameterError("sphere grids need at least 2 polar and 3 azimuthal nodes")
        x, w = np.polynomial.legendre.leggauss(n_pol)
        pol = np.arccos(x)
        az = 2 * np.pi * np.arange(n_az) / n_az
        P, A = np.meshgrid(pol, az, indexing="ij")
        nodes = np.column_stack([(np.sin(P) * np.cos(A)).ravel(), (np.sin(P) * np.sin(A)).ravel(), np.cos(P).ravel()])
        weights = (w[:, None] * np.full(n_az, 2 * np.pi / n_az)[None, :]).ravel()
        idx = np.arange(n_pol * n_az).reshape(n_pol, n_az)
        nb = np.concatenate(
            [
                np.column_stack([idx.ravel(), np.roll(idx, -1, axis=1).ravel()]),
                np.column_stack([idx[:-1].ravel(), idx[1:].ravel()]),
            ]
        )
        return SphereGrid(3, (n_pol, n_az), nodes, weights, nb, pol, az)
    raise ParameterError(f"sphere grids are available for n in {{2, 3}}, got {n}")


# ---------------------------------------------------------------------------
# Band-limited expansions
# ---------------------------------------------------------------------------


class _CircleExpansion:
    """Real trigonometric interpolant of N equally spaced values."""

    def __init__(self, coef: np.ndarray, N: int):
        self.coef = np.asarray(coef, dtype=complex)  # rfft coefficients / N, doubled except 0 and Nyquist
        self.N = N

    @classmethod
    def from_values(cls, values: np.ndarray) -> "_CircleExpansion":
        N = values.size
        c = np.fft.rfft(values) / N
        c[1:] *= 2
        if N % 2 == 0:
            c[-1] = c[-1].real / 2
        return cls(c, N)

    def modes(self) -> np.ndarray:
        scale = np.max(np.abs(self.coef)) if self.coef.size else 0.0
        return np.flatnonzero(np.abs(self.coef) > 1e-15 * max(scale, 1e-300))

    def _sum(self, dirs: np.ndarray, factor) -> np.ndarray:
        z = dirs[:, 0] + 1j * dirs[:, 1]
        z = z / np.abs(z)
        out = np.zeros(dirs.shape[0])
        modes = self.modes()
        if modes.size == 0:
            return out
        zk = np.ones_like(z)
        k_have = 0
        for k in modes:
            while k_have < k:
                zk = zk * z
                k_have += 1
            out += (factor(k) * self.coef[k] * zk).real
        return out

    def __call__(self, dirs: np.ndarray) -> np.ndarray:
        return self._sum(dirs, lambda k: 1.0)

    def derivative(self, dirs: np.ndarray) -> np.ndarray:
        """d/dangle at the given directions."""
        return self._sum(dirs, lambda k: 1j * k)

    def values_on(self, M: int) -> np.ndarray:
        a = 2 * np.pi * np.arange(M) / M
        return self(np.column_stack([np.cos(a), np.sin(a)]))

    def shifted(self, scale: float, v: np.ndarray) -> "_CircleExpansion":
        """Expansion of ``scale * (1 + u) - 1 - v . x``."""
        c = self.coef * scale
        c[0] += scale - 1.0
        if c.size > 1:
            c[1] -= v[0] - 1j * v[1]
        return _CircleExpansion(c, self.N)


def _real_sh(l: int, m: int, pol: np.ndarray, az: np.ndarray) -> np.ndarray:
    """Orthonormal real spherical harmonic of degree l, order m."""
    if m == 0:
        return sph_harm_y(l, 0, pol, az).real
    y = sph_harm_y(l, abs(m), pol, az)
    sign = (-1.0) ** m
    return np.sqrt(2.0) * sign * (y.real if m > 0 else y.imag)


class _SphereExpansion:
    """Real spherical-harmonic expansion up to degree L (exact on the GL grid)."""

    def __init__(self, coef: dict[tuple[int, int], float], L: int):
        self.coef = {k: v for k, v in coef.items() if v != 0.0}
        self.L = L

    @classmethod
    def from_values(cls, grid: SphereGrid, values: np.ndarray) -> "_SphereExpansion":
        L = min(grid.resolution[0] - 1, (grid.resolution[1] - 1) // 2)
        pol, az = _angles(grid.nodes)
        coef = {}
        scale = np.max(np.abs(values)) if values.size else 0.0
        for l in range(L + 1):
            for m in range(-l, l + 1):
                c = float(np.dot(grid.weights, values * _real_sh(l, m, pol, az)))
                if abs(c) > 1e-13 * max(scale, 1e-300):
                    coef[(l, m)] = c
        exp = cls(coef, L)
        if not np.allclose(exp(grid.nodes), values, atol=1e-9 * max(1.0, scale)):
            raise ParameterError(
                f"node values are not band-limited to degree {L} on this grid; use a finer grid or harmonics"
            )
        return exp

    def __call__(self, dirs: np.ndarray) -> np.ndarray:
        pol, az = _angles(dirs)
        out = np.zeros(dirs.shape[0])
        for (l, m), c in self.coef.items():
            out += c * _real_sh(l, m, pol, az)
        return out

    def shifted(self, scale: float, v: np.ndarray) -> "_SphereExpansion":
        c = {k: scale * val for k, val in self.coef.items()}
        y00 = 1.0 / np.sqrt(4 * np.pi)
        c[(0, 0)] = c.get((0, 0), 0.0) + (scale - 1.0) / y00
        # (x, y, z) = sqrt(4 pi / 3) (Y_{1,1}, Y_{1,-1}, Y_{1,0}) in the real basis
        k = np.sqrt(4 * np.pi / 3)
        for key, vi in (((1, 1), v[0]), ((1, -1), v[1]), ((1, 0), v[2])):
            c[key] = c.get(key, 0.0) - vi * k
        return _SphereExpansion(c, self.L)


def _angles(dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = np.linalg.norm(dirs, axis=1)
    pol = np.arccos(np.clip(dirs[:, 2] / r, -1.0, 1.0))
    az = np.arctan2(dirs[:, 1], dirs[:, 0])
    return pol, az


# ---------------------------------------------------------------------------
# Nearly spherical sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NearlySphericalSet:
    """Radial graph ``1 + u`` over a sphere grid; see :func:`from_radial_samples`."""

    grid: SphereGrid
    u: np.ndarray
    lip_estimate: float
    normalized: bool
    _exp: Any = field(repr=False)
    normalize_iterations: int = 0

    convex = False

    @property
    def dim(self) -> int:
        return self.grid.n

    # radial function ---------------------------------------------------------
    def boundary_curve(self):
        """Counter-clockwise parametrization ``N -> (x, dx/dangle)`` of the boundary (n = 2)."""
        if self.dim != 2:
            raise PreconditionError("boundary curves exist only for planar sets")

        def curve(N: int):
            a = 2 * np.pi * np.arange(N) / N
            e = np.column_stack([np.cos(a), np.sin(a)])
            r = 1.0 + self._exp(e)
            dr = self._exp.derivative(e)
            e_perp = np.column_stack([-e[:, 1], e[:, 0]])
            return r[:, None] * e, dr[:, None] * e + r[:, None] * e_perp

        return curve

    def u_at(self, dirs: np.ndarray) -> np.ndarray:
        return self._exp(np.atleast_2d(dirs))

    def radial(self, dirs: np.ndarray) -> np.ndarray:
        return 1.0 + self.u_at(dirs)

    def _fine(self) -> tuple[np.ndarray, np.ndarray]:
        """A finer quadrature (nodes, weights) exact for the powers of 1 + u used below."""
        return _fine_quadrature(self)

    def sup_u(self) -> float:
        nodes, _ = self._fine()
        return float(max(np.max(np.abs(self.u)), np.max(np.abs(self.u_at(nodes)))))

    # measures ------------------------------------------------------------------
    def volume(self) -> float:
        nodes, w = self._fine()
        n = self.dim
        return float(np.dot(w, self.radial(nodes) ** n)) / n

    def barycenter(self) -> np.ndarray:
        nodes, w = self._fine()
        n = self.dim
        R = self.radial(nodes)
        return (w * R ** (n + 1)) @ nodes / ((n + 1) * self.volume())

    def bounding_ball(self) -> tuple[np.ndarray, float]:
        # every direction is within ``gap`` of a fine node, so the sampled sup
        # plus a (doubled) Lipschitz slack bounds the radial function
        nodes, _ = self._fine()
        gap = _covering_angle(nodes.shape[0], self.dim)
        return np.zeros(self.dim), 1.0 + self.sup_u() + 2.0 * self.lip_estimate * gap + 1e-9

    # evaluable-set contract ---------------------------------------------------
    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        r = np.linalg.norm(x, axis=1)
        out = r == 0
        nz = ~out
        if nz.any():
            out[nz] = r[nz] <= self.radial(x[nz] / r[nz, None])
        return out

    def sample_uniform(self, rng: np.random.Generator, m: int) -> np.ndarray:
        _, R = self.bounding_ball()
        lo = -np.full(self.dim, R)
        return rejection_sample(self.contains, lo, -lo, rng, m, self.volume() / (2 * R) ** self.dim)

    def star_components(self) -> list[StarComponent]:
        def sample(rng, m):
            # cone-measure directions: rejection of uniform ball points against the radial graph
            _, R = self.bounding_ball()
            return rejection_sample_ball(self.contains, R, self.dim, rng, m)

        return [StarComponent(center=np.zeros(self.dim), volume=self.volume(), radial=self.radial, sample=sample)]

    def line_intervals(self, p: np.ndarray, d: np.ndarray) -> LineIntervals:
        return _radial_line_intervals(self, np.atleast_2d(p), np.atleast_2d(d))

    def with_u(self, u_scale: float) -> "NearlySphericalSet":
        """The unnormalized set with ``u`` replaced by ``u_scale * u``."""
        return _make_set(self.grid, u_scale * self.u, normalized=False)

    def to_dict(self) -> dict:
        return {"grid": {"n": self.dim, "resolution": list(self.grid.resolution)}, "u": self.u.tolist()}


def rejection_sample_ball(contains, R: float, n: int, rng: np.random.Generator, m: int) -> np.ndarray:
    out, have = [], 0
    while have < m:
        k = int((m - have) * 1.6) + 16
        x = R * uniform_in_ball(rng, k, n)
        x = x[contains(x)]
        out.append(x)
        have += x.shape[0]
    return np.concatenate(out)[:m]


def _fine_quadrature(ns: NearlySphericalSet):
    cache = ns.__dict__.get("_fine_cache")
    if cache is not None:
        return cache
    g = ns.grid
    if g.n == 2:
        fine = build_grid(2, 4 * g.resolution[0])
    else:
        fine = build_grid(3, (2 * g.resolution[0], 2 * g.resolution[1]))
    cache = (fine.nodes, fine.weights)
    object.__setattr__(ns, "_fine_cache", cache)
    return cache


def _covering_angle(size: int, n: int) -> float:
    """Generous covering radius (radians) of the fine grids built by ``_fine_quadrature``."""
    if n == 2:
        return np.pi / size
    n_pol = int(round(np.sqrt(size / 2)))
    return np.pi / n_pol


def _lipschitz(grid: SphereGrid, u: np.ndarray) -> float:
    i, j = grid.neighbors.T
    ang = np.arccos(np.clip(np.einsum("ij,ij->i", grid.nodes[i], grid.nodes[j]), -1.0, 1.0))
    return float(np.max(np.abs(u[i] - u[j]) / ang)) if ang.size else 0.0


def _expansion(grid: SphereGrid, u: np.ndarray):
    if grid.n == 2:
        return _CircleExpansion.from_values(u)
    return _SphereExpansion.from_values(grid, u)


def _make_set(grid, u, normalized, exp=None, iterations=0) -> NearlySphericalSet:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.size,):
        raise ParameterError(f"expected {grid.size} node values, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ParameterError("radial perturbation must be finite")
    if np.max(np.abs(u)) >= 0.5:
        raise ParameterError(f"sup|u| must be below 1/2, got {np.max(np.abs(u)):.4g}")
    exp = exp if exp is not None else _expansion(grid, u)
    return NearlySphericalSet(grid, u, _lipschitz(grid, u), normalized, exp, iterations)


def from_radial_samples(grid: SphereGrid, raw_u: Any, normalize: bool = True) -> NearlySphericalSet:
    """Build a nearly spherical set and normalize it to volume omega_n, barycenter 0.

    Each round rescales ``1 + u`` to the unit-ball volume and then removes
    the barycenter with the first-order translation update
    ``u <- u - bar . x``. Both updates act on the band-limited expansion, so
    the set stays exactly representable. Stops when
    ``|vol - omega_n| < 1e-8 omega_n`` and ``|bar| < 1e-8``.
    """
    raw = np.asarray(raw_u, dtype=float).ravel()
    ns = _make_set(grid, raw, normalized=False)
    if not normalize:
        return ns
    n = grid.n
    wn = unit_ball_volume(n)
    exp = ns._exp
    for it in range(MAX_NORMALIZE_ITER):
        vol = ns.volume()
        bar = ns.barycenter()
        if abs(vol - wn) < NORMALIZE_TOL * wn and np.linalg.norm(bar) < NORMALIZE_TOL:
            return replace(ns, normalized=True, normalize_iterations=it)
        t = (wn / vol) ** (1.0 / n)
        exp = exp.shifted(t, np.zeros(n))
        ns = _from_expansion(grid, exp)
        exp = exp.shifted(1.0, ns.barycenter())
        ns = _from_expansion(grid, exp)
    raise NormalizationError(
        f"normalization did not converge in {MAX_NORMALIZE_ITER} iterations; the set is probably too far from a ball"
    )


def _from_expansion(grid: SphereGrid, exp) -> NearlySphericalSet:
    u = exp(grid.nodes)
    if np.max(np.abs(u)) >= 0.5:
        raise NormalizationError("normalization pushed sup|u| above 1/2")
    return _make_set(grid, u, normalized=False, exp=exp)


def harmonic_values(grid: SphereGrid, harmonics: list) -> np.ndarray:
    """Node values of a sum of harmonics.

    n=2: entries ``(k, amplitude)`` or ``(k, amplitude, phase)`` meaning
    ``amplitude * cos(k (theta - phase))``.
    n=3: ``(l, amplitude)`` for the zonal ``amplitude * P_l(cos polar)`` or
    ``(l, m, amplitude)`` for a real orthonormal spherical harmonic.
    """
    u = np.zeros(grid.size)
    for h in harmonics:
        h = list(h)
        if grid.n == 2:
            if len(h) not in (2, 3):
                raise ConfigError(f"circle harmonic must be (k, amplitude[, phase]), got {h}")
            k, amp = int(h[0]), float(h[1])
            ph = float(h[2]) if len(h) == 3 else 0.0
            a = np.arctan2(grid.nodes[:, 1], grid.nodes[:, 0])
            u += amp * np.cos(k * (a - ph))
        else:
            pol, az = _angles(grid.nodes)
            if len(h) == 2:
                u += float(h[1]) * eval_legendre(int(h[0]), np.cos(pol))
            elif len(h) == 3:
                l, m = int(h[0]), int(h[1])
                if abs(m) > l:
                    raise ConfigError(f"invalid harmonic order {m} for degree {l}")
                u += float(h[2]) * _real_sh(l, m, pol, az)
            else:
                raise ConfigError(f"sphere harmonic must be (l, amplitude) or (l, m, amplitude), got {h}")
    return u


_RADIAL_FIELDS = {"grid", "u", "normalize"}


def radial_set_from_dict(spec: dict) -> NearlySphericalSet:
    """Parse ``{"grid": {"n", "resolution"}, "u": [...] | {"harmonic": [...]}, "normalize": bool}``."""
    extra = set(spec) - _RADIAL_FIELDS
    if extra:
        raise ConfigError(f"unknown fields in radial set description: {sorted(extra)}")
    g = spec.get("grid")
    if not isinstance(g, dict) or set(g) - {"n", "resolution"} or "n" not in g:
        raise ConfigError("'grid' must be an object with 'n' and optional 'resolution'")
    grid = build_grid(int(g["n"]), g.get("resolution", 256 if int(g["n"]) == 2 else (16, 32)))
    u = spec.get("u")
    if isinstance(u, dict):
        if set(u) != {"harmonic"}:
            raise ConfigError("'u' object must have exactly the key 'harmonic'")
        values = harmonic_values(grid, u["harmonic"])
    elif isinstance(u, list):
        values = np.asarray(u, dtype=float)
    else:
        raise ConfigError("'u' must be a list of node values or {'harmonic': [...]}")
    return from_radial_samples(grid, values, normalize=bool(spec.get("normalize", True)))


# ---------------------------------------------------------------------------
# Line crossings of a radial graph
# ---------------------------------------------------------------------------

_GRID_POINTS = 24
_ROOT_ITERS = 40


def _radial_line_intervals(ns: NearlySphericalSet, p: np.ndarray, d: np.ndarray) -> LineIntervals:
    """All inside intervals of lines ``p + t d`` through a radial set.

    In the plane of the line and the origin, with foot point f at distance
    z, a point of the line is ``f + z tan(phi) d`` and lies inside iff
    ``h(phi) = (1 + u(dir)) cos(phi) - z >= 0``. Roots of h are bracketed
    on a grid of phi (augmented by a refined local maximum so tangential
    chords are not missed) and polished by bisection.
    """
    m = p.shape[0]
    n = ns.dim
    pd = np.einsum("ij,ij->i", p, d)
    f = p - pd[:, None] * d
    z = np.linalg.norm(f, axis=1)
    Rmax = ns.bounding_ball()[1]
    through = z < 1e-12
    act = np.flatnonzero(~through & (z < Rmax))
    z_a = z[act]
    e = f[act] / np.where(z_a > 0, z_a, 1.0)[:, None]
    da = d[act]

    def h(rows: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """h at angles ``phi`` (shape (len(rows),) or (len(rows), k)) for the given active rows."""
        c, sn = np.cos(phi), np.sin(phi)
        if phi.ndim == 1:
            dirs = c[:, None] * e[rows] + sn[:, None] * da[rows]
            return ns.radial(dirs) * c - z_a[rows]
        dirs = c[..., None] * e[rows][:, None, :] + sn[..., None] * da[rows][:, None, :]
        r = ns.radial(dirs.reshape(-1, n)).reshape(phi.shape)
        return r * c - z_a[rows][:, None]

    rows_all = np.arange(act.size)
    pm = np.arccos(np.clip(z_a / Rmax, -1.0, 1.0))
    K = _GRID_POINTS
    grid = pm[:, None] * np.linspace(-1.0, 1.0, K)[None, :]
    hv = h(rows_all, grid) if act.size else np.zeros((0, K))
    pstar = _golden_max(h, rows_all, grid, hv)
    grid = np.concatenate([grid, pstar[:, None]], axis=1)
    hv = np.concatenate([hv, h(rows_all, pstar)[:, None]], axis=1)
    order = np.argsort(grid, axis=1, kind="stable")
    grid = np.take_along_axis(grid, order, axis=1)
    hv = np.take_along_axis(hv, order, axis=1)
    pos = hv > 0
    if act.size and (pos[:, 0].any() or pos[:, -1].any()):
        raise NumericalError("radial bound too small: a line crossing escaped its bracket")
    up = ~pos[:, :-1] & pos[:, 1:]
    down = pos[:, :-1] & ~pos[:, 1:]
    width = max(1, int(up.sum(axis=1).max()) if act.size else 1)
    out_s = np.full((m, width), np.nan)
    out_e = np.full((m, width), np.nan)
    for mask, rising, out in ((up, True, out_s), (down, False, out_e)):
        r, c = np.nonzero(mask)
        root = _bisect(h, r, grid[r, c], grid[r, c + 1], rising)
        rank = np.cumsum(mask, axis=1)[r, c] - 1
        out[act[r], rank] = z_a[r] * np.tan(root) - pd[act[r]]
    if through.any():
        dd = d[through]
        out_s[through, 0] = -ns.radial(-dd) - pd[through]
        out_e[through, 0] = ns.radial(dd) - pd[through]
    return LineIntervals(out_s, out_e)


def _golden_max(h, rows, grid, hv, iters: int = 24) -> np.ndarray:
    """Refine the grid maximum of h per row by golden-section search on its bracket."""
    if rows.size == 0:
        return np.zeros(0)
    K = grid.shape[1]
    k0 = np.argmax(hv, axis=1)
    a = grid[rows, np.clip(k0 - 1, 0, K - 1)]
    b = grid[rows, np.clip(k0 + 1, 0, K - 1)]
    g = (np.sqrt(5.0) - 1.0) / 2.0
    c1, c2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = h(rows, c1), h(rows, c2)
    for _ in range(iters):
        left = f1 > f2
        a = np.where(left, a, c1)
        b = np.where(left, c2, b)
        cn = np.where(left, b - g * (b - a), a + g * (b - a))
        fn = h(rows, cn)
        c1, c2, f1, f2 = (
            np.where(left, cn, c2),
            np.where(left, c1, cn),
            np.where(left, fn, f2),
            np.where(left, f1, fn),
        )
    return 0.5 * (a + b)


def _bisect(h, rows, lo, hi, rising: bool) -> np.ndarray:
    """Root of h in each bracket: a few bisection steps, then Illinois regula falsi
    on the brackets that have not converged yet."""
    lo = lo.copy()
    hi = hi.copy()
    if rows.size == 0:
        return lo
    for _ in range(4):
        mid = 0.5 * (lo + hi)
        inside = h(rows, mid) > 0
        # rising: outside -> inside, so an inside midpoint moves the upper end
        move_hi = inside if rising else ~inside
        hi = np.where(move_hi, mid, hi)
        lo = np.where(move_hi, lo, mid)
    flo, fhi = h(rows, lo), h(rows, hi)
    side = np.zeros(rows.size, dtype=int)
    act = np.arange(rows.size)
    for _ in range(_ROOT_ITERS):
        a, b, fa, fb = lo[act], hi[act], flo[act], fhi[act]
        den = fb - fa
        x = np.where(den != 0, (a * fb - b * fa) / np.where(den != 0, den, 1.0), 0.5 * (a + b))
        x = np.where((x > a) & (x < b), x, 0.5 * (a + b))
        fx = h(rows[act], x)
        same = np.sign(fx) == np.sign(fa)
        sd = side[act]
        lo[act] = np.where(same, x, a)
        flo[act] = np.where(same, fx, np.where(sd == -1, 0.5 * fa, fa))
        hi[act] = np.where(same, b, x)
        fhi[act] = np.where(same, np.where(sd == 1, 0.5 * fb, fb), fx)
        side[act] = np.where(same, 1, -1)
        keep = (np.abs(fx) > 1e-14) & (hi[act] - lo[act] > 1e-13)
        act = act[keep]
        if act.size == 0:
            break
    return np.where(np.abs(flo) < np.abs(fhi), lo, hi)


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NSNorms:
    l1: float
    l2_sq: float
    w1inf: float


def ns_norms(ns: NearlySphericalSet) -> NSNorms:
    """``||u||_L1``, ``||u||_L2^2`` and ``max(sup|u|, Lip)`` on the sphere."""
    w = ns.grid.weights
    return NSNorms(
        float(np.dot(w, np.abs(ns.u))),
        float(np.dot(w, ns.u**2)),
        float(max(np.max(np.abs(ns.u)), ns.lip_estimate)),
    )


@dataclass(frozen=True)
class SeminormValue:
    """Discrete Gagliardo seminorm with its near-diagonal handling.

    ``value`` includes ``diagonal_correction``; ``bias_bound`` is the
    Lipschitz bound on the contribution of the excluded self-cells.
    """

    value: float
    diagonal_correction: float
    bias_bound: float


def _tangent_gradient_sq(grid: SphereGrid, exp) -> np.ndarray:
    """|grad_tangential u|^2 at the grid nodes."""
    if grid.n == 2:
        return exp.derivative(grid.nodes) ** 2
    # central differences along two tangent directions of the band-limited expansion
    x = grid.nodes
    e1 = np.column_stack([-x[:, 1], x[:, 0], np.zeros(len(x))])
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(x, e1)
    dt = 1e-5
    out = np.zeros(len(x))
    for e in (e1, e2):
        fp = exp(np.cos(dt) * x + np.sin(dt) * e)
        fm = exp(np.cos(dt) * x - np.sin(dt) * e)
        out += ((fp - fm) / (2 * dt)) ** 2
    return out


def _seminorm(grid: SphereGrid, u: np.ndarray, exp, lip: float, s: float, block: int) -> SeminormValue:
    n = grid.n
    w = grid.weights
    total = 0.0
    for i0 in range(0, grid.size, block):
        xi = grid.nodes[i0 : i0 + block]
        d2 = np.maximum(2.0 - 2.0 * xi @ grid.nodes.T, 0.0)
        idx = np.arange(i0, min(i0 + block, grid.size))
        d2[np.arange(idx.size), idx] = np.inf
        K = d2 ** (-(n + s) / 2)
        diff2 = (u[idx, None] - u[None, :]) ** 2
        total += float(np.sum(w[idx, None] * w[None, :] * diff2 * K))
    grad2 = _tangent_gradient_sq(grid, exp)
    if n == 2:
        h = 2 * np.pi / grid.size
        c = -2.0 * zeta(s) * h ** (1 - s) * np.ones(grid.size)
        cell = 2.0 * (h / 2) ** (1 - s) / (1 - s)
    else:
        rho = np.sqrt(w / np.pi)
        c = np.pi * rho ** (1 - s) / (1 - s)
        cell = 2 * np.pi * rho ** (1 - s) / (1 - s)
    corr = float(np.sum(w * grad2 * c))
    bias = float(np.sum(w * lip**2 * cell))
    return SeminormValue(total + corr, corr, bias)


def seminorm_details(ns: NearlySphericalSet, s: float, block: int = 512) -> SeminormValue:
    """``[u]^2 = int int |u(x) - u(y)|^2 / |x - y|^(n+s)`` on the sphere.

    Off-diagonal node pairs are summed with product weights in fixed row
    blocks. The excluded diagonal is restored by the leading-order
    correction ``sum_i w_i |grad u(x_i)|^2 c_i``: on the circle
    ``c = -2 zeta(s) h^(1-s)`` (the exact Euler-Maclaurin defect of the
    trapezoidal sum of ``|t|^-s``); on S^2 the self-cell is replaced by a
    geodesic disc of equal area, giving ``c = pi rho^(1-s) / (1-s)``.
    """
    return _seminorm(ns.grid, ns.u, ns._exp, ns.lip_estimate, check_s(s), block)


def seminorm_of_values(grid: SphereGrid, u, s: float, block: int = 512) -> SeminormValue:
    """:func:`seminorm_details` for raw node values of any size (no set is built)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.size,) or not np.all(np.isfinite(u)):
        raise ParameterError(f"expected {grid.size} finite node values")
    return _seminorm(grid, u, _expansion(grid, u), _lipschitz(grid, u), check_s(s), block)


def gagliardo_seminorm_sq(ns: NearlySphericalSet, s: float) -> float:
    return seminorm_details(ns, s).value


def lambda0_ns(ns: NearlySphericalSet) -> float:
    """Barycentric asymmetry of a normalized radial set.

    With volume omega_n and barycenter 0 the reference ball is B itself,
    and ``|E sym-diff B| = (1/n) int_S |(1+u)^n - 1|``.
    """
    if not ns.normalized:
        raise PreconditionError("lambda0_ns needs a normalized set (volume omega_n, barycenter 0)")
    nodes, w = ns._fine()
    n = ns.dim
    return float(np.dot(w, np.abs(ns.radial(nodes) ** n - 1.0))) / (n * unit_ball_volume(n))


@dataclass(frozen=True)
class FugledeRatio:
    lhs: float
    lhs_std_error: float
    rhs_core: float
    ratio: float
    ratio_std_error: float
    seminorm_sq: float
    l2_sq: float
    perimeter: SPerimeterEstimate


def fuglede_ratio(
    ns: NearlySphericalSet,
    s: float,
    perimeter_budget: int = 262_144,
    seed: int = 0,
    eps0: float = EPS0_DEFAULT,
) -> FugledeRatio:
    """``(P_s(E) - P_s(B)) / ([u]^2 + s P_s(B) ||u||_L2^2)`` for a normalized set.

    Planar sets use the deterministic boundary quadrature for P_s(E); in
    three dimensions the line estimator runs against the unit ball (common
    random lines), so the small difference is resolved directly.
    """
    return fuglede_ratios(ns, [s], perimeter_budget, seed, eps0)[0]


def fuglede_ratios(
    ns: NearlySphericalSet,
    s_values,
    perimeter_budget: int = 262_144,
    seed: int = 0,
    eps0: float = EPS0_DEFAULT,
) -> list[FugledeRatio]:
    """:func:`fuglede_ratio` for several s, sharing the random lines."""
    s_list = [check_s(s) for s in s_values]
    if not ns.normalized:
        raise PreconditionError("the stability ratio needs a normalized set")
    norms = ns_norms(ns)
    if norms.w1inf > eps0:
        raise PreconditionError(f"||u||_W1inf = {norms.w1inf:.4g} exceeds eps0 = {eps0}")
    if not np.any(ns.u != 0.0):
        raise UndefinedRatioError("u vanishes identically: both sides of the stability inequality are zero")
    if ns.dim == 2:
        ests = [sperimeter_boundary_quadrature(ns, s) for s in s_list]
    else:
        ests = sperimeter_line_mc_multi(ns, s_list, perimeter_budget, seed)
    out = []
    for s, est in zip(s_list, ests):
        semi = gagliardo_seminorm_sq(ns, s)
        PB = sperimeter_unit_ball(ns.dim, s)
        rhs = semi + s * PB * norms.l2_sq
        if rhs <= 0.0:
            raise UndefinedRatioError("both sides of the stability inequality are zero")
        lhs = est.value - PB
        out.append(FugledeRatio(lhs, est.std_error, rhs, lhs / rhs, est.std_error / rhs, semi, norms.l2_sq, est))
    return out


def random_nearly_spherical(
    rng: np.random.Generator,
    grid: SphereGrid,
    w1inf_max: float = 0.1,
    modes: tuple[int, int] = (2, 6),
) -> NearlySphericalSet:
    """A normalized random radial set with ``||u||_W1inf <= w1inf_max``.

    n=2: random Fourier modes k in ``modes``; n=3: random real harmonics of
    degree in ``modes``. The amplitude is set so the Lipschitz bound before
    normalization is a random fraction in [0.2, 0.9] of ``w1inf_max``.
    """
    lo, hi = modes
    if grid.n == 2:
        harm = [(k, rng.standard_normal(), rng.uniform(0, 2 * np.pi)) for k in range(lo, hi + 1)]
    else:
        harm = [(l, m, rng.standard_normal()) for l in range(lo, hi + 1) for m in range(-l, l + 1)]
    u = harmonic_values(grid, harm)
    base = _make_set(grid, u / (4 * np.max(np.abs(u))), normalized=False)
    w1 = max(np.max(np.abs(base.u)), base.lip_estimate)
    target = rng.uniform(0.2, 0.9) * w1inf_max
    ns = from_radial_samples(grid, base.u * target / w1)
    if ns_norms(ns).w1inf > w1inf_max:
        raise PreconditionError("normalization pushed the random set outside the requested regime")
    return ns
