"""Convex bodies and the geometric oracles the estimators consume.

Four representations share one interface: :class:`Ball`, :class:`Ellipsoid`,
:class:`Cuboid` (axis aligned) and :class:`Polytope` (kept in both H- and
V-representation). Closed forms are used wherever they exist. All bodies are
immutable; every transformation returns a new body.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from math import factorial
from typing import Any

import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError
from scipy.spatial.distance import pdist, squareform

from .constants import unit_ball_volume
from .errors import DegenerateInputError, NumericalError, ParameterError, PreconditionError
from .sets import EmptySet, LineIntervals, StarComponent, ball_chords, rejection_sample

BISECTION_RTOL = 1e-12


def _vec(x: Any, n: int | None = None, name: str = "point") -> np.ndarray:
    v = np.asarray(x, dtype=float).ravel()
    if n is not None and v.size != n:
        raise ParameterError(f"{name} must have {n} coordinates, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} must be finite")
    return v


def _rows(x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, n) if n > 1 or x.size != 1 else x.reshape(1, 1)
    return x


class ConvexBody(ABC):
    """Common oracle interface of the convex-body variants."""

    kind: str
    dim: int
    convex = True

    # -- membership and rays ------------------------------------------------
    @abstractmethod
    def contains(self, x: np.ndarray) -> np.ndarray:
        """Closed membership test, vectorized over the rows of ``x``."""

    @abstractmethod
    def line_intervals(self, p: np.ndarray, d: np.ndarray) -> LineIntervals:
        """Entry/exit parameters of lines ``p + t d`` with unit ``d``."""

    def ray_exit(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Exit distance along ``theta`` from points ``x``; no interior check."""
        x = _rows(x, self.dim)
        theta = _rows(theta, self.dim)
        x, theta = np.broadcast_arrays(x, theta)
        return self.line_intervals(x, theta).ends[:, 0]

    def interior_margin(self, x: np.ndarray) -> np.ndarray:
        """Positive exactly for interior points (a signed gauge-like quantity)."""
        x = _rows(x, self.dim)
        c = self.barycenter()
        d = x - c
        r = np.linalg.norm(d, axis=1)
        safe = np.where(r > 0, r, 1.0)
        u = d / safe[:, None]
        # any direction serves at the center itself
        u[r == 0] = np.eye(self.dim)[0]
        R = self.ray_exit(np.broadcast_to(c, u.shape), u)
        return R - r

    # -- measures -----------------------------------------------------------
    @abstractmethod
    def _volume(self) -> float: ...

    @abstractmethod
    def _barycenter(self) -> np.ndarray: ...

    @abstractmethod
    def diameter_pair(self) -> tuple[float, np.ndarray, np.ndarray]: ...

    @abstractmethod
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]: ...

    @abstractmethod
    def transformed(
        self, scale: float = 1.0, rotation: np.ndarray | None = None, shift: np.ndarray | None = None
    ) -> "ConvexBody":
        """Image under ``x -> scale * rotation @ x + shift``."""

    @abstractmethod
    def to_dict(self) -> dict: ...

    def volume(self) -> float:
        v = self._volume()
        if not v > 0:
            raise DegenerateInputError(f"{self.kind} has zero volume")
        return v

    def measure(self) -> float:
        return self._volume()

    def barycenter(self) -> np.ndarray:
        self.volume()
        return self._barycenter()

    def bounding_ball(self) -> tuple[np.ndarray, float]:
        lo, hi = self.bounding_box()
        c = 0.5 * (lo + hi)
        return c, float(np.linalg.norm(hi - lo) / 2)

    # -- evaluable-set plumbing ---------------------------------------------
    def sample_uniform(self, rng: np.random.Generator, m: int) -> np.ndarray:
        lo, hi = self.bounding_box()
        hint = self.volume() / float(np.prod(hi - lo))
        return rejection_sample(self.contains, lo, hi, rng, m, hint)

    def star_components(self) -> list[StarComponent]:
        c = self.barycenter()

        def radial(dirs: np.ndarray) -> np.ndarray:
            dirs = _rows(dirs, self.dim)
            return self.ray_exit(np.broadcast_to(c, dirs.shape), dirs)

        return [
            StarComponent(
                center=c,
                volume=self.volume(),
                radial=radial,
                sample=self.sample_uniform,
                inradius=self.distance_to_boundary(c),
            )
        ]

    def distance_to_boundary(self, x: np.ndarray) -> float:
        """Euclidean distance from an interior point to the boundary (0 if outside)."""
        return max(0.0, float(self._distance_to_boundary(_vec(x, self.dim))))

    @abstractmethod
    def _distance_to_boundary(self, x: np.ndarray) -> float: ...

    def translated(self, v: np.ndarray) -> "ConvexBody":
        return self.transformed(shift=_vec(v, self.dim))

    def scaled(self, lam: float) -> "ConvexBody":
        if not lam > 0:
            raise ParameterError(f"scale must be positive, got {lam}")
        return self.transformed(scale=lam)

    def rotated(self, rotation: np.ndarray) -> "ConvexBody":
        return self.transformed(rotation=rotation)


def _check_rotation(rotation: np.ndarray | None, n: int) -> np.ndarray:
    if rotation is None:
        return np.eye(n)
    Q = np.asarray(rotation, dtype=float)
    if Q.shape != (n, n) or not np.allclose(Q.T @ Q, np.eye(n), atol=1e-9):
        raise ParameterError("rotation must be an orthogonal n x n matrix")
    return Q


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    center: np.ndarray
    radius: float
    kind = "ball"

    def __post_init__(self):
        c = _vec(self.center, name="center")
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise DegenerateInputError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def unit(cls, n: int) -> "Ball":
        return cls(np.zeros(n), 1.0)

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, x):
        x = _rows(x, self.dim)
        return np.sum((x - self.center) ** 2, axis=1) <= self.radius**2

    def line_intervals(self, p, d):
        return LineIntervals.single(*ball_chords(self.center, self.radius, _rows(p, self.dim), _rows(d, self.dim)))

    def _volume(self):
        return unit_ball_volume(self.dim) * self.radius**self.dim

    def _distance_to_boundary(self, x):
        return self.radius - np.linalg.norm(x - self.center)

    def _barycenter(self):
        return self.center.copy()

    def diameter_pair(self):
        e = np.zeros(self.dim)
        e[0] = self.radius
        return 2 * self.radius, self.center - e, self.center + e

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def bounding_ball(self):
        return self.center.copy(), self.radius

    def transformed(self, scale=1.0, rotation=None, shift=None):
        Q = _check_rotation(rotation, self.dim)
        v = np.zeros(self.dim) if shift is None else _vec(shift, self.dim)
        return Ball(scale * Q @ self.center + v, scale * self.radius)

    def to_dict(self):
        return {"kind": "ball", "dim": self.dim, "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Ellipsoid(ConvexBody):
    """``{c + rotation @ (semiaxes * y) : |y| <= 1}``."""

    center: np.ndarray
    semiaxes: np.ndarray
    rotation: np.ndarray | None = None
    kind = "ellipsoid"

    def __post_init__(self):
        c = _vec(self.center, name="center")
        a = _vec(self.semiaxes, c.size, name="semiaxes")
        if np.any(a <= 0):
            raise DegenerateInputError("ellipsoid semiaxes must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "semiaxes", a)
        object.__setattr__(self, "rotation", _check_rotation(self.rotation, c.size))

    @property
    def dim(self) -> int:
        return self.center.size

    def _local(self, x):
        return ((x - self.center) @ self.rotation) / self.semiaxes

    def contains(self, x):
        return np.sum(self._local(_rows(x, self.dim)) ** 2, axis=1) <= 1.0

    def line_intervals(self, p, d):
        p = _rows(p, self.dim)
        d = _rows(d, self.dim)
        q = self._local(p)
        w = (d @ self.rotation) / self.semiaxes
        A = np.einsum("ij,ij->i", w, w)
        B = np.einsum("ij,ij->i", q, w)
        C = np.einsum("ij,ij->i", q, q) - 1.0
        disc = B * B - A * C
        root = np.sqrt(np.where(disc > 0, disc, np.nan))
        return LineIntervals.single((-B - root) / A, (-B + root) / A)

    def _volume(self):
        return unit_ball_volume(self.dim) * float(np.prod(self.semiaxes))

    def _distance_to_boundary(self, x):
        y = (x - self.center) @ self.rotation
        if np.allclose(y, 0):
            return float(self.semiaxes.min())
        # lower bound: the largest ball about x inside is at least the gauge gap times the min semiaxis
        g = float(np.linalg.norm(y / self.semiaxes))
        return (1.0 - g) * float(self.semiaxes.min())

    def _barycenter(self):
        return self.center.copy()

    def diameter_pair(self):
        k = int(np.argmax(self.semiaxes))
        e = self.rotation[:, k] * self.semiaxes[k]
        return 2 * self.semiaxes[k], self.center - e, self.center + e

    def bounding_box(self):
        half = np.sqrt(((self.rotation * self.semiaxes) ** 2).sum(axis=1))
        return self.center - half, self.center + half

    def transformed(self, scale=1.0, rotation=None, shift=None):
        Q = _check_rotation(rotation, self.dim)
        v = np.zeros(self.dim) if shift is None else _vec(shift, self.dim)
        return Ellipsoid(scale * Q @ self.center + v, scale * self.semiaxes, Q @ self.rotation)

    def to_dict(self):
        return {
            "kind": "ellipsoid",
            "dim": self.dim,
            "center": self.center.tolist(),
            "semiaxes": self.semiaxes.tolist(),
            "rotation": self.rotation.tolist(),
        }


@dataclass(frozen=True, eq=False)
class Cuboid(ConvexBody):
    """Axis-aligned box ``center +- half_extents``; in one dimension an interval."""

    center: np.ndarray
    half_extents: np.ndarray
    kind = "cuboid"

    def __post_init__(self):
        c = _vec(self.center, name="center")
        h = _vec(self.half_extents, c.size, name="half_extents")
        if np.any(h <= 0):
            raise DegenerateInputError("cuboid half-extents must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_extents", h)

    @classmethod
    def interval(cls, a: float, b: float) -> "Cuboid":
        return cls([0.5 * (a + b)], [0.5 * (b - a)])

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, x):
        return np.all(np.abs(_rows(x, self.dim) - self.center) <= self.half_extents, axis=1)

    def line_intervals(self, p, d):
        p = _rows(p, self.dim)
        d = _rows(d, self.dim)
        lo = self.center - self.half_extents
        hi = self.center + self.half_extents
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo - p) / d
            t2 = (hi - p) / d
        par = d == 0
        inside_par = (p >= lo) & (p <= hi)
        tmin = np.where(par, np.where(inside_par, -np.inf, np.inf), np.minimum(t1, t2))
        tmax = np.where(par, np.where(inside_par, np.inf, -np.inf), np.maximum(t1, t2))
        return LineIntervals.single(tmin.max(axis=1), tmax.min(axis=1))

    def _volume(self):
        return float(np.prod(2 * self.half_extents))

    def _distance_to_boundary(self, x):
        return float(np.min(self.half_extents - np.abs(x - self.center)))

    def _barycenter(self):
        return self.center.copy()

    def vertices(self) -> np.ndarray:
        n = self.dim
        signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * n), indexing="ij")).reshape(n, -1).T
        return self.center + signs * self.half_extents

    def diameter_pair(self):
        return 2 * float(np.linalg.norm(self.half_extents)), self.center - self.half_extents, self.center + self.half_extents

    def bounding_box(self):
        return self.center - self.half_extents, self.center + self.half_extents

    def to_polytope(self) -> "Polytope":
        return Polytope.from_vertices(self.vertices())

    def transformed(self, scale=1.0, rotation=None, shift=None):
        v = np.zeros(self.dim) if shift is None else _vec(shift, self.dim)
        if rotation is None or np.allclose(rotation, np.eye(self.dim)):
            return Cuboid(scale * self.center + v, scale * self.half_extents)
        return self.to_polytope().transformed(scale, rotation, shift)

    def to_dict(self):
        return {
            "kind": "cuboid",
            "dim": self.dim,
            "center": self.center.tolist(),
            "half_extents": self.half_extents.tolist(),
        }


@dataclass(frozen=True, eq=False)
class Polytope(ConvexBody):
    """Bounded polytope ``{x : normals @ x <= offsets}`` with its vertex list.

    Build with :meth:`from_vertices` or :meth:`from_halfspaces`; the other
    representation is derived with Qhull.
    """

    normals: np.ndarray
    offsets: np.ndarray
    vertex_array: np.ndarray
    kind = "polytope"

    @property
    def dim(self) -> int:
        return self.vertex_array.shape[1]

    @property
    def vertices(self) -> np.ndarray:
        return self.vertex_array

    @classmethod
    def from_vertices(cls, vertices: Any) -> "Polytope":
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] < 2:
            raise ParameterError("polytope vertices must be an (m, n) array with n >= 2")
        try:
            hull = ConvexHull(V)
        except QhullError as exc:
            raise DegenerateInputError(f"vertices span a degenerate hull: {exc}") from None
        eq = _unique_facets(hull.equations)
        return cls(eq[:, :-1], -eq[:, -1], V[hull.vertices])

    @classmethod
    def from_halfspaces(cls, halfspaces: Any) -> "Polytope":
        H = np.asarray(halfspaces, dtype=float)
        if H.ndim != 2 or H.shape[1] < 3:
            raise ParameterError("halfspaces must be rows (normal..., offset) in dimension >= 2")
        A, b = H[:, :-1], H[:, -1]
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0):
            raise ParameterError("halfspace normals must be nonzero")
        A, b = A / norms[:, None], b / norms
        interior = _chebyshev_center(A, b)
        if interior is None:
            raise DegenerateInputError("halfspaces do not bound a body with interior")
        try:
            hs = HalfspaceIntersection(np.column_stack([A, -b]), interior)
        except QhullError as exc:
            raise DegenerateInputError(f"halfspace intersection failed: {exc}") from None
        return cls.from_vertices(_dedupe_points(hs.intersections))

    @classmethod
    def regular_polygon(cls, sides: int, circumradius: float = 1.0, phase: float = 0.0) -> "Polytope":
        if sides < 3:
            raise ParameterError("a polygon needs at least 3 sides")
        a = phase + 2 * np.pi * np.arange(sides) / sides
        return cls.from_vertices(circumradius * np.column_stack([np.cos(a), np.sin(a)]))

    def contains(self, x):
        x = _rows(x, self.dim)
        return np.all(x @ self.normals.T <= self.offsets + 1e-12 * (1 + np.abs(self.offsets)), axis=1)

    def line_intervals(self, p, d):
        p = _rows(p, self.dim)
        d = _rows(d, self.dim)
        num = self.offsets - p @ self.normals.T
        den = d @ self.normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / den
        upper = np.where(den > 0, t, np.inf)
        lower = np.where(den < 0, t, -np.inf)
        blocked = np.any((den == 0) & (num < 0), axis=1)
        t0 = lower.max(axis=1)
        t1 = np.where(blocked, -np.inf, upper.min(axis=1))
        return LineIntervals.single(t0, t1)

    def _simplices(self) -> tuple[np.ndarray, np.ndarray]:
        """Volumes and centroids of the cone decomposition from an interior point."""
        hull = ConvexHull(self.vertex_array)
        apex = self.vertex_array.mean(axis=0)
        tri = hull.points[hull.simplices]
        edges = tri - apex
        vols = np.abs(np.linalg.det(edges)) / factorial(self.dim)
        cents = (tri.sum(axis=1) + apex) / (self.dim + 1)
        return vols, cents

    def _volume(self):
        vols, _ = self._simplices()
        return float(vols.sum())

    def _distance_to_boundary(self, x):
        return float(np.min(self.offsets - self.normals @ x))

    def _barycenter(self):
        vols, cents = self._simplices()
        return (vols[:, None] * cents).sum(axis=0) / vols.sum()

    def diameter_pair(self):
        D = squareform(pdist(self.vertex_array))
        i, j = np.unravel_index(int(np.argmax(D)), D.shape)
        return float(D[i, j]), self.vertex_array[i].copy(), self.vertex_array[j].copy()

    def bounding_box(self):
        return self.vertex_array.min(axis=0), self.vertex_array.max(axis=0)

    def transformed(self, scale=1.0, rotation=None, shift=None):
        Q = _check_rotation(rotation, self.dim)
        v = np.zeros(self.dim) if shift is None else _vec(shift, self.dim)
        A = self.normals @ Q.T
        return Polytope(A, scale * self.offsets + A @ v, scale * self.vertex_array @ Q.T + v)

    def to_dict(self):
        return {"kind": "polytope", "dim": self.dim, "vertices": self.vertex_array.tolist()}

    def representation_gap(self) -> tuple[float, int]:
        """Max vertex violation of the half-spaces, and the min number of vertices tight at a facet."""
        slack = self.offsets[None, :] - self.vertex_array @ self.normals.T
        tight = np.abs(slack) < 1e-9 * (1 + np.abs(self.offsets))
        return float(max(0.0, -slack.min())), int(tight.sum(axis=0).min())


def _unique_facets(eq: np.ndarray) -> np.ndarray:
    keys = np.round(eq, 10)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return eq[np.sort(idx)]


def _dedupe_points(P: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    keep: list[np.ndarray] = []
    for p in P:
        if not any(np.linalg.norm(p - q) < tol for q in keep):
            keep.append(p)
    return np.array(keep)


def _chebyshev_center(A: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    n = A.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.column_stack([A, np.linalg.norm(A, axis=1)])
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=[(None, None)] * n + [(0, None)], method="highs")
    if not res.success or res.x[-1] <= 1e-12:
        return None
    return res.x[:n]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def volume(body: ConvexBody) -> float:
    return body.volume()


def barycenter(body: ConvexBody) -> np.ndarray:
    return body.barycenter()


@dataclass(frozen=True)
class Diameter:
    value: float
    x0: np.ndarray
    x1: np.ndarray


def diameter(body: ConvexBody) -> Diameter:
    """Diameter with an achieving pair (``x1 - x0`` has length ``value``)."""
    d, x0, x1 = body.diameter_pair()
    return Diameter(float(d), x0, x1)


def ray_exit_distance(body: ConvexBody, x: Any, theta: Any) -> float:
    """Distance from the interior point ``x`` to the boundary along unit ``theta``."""
    n = body.dim
    x = _vec(x, n)
    theta = _vec(theta, n, name="theta")
    if abs(np.linalg.norm(theta) - 1.0) > 1e-9:
        raise PreconditionError("theta must be a unit vector")
    if not body.interior_margin(x[None, :])[0] > 0:
        raise PreconditionError(f"point {x.tolist()} is not interior to the body")
    rho = float(body.ray_exit(x[None, :], theta[None, :])[0])
    if not np.isfinite(rho) or rho <= 0:
        raise NumericalError(f"ray exit distance is not a positive finite number: {rho}")
    return rho


def ray_exit_bisection(contains, x: np.ndarray, theta: np.ndarray, bound: float) -> np.ndarray:
    """Generic exit distance by bracketing and bisection on membership.

    ``bound`` must exceed every exit distance (e.g. the body's diameter).
    Stops when the bracket is below ``BISECTION_RTOL * bound``.
    """
    x = np.atleast_2d(x)
    theta = np.atleast_2d(theta)
    lo = np.zeros(x.shape[0])
    hi = np.full(x.shape[0], float(bound))
    if np.any(contains(x + hi[:, None] * theta)):
        raise PreconditionError("bisection bound does not bracket the boundary")
    tol = BISECTION_RTOL * bound
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        inside = contains(x + mid[:, None] * theta)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def orthonormal_frame(e: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose last column is the unit vector ``e``."""
    e = np.asarray(e, dtype=float)
    e = e / np.linalg.norm(e)
    n = e.size
    Q, _ = np.linalg.qr(np.column_stack([e, np.eye(n)]))
    Q = Q[:, :n]
    if Q[:, 0] @ e < 0:
        Q = -Q
    return np.column_stack([Q[:, 1:], e])


def slice_body(body: ConvexBody, x0: Any, x1: Any, t: float) -> ConvexBody | EmptySet:
    """Cross-section ``{y in R^(n-1) : x_t + P y in E}`` orthogonal to ``x1 - x0``.

    ``x_t = (1-t) x0 + t x1`` and the columns of ``P`` are the first n-1
    columns of :func:`orthonormal_frame`. Empty or lower-dimensional
    sections come back as :class:`EmptySet` (measure zero).
    """
    n = body.dim
    if n < 2:
        raise ParameterError("slicing needs dimension >= 2")
    x0 = _vec(x0, n)
    x1 = _vec(x1, n)
    if np.linalg.norm(x1 - x0) == 0:
        raise ParameterError("slice axis endpoints coincide")
    F = orthonormal_frame(x1 - x0)
    P = F[:, :-1]
    xt = (1 - t) * x0 + t * x1
    if isinstance(body, Ball):
        h = (body.center - xt) @ F[:, -1]
        r2 = body.radius**2 - h * h
        if r2 <= 0:
            return EmptySet(n - 1)
        return Ball(P.T @ (body.center - xt), np.sqrt(r2))
    if isinstance(body, Ellipsoid):
        M = body.rotation @ np.diag(body.semiaxes**-2.0) @ body.rotation.T
        dvec = xt - body.center
        N = P.T @ M @ P
        g = P.T @ M @ dvec
        y0 = -np.linalg.solve(N, g)
        k = 1.0 - dvec @ M @ dvec + y0 @ N @ y0
        if k <= 0:
            return EmptySet(n - 1)
        lam, V = np.linalg.eigh(N / k)
        if np.linalg.det(V) < 0:
            V[:, 0] = -V[:, 0]
        return Ellipsoid(y0, 1.0 / np.sqrt(lam), V)
    poly = body.to_polytope() if isinstance(body, Cuboid) else body
    if not isinstance(poly, Polytope):
        raise ParameterError(f"cannot slice a {body.kind}")
    A = poly.normals @ P
    b = poly.offsets - poly.normals @ xt
    flat = np.linalg.norm(A, axis=1) < 1e-13
    if np.any(b[flat] < -1e-12):
        return EmptySet(n - 1)
    A, b = A[~flat], b[~flat]
    if n - 1 == 1:
        a = A[:, 0]
        hi = np.min(b[a > 0] / a[a > 0])
        lo = np.max(b[a < 0] / a[a < 0])
        if hi - lo <= 1e-14 * max(1.0, abs(hi), abs(lo)):
            return EmptySet(1)
        return Cuboid.interval(lo, hi)
    norms = np.linalg.norm(A, axis=1)
    A, b = A / norms[:, None], b / norms
    interior = _chebyshev_center(A, b)
    if interior is None:
        return EmptySet(n - 1)
    try:
        return Polytope.from_halfspaces(np.column_stack([A, b]))
    except (DegenerateInputError, ParameterError):
        return EmptySet(n - 1)


def slice_measure(body: ConvexBody, x0: Any, x1: Any, t: float) -> float:
    return float(slice_body(body, x0, x1, t).measure())


def direction_grid(n: int, count: int | None = None) -> np.ndarray:
    """Deterministic near-uniform unit directions (2 in 1D, equiangular in 2D, Fibonacci in 3D)."""
    if n == 1:
        return np.array([[-1.0], [1.0]])
    if n == 2:
        m = count or 4096
        a = 2 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(a), np.sin(a)])
    if n == 3:
        m = count or 16384
        k = np.arange(m) + 0.5
        z = 1 - 2 * k / m
        phi = np.pi * (1 + 5**0.5) * k
        r = np.sqrt(1 - z * z)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ParameterError(f"direction grids are provided for n <= 3, got {n}")


def hausdorff_to_unit_ball(body: ConvexBody, n_dirs: int | None = None) -> float:
    """sup over directions of ``|rho_E(theta) - 1|`` with rho_E the radial function about 0.

    The grid maximum is polished by a local search started at the best grid
    direction; the radial function is Lipschitz, so the grid error shrinks
    linearly with the grid spacing and the polish removes it in practice.
    """
    n = body.dim
    origin = np.zeros(n)
    if not body.interior_margin(origin[None, :])[0] > 0:
        raise PreconditionError("the origin must be interior to the body")
    dirs = direction_grid(n, n_dirs)

    def dev(u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(u)
        return np.abs(body.ray_exit(np.zeros_like(u), u) - 1.0)

    vals = dev(dirs)
    k = int(np.argmax(vals))
    best = float(vals[k])
    if n == 2:
        step = 2 * np.pi / dirs.shape[0]
        a0 = np.arctan2(dirs[k, 1], dirs[k, 0])
        res = minimize_scalar(
            lambda a: -dev(np.array([np.cos(a), np.sin(a)]))[0],
            bounds=(a0 - step, a0 + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, -float(res.fun))
    elif n == 3:
        th0 = np.arccos(np.clip(dirs[k, 2], -1, 1))
        ph0 = np.arctan2(dirs[k, 1], dirs[k, 0])

        def f(v):
            th, ph = v
            u = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
            return -dev(u)[0]

        res = minimize(f, [th0, ph0], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
        best = max(best, -float(res.fun))
    return best


@dataclass(frozen=True)
class Normalized:
    """A body rescaled to volume omega_n and recentred at its barycenter.

    ``body = scale * original + shift``.
    """

    body: ConvexBody
    scale: float
    shift: np.ndarray


def normalize(body: ConvexBody) -> Normalized:
    n = body.dim
    lam = (unit_ball_volume(n) / body.volume()) ** (1.0 / n)
    shift = -lam * body.barycenter()
    return Normalized(body.transformed(scale=lam, shift=shift), lam, shift)


# ---------------------------------------------------------------------------
# Shape description format
# ---------------------------------------------------------------------------

_FIELDS = {
    "ball": {"kind", "dim", "center", "radius"},
    "ellipsoid": {"kind", "dim", "center", "semiaxes", "rotation"},
    "cuboid": {"kind", "dim", "center", "half_extents"},
    "polytope": {"kind", "dim", "vertices", "halfspaces"},
}


def body_from_dict(spec: dict) -> ConvexBody:
    """Parse a shape description; unknown kinds or fields are rejected."""
    from .errors import ConfigError

    kind = spec.get("kind")
    if kind not in _FIELDS:
        raise ConfigError(f"unknown shape kind {kind!r}; expected one of {sorted(_FIELDS)}")
    extra = set(spec) - _FIELDS[kind]
    if extra:
        raise ConfigError(f"unknown fields for {kind}: {sorted(extra)}")
    if "dim" not in spec:
        raise ConfigError("shape description needs 'dim'")
    n = int(spec["dim"])
    try:
        if kind == "ball":
            body: ConvexBody = Ball(_vec(spec.get("center", np.zeros(n)), n), float(spec["radius"]))
        elif kind == "ellipsoid":
            body = Ellipsoid(_vec(spec.get("center", np.zeros(n)), n), spec["semiaxes"], spec.get("rotation"))
        elif kind == "cuboid":
            body = Cuboid(_vec(spec.get("center", np.zeros(n)), n), spec["half_extents"])
        else:
            if ("vertices" in spec) == ("halfspaces" in spec):
                raise ConfigError("polytope needs exactly one of 'vertices' or 'halfspaces'")
            if "vertices" in spec:
                body = Polytope.from_vertices(spec["vertices"])
            else:
                body = Polytope.from_halfspaces(spec["halfspaces"])
    except KeyError as exc:
        raise ConfigError(f"{kind} description is missing field {exc.args[0]!r}") from None
    if body.dim != n:
        raise ConfigError(f"declared dim {n} does not match the data (dim {body.dim})")
    return body
