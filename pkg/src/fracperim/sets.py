"""The contract every set handed to an s-perimeter estimator must satisfy.

A set is *evaluable* when it can answer membership queries, report the
intervals in which an arbitrary line meets it, and sample itself uniformly.
Sets that are unions of star-shaped pieces also expose those pieces, which
the stratified samplers use to place points close to the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .constants import unit_ball_volume
from .errors import ParameterError, PreconditionError
from .montecarlo import uniform_in_ball


@dataclass(frozen=True)
class LineIntervals:
    """Intersections of lines ``p + t d`` with a set.

    ``starts[i, k] < ends[i, k]`` delimit the k-th inside interval of line i,
    sorted along the line; unused slots hold NaN.
    """

    starts: np.ndarray
    ends: np.ndarray

    @classmethod
    def empty(cls, m: int) -> "LineIntervals":
        nan = np.full((m, 1), np.nan)
        return cls(nan, nan.copy())

    @classmethod
    def single(cls, t0: np.ndarray, t1: np.ndarray) -> "LineIntervals":
        t0 = np.asarray(t0, dtype=float)
        t1 = np.asarray(t1, dtype=float)
        hit = t1 > t0
        return cls(np.where(hit, t0, np.nan)[:, None], np.where(hit, t1, np.nan)[:, None])

    @property
    def lengths(self) -> np.ndarray:
        return np.nansum(self.ends - self.starts, axis=1)

    @property
    def counts(self) -> np.ndarray:
        return np.sum(~np.isnan(self.starts), axis=1)

    def union(self, other: "LineIntervals") -> "LineIntervals":
        """Union of the intervals of two *disjoint* sets along the same lines."""
        s = np.concatenate([self.starts, other.starts], axis=1)
        e = np.concatenate([self.ends, other.ends], axis=1)
        order = np.argsort(np.where(np.isnan(s), np.inf, s), axis=1, kind="stable")
        s = np.take_along_axis(s, order, axis=1)
        e = np.take_along_axis(e, order, axis=1)
        keep = ~np.all(np.isnan(s), axis=0)
        if not keep.any():
            keep[0] = True
        return LineIntervals(s[:, keep], e[:, keep])


@dataclass(frozen=True)
class StarComponent:
    """A piece of a set that is star-shaped about ``center``.

    ``radial(dirs)`` returns the distance from ``center`` to the boundary of
    the piece along each unit direction; ``sample(rng, m)`` draws ``m``
    uniform points of the piece. ``inradius`` is a radius r with
    ``center + (1 - tau) B_r + tau y`` inside the piece for every boundary
    point y (true for convex pieces with ``B(center, r)`` inside); 0 when
    no such guarantee is available.
    """

    center: np.ndarray
    volume: float
    radial: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    sample: Callable[[np.random.Generator, int], np.ndarray] = field(repr=False)
    inradius: float = 0.0


@runtime_checkable
class EvaluableSet(Protocol):
    dim: int
    convex: bool

    def volume(self) -> float: ...

    def barycenter(self) -> np.ndarray: ...

    def bounding_ball(self) -> tuple[np.ndarray, float]: ...

    def contains(self, x: np.ndarray) -> np.ndarray: ...

    def line_intervals(self, p: np.ndarray, d: np.ndarray) -> LineIntervals: ...

    def star_components(self) -> list[StarComponent]: ...

    def sample_uniform(self, rng: np.random.Generator, m: int) -> np.ndarray: ...


def rejection_sample(
    contains: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    rng: np.random.Generator,
    m: int,
    acceptance_hint: float = 0.5,
) -> np.ndarray:
    """Uniform points of a set by rejection from the box ``[lo, hi]``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out: list[np.ndarray] = []
    have = 0
    acc = max(acceptance_hint, 1e-3)
    while have < m:
        k = int((m - have) / acc * 1.2) + 16
        x = lo + (hi - lo) * rng.random((k, lo.size))
        x = x[contains(x)]
        if x.shape[0]:
            acc = max(x.shape[0] / k, 1e-3)
        out.append(x)
        have += x.shape[0]
    return np.concatenate(out)[:m]


def ball_chords(center: np.ndarray, radius: float, p: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entry and exit parameters of lines ``p + t d`` (unit ``d``) through a ball; NaN when missed."""
    w = p - center
    b = np.einsum("ij,ij->i", w, d)
    c = np.einsum("ij,ij->i", w, w) - radius * radius
    disc = b * b - c
    root = np.sqrt(np.where(disc > 0, disc, np.nan))
    return -b - root, -b + root


class EmptySet:
    """The empty subset of R^n; its s-perimeter is exactly zero."""

    convex = True

    def __init__(self, dim: int):
        if dim < 1:
            raise ParameterError(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)

    def __repr__(self) -> str:
        return f"EmptySet(dim={self.dim})"

    def volume(self) -> float:
        return 0.0

    def measure(self) -> float:
        return 0.0

    def barycenter(self) -> np.ndarray:
        raise PreconditionError("the empty set has no barycenter")

    def bounding_ball(self) -> tuple[np.ndarray, float]:
        return np.zeros(self.dim), 0.0

    def contains(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(np.atleast_2d(x).shape[0], dtype=bool)

    def line_intervals(self, p: np.ndarray, d: np.ndarray) -> LineIntervals:
        return LineIntervals.empty(np.atleast_2d(p).shape[0])

    def star_components(self) -> list[StarComponent]:
        return []

    def sample_uniform(self, rng: np.random.Generator, m: int) -> np.ndarray:
        raise PreconditionError("cannot sample the empty set")


class TwoBallSet:
    """Union of a ball of radius ``(1 - eps^n)^(1/n)`` at the origin and a ball
    of radius ``eps`` centred at ``separation * e_1``; total volume omega_n.

    This is the standard non-convex configuration for which the barycentric
    asymmetry saturates at 2 while the s-deficit stays of order eps^(n-s).
    """

    convex = False

    def __init__(self, eps: float, separation: float, dim: int = 2):
        if not 0.0 < eps < 1.0:
            raise ParameterError(f"eps must lie in (0, 1), got {eps}")
        self.dim = int(dim)
        self.eps = float(eps)
        self.big_radius = (1.0 - eps**dim) ** (1.0 / dim)
        if separation <= self.big_radius + eps:
            raise PreconditionError(
                f"balls overlap: separation {separation} <= {self.big_radius + eps}"
            )
        self.separation = float(separation)
        e1 = np.zeros(dim)
        e1[0] = 1.0
        self.centers = (np.zeros(dim), separation * e1)
        self.radii = (self.big_radius, self.eps)

    def __repr__(self) -> str:
        return f"TwoBallSet(eps={self.eps}, separation={self.separation}, dim={self.dim})"

    @staticmethod
    def min_separation(eps: float, dim: int = 2) -> float:
        """Smallest separation for which the unit ball about the barycenter
        misses both components (so the barycentric asymmetry is exactly 2).

        With the small ball at distance L, the barycenter sits at eps^n L e_1;
        disjointness from the big ball needs eps^n L >= r + 1 and from the
        small one (1 - eps^n) L >= 1 + eps.
        """
        r = (1.0 - eps**dim) ** (1.0 / dim)
        return max((r + 1.0) / eps**dim, (1.0 + eps) / (1.0 - eps**dim))

    def component_volumes(self) -> tuple[float, float]:
        w = unit_ball_volume(self.dim)
        return w * self.big_radius**self.dim, w * self.eps**self.dim

    def volume(self) -> float:
        return float(sum(self.component_volumes()))

    def barycenter(self) -> np.ndarray:
        v1, v2 = self.component_volumes()
        return (v1 * self.centers[0] + v2 * self.centers[1]) / (v1 + v2)

    def bounding_ball(self) -> tuple[np.ndarray, float]:
        lo = -self.big_radius
        hi = self.separation + self.eps
        c = np.zeros(self.dim)
        c[0] = 0.5 * (lo + hi)
        return c, 0.5 * (hi - lo)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        inside = np.zeros(x.shape[0], dtype=bool)
        for c, r in zip(self.centers, self.radii):
            inside |= np.sum((x - c) ** 2, axis=1) < r * r
        return inside

    def line_intervals(self, p: np.ndarray, d: np.ndarray) -> LineIntervals:
        parts = [LineIntervals.single(*ball_chords(c, r, p, d)) for c, r in zip(self.centers, self.radii)]
        return parts[0].union(parts[1])

    def star_components(self) -> list[StarComponent]:
        comps = []
        for c, r, v in zip(self.centers, self.radii, self.component_volumes()):
            comps.append(
                StarComponent(
                    center=c,
                    volume=v,
                    radial=lambda dirs, r=r: np.full(np.atleast_2d(dirs).shape[0], r),
                    sample=lambda rng, m, c=c, r=r: c + r * uniform_in_ball(rng, m, self.dim),
                    inradius=r,
                )
            )
        return comps

    def sample_uniform(self, rng: np.random.Generator, m: int) -> np.ndarray:
        v1, v2 = self.component_volumes()
        k = rng.binomial(m, v2 / (v1 + v2))
        a = self.centers[0] + self.radii[0] * uniform_in_ball(rng, m - k, self.dim)
        b = self.centers[1] + self.radii[1] * uniform_in_ball(rng, k, self.dim)
        return np.concatenate([a, b])
