"""Dimensional constants of the unit ball."""

from dataclasses import dataclass
from math import gamma, pi


def unit_ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n (omega_n)."""
    if n < 0:
        raise ValueError(f"dimension must be >= 0, got {n}")
    return pi ** (n / 2) / gamma(n / 2 + 1)


def unit_sphere_area(n: int) -> float:
    """H^{n-1} measure of the unit sphere in R^n; for n=1 the two points {-1, 1}."""
    return n * unit_ball_volume(n)


@dataclass(frozen=True)
class DimensionalConstants:
    n: int
    unit_ball_volume: float
    unit_sphere_area: float

    @classmethod
    def of(cls, n: int) -> "DimensionalConstants":
        if n < 1:
            raise ValueError(f"dimension must be >= 1, got {n}")
        return cls(n, unit_ball_volume(n), unit_sphere_area(n))
