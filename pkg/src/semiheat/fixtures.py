"""Builtin potentials used by the CLI and the validation suite.

Symbolic fixtures are exact polynomials; ``radial_bump`` is a compactly
supported C^1 potential that only the numeric tier can handle (a nonzero
compactly supported function is never a polynomial).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .poly import Polynomial, radius_squared

SYMBOLIC_FIXTURES = ("zero", "linear", "quadratic", "quartic", "odd-cubic")


def symbolic_fixture(name: str, dim: int) -> Polynomial:
    if name == "zero":
        return Polynomial.zero(dim)
    if name == "linear":
        return Polynomial.variable(dim, 0)
    if name == "quadratic":
        return radius_squared(dim)
    if name == "quartic":
        return radius_squared(dim) ** 2
    if name == "odd-cubic":
        return Polynomial.variable(dim, 0) ** 3
    raise KeyError(f"unknown symbolic fixture {name!r}")


@dataclass(frozen=True)
class RadialBump:
    """V(x) = (r - a)^2 (b - r)^2 on a <= |x| <= b, zero outside."""

    a: float = 0.5
    b: float = 1.5

    def __call__(self, point) -> float:
        r = math.sqrt(float(np.dot(point, point)))
        if self.a <= r <= self.b:
            return (r - self.a) ** 2 * (self.b - r) ** 2
        return 0.0


@dataclass(frozen=True)
class RadialTimesLinearHarmonic:
    """V(x) = f(r) x_1 / r with f(r) = r^power: a degree-one spherical
    harmonic profile, so dV/dr = (f'/f) V = (power/r) V on every sphere."""

    power: int = 2

    def __call__(self, point) -> float:
        r = math.sqrt(float(np.dot(point, point)))
        if r == 0.0:
            return 0.0
        return r**self.power * float(point[0]) / r

    def radial_derivative(self, point) -> float:
        r = math.sqrt(float(np.dot(point, point)))
        if r == 0.0:
            return 0.0
        return self.power * r ** (self.power - 1) * float(point[0]) / r
