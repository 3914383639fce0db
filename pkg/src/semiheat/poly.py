"""Exact sparse multivariate polynomials over the rationals.

A monomial is an exponent tuple with one entry per variable; a polynomial
maps monomials to nonzero ``Fraction`` coefficients.  The zero polynomial
is the empty map, so dict equality is polynomial equality and every
operation is exact.  Floating point enters only through ``eval_at``.

Example (dim 2):  x0^2*x1 + 3  ->  {(2, 1): Fraction(1), (0, 0): Fraction(3)}
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

Monomial = tuple[int, ...]

Rational = int | Fraction


def check_monomial(mono: Monomial, dim: int) -> Monomial:
    """Validate an exponent tuple: right length, all entries >= 0."""
    mono = tuple(mono)
    if len(mono) != dim:
        raise ValueError(f"monomial {mono} has length {len(mono)}, expected {dim}")
    if any(e < 0 for e in mono):
        raise ValueError(f"monomial {mono} has a negative exponent")
    return mono


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(i + j for i, j in zip(a, b))


def monomial_degree(a: Monomial) -> int:
    return sum(a)


def submultiindices(alpha: Monomial, step: int = 1) -> Iterable[Monomial]:
    """All mu <= alpha componentwise, each component stepping by ``step``."""
    return product(*(range(0, a + 1, step) for a in alpha))


def multi_binomial(alpha: Monomial, mu: Monomial) -> int:
    """Product of componentwise binomial coefficients C(alpha_j, mu_j)."""
    return math.prod(math.comb(a, m) for a, m in zip(alpha, mu))


def double_factorial(k: int) -> int:
    """(k)!! with the convention (-1)!! = 1."""
    return math.prod(range(k, 0, -2)) if k > 0 else 1


class Polynomial:
    """Immutable sparse polynomial with Fraction coefficients.

    Construction canonicalizes: zero coefficients are dropped and all
    coefficients are converted to ``Fraction``.  Instances are never
    mutated after construction, so they are safe to share across threads.
    """

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Mapping[Monomial, Rational] | None = None):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                c = Fraction(c)
                if c:
                    clean[check_monomial(mono, dim)] = c
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("Polynomial is immutable")

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, c: Rational) -> "Polynomial":
        return cls(dim, {(0,) * dim: Fraction(c)})

    @classmethod
    def variable(cls, dim: int, axis: int) -> "Polynomial":
        if not 0 <= axis < dim:
            raise ValueError(f"axis {axis} out of range for dim {dim}")
        mono = tuple(1 if j == axis else 0 for j in range(dim))
        return cls(dim, {mono: Fraction(1)})

    @classmethod
    def monomial(cls, mono: Monomial, coeff: Rational = 1) -> "Polynomial":
        return cls(len(mono), {tuple(mono): Fraction(coeff)})

    # ------------------------------------------------------------------
    # ring operations

    def _require_same_dim(self, other: "Polynomial") -> None:
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} != {other.dim}")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._require_same_dim(other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) + c
        return Polynomial(self.dim, out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.dim, {m: -c for m, c in self.terms.items()})

    def scale(self, c: Rational) -> "Polynomial":
        c = Fraction(c)
        return Polynomial(self.dim, {m: c * v for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._require_same_dim(other)
        out: dict[Monomial, Fraction] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                mono = monomial_mul(ma, mb)
                out[mono] = out.get(mono, Fraction(0)) + ca * cb
        return Polynomial(self.dim, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.dim, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # ------------------------------------------------------------------
    # calculus

    def deriv(self, axis: int, order: int = 1) -> "Polynomial":
        """Partial derivative d^order / dx_axis^order."""
        out = self
        for _ in range(order):
            terms: dict[Monomial, Fraction] = {}
            for mono, c in out.terms.items():
                e = mono[axis]
                if e:
                    down = mono[:axis] + (e - 1,) + mono[axis + 1:]
                    terms[down] = terms.get(down, Fraction(0)) + c * e
            out = Polynomial(self.dim, terms)
        return out

    def deriv_multi(self, mu: Monomial) -> "Polynomial":
        out = self
        for axis, order in enumerate(mu):
            if order:
                out = out.deriv(axis, order)
            if not out.terms:
                break
        return out

    def gradient(self) -> list["Polynomial"]:
        return [self.deriv(j) for j in range(self.dim)]

    def laplacian(self) -> "Polynomial":
        out = Polynomial.zero(self.dim)
        for j in range(self.dim):
            out = out + self.deriv(j, 2)
        return out

    # ------------------------------------------------------------------
    # structure

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((monomial_degree(m) for m in self.terms), default=-1)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.dim == other.dim
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return hash((self.dim, tuple(sorted(self.terms.items()))))

    def reflect(self) -> "Polynomial":
        """V(x) -> V(-x)."""
        return Polynomial(
            self.dim,
            {m: c if monomial_degree(m) % 2 == 0 else -c for m, c in self.terms.items()},
        )

    def is_odd(self) -> bool:
        return self.reflect() == -self

    def is_even(self) -> bool:
        return self.reflect() == self

    def substitute_linear(self, matrix: Sequence[Sequence[Rational]]) -> "Polynomial":
        """V(x) -> V(M x) for an exact rational matrix M (used for rotations)."""
        if len(matrix) != self.dim or any(len(row) != self.dim for row in matrix):
            raise ValueError("matrix shape must be dim x dim")
        images = [
            sum(
                (Polynomial.variable(self.dim, j).scale(Fraction(matrix[i][j]))
                 for j in range(self.dim)),
                Polynomial.zero(self.dim),
            )
            for i in range(self.dim)
        ]
        out = Polynomial.zero(self.dim)
        for mono, c in self.terms.items():
            term = Polynomial.constant(self.dim, c)
            for axis, e in enumerate(mono):
                if e:
                    term = term * images[axis] ** e
            out = out + term
        return out

    # ------------------------------------------------------------------
    # evaluation / display

    def eval_at(self, point: Sequence[float]) -> float:
        if len(point) != self.dim:
            raise ValueError("point has wrong dimension")
        total = 0.0
        for mono, c in self.terms.items():
            total += float(c) * math.prod(point[j] ** e for j, e in enumerate(mono) if e)
        return total

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono, c in sorted(self.terms.items()):
            factors = [
                f"x{j}" if e == 1 else f"x{j}^{e}"
                for j, e in enumerate(mono)
                if e
            ]
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            elif c == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(str(c) + "*" + "*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Polynomial({self.dim}, {self.terms!r})"


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    """Exact product of two polynomials of the same dimension."""
    return p * q


def radius_squared(dim: int) -> Polynomial:
    """|x|^2 as a polynomial."""
    out = Polynomial.zero(dim)
    for j in range(dim):
        out = out + Polynomial.variable(dim, j) ** 2
    return out
