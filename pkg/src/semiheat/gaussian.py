"""Gaussian-weighted Laurent series in the rescaled time s.

``GaussianLaurent`` represents  exp(-s|x|^2) * sum_j s^j P_j(x)  with
finitely many integer exponents j and exact polynomial coefficients P_j.
``HSeries`` stacks GaussianLaurent values by integer powers of the
semiclassical parameter, with a truncation order so arithmetic on
truncated expansions stays consistent.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

from .poly import Polynomial, Rational


class GaussianLaurent:
    """exp(-s|x|^2) * (Laurent polynomial in s with Polynomial coefficients)."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Mapping[int, Polynomial] | None = None):
        clean: dict[int, Polynomial] = {}
        if terms:
            for j, p in terms.items():
                if p.dim != dim:
                    raise ValueError("coefficient dimension mismatch")
                if p:
                    clean[int(j)] = p
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("GaussianLaurent is immutable")

    @classmethod
    def zero(cls, dim: int) -> "GaussianLaurent":
        return cls(dim)

    @classmethod
    def from_poly(cls, p: Polynomial, s_exp: int = 0) -> "GaussianLaurent":
        return cls(p.dim, {s_exp: p})

    def __add__(self, other: "GaussianLaurent") -> "GaussianLaurent":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        out = dict(self.terms)
        for j, p in other.terms.items():
            out[j] = out[j] + p if j in out else p
        return GaussianLaurent(self.dim, out)

    def __sub__(self, other: "GaussianLaurent") -> "GaussianLaurent":
        return self + other.scale(-1)

    def scale(self, c: Rational) -> "GaussianLaurent":
        return GaussianLaurent(self.dim, {j: p.scale(c) for j, p in self.terms.items()})

    def shift_s(self, k: int) -> "GaussianLaurent":
        """Multiply by s^k."""
        return GaussianLaurent(self.dim, {j + k: p for j, p in self.terms.items()})

    def mul_poly(self, q: Polynomial) -> "GaussianLaurent":
        return GaussianLaurent(self.dim, {j: p * q for j, p in self.terms.items()})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GaussianLaurent)
            and self.dim == other.dim
            and self.terms == other.terms
        )

    def s_support(self) -> list[int]:
        return sorted(self.terms)

    def eval_at(self, s: float, point: Sequence[float]) -> float:
        """Numeric value, including the Gaussian factor."""
        r2 = sum(v * v for v in point)
        poly_part = sum(p.eval_at(point) * s**j for j, p in self.terms.items())
        return math.exp(-s * r2) * poly_part

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for j, p in sorted(self.terms.items()):
            pstr = str(p)
            if " " in pstr:
                pstr = f"({pstr})"
            if j == 0:
                parts.append(pstr)
            else:
                parts.append(f"s^{j}*{pstr}")
        return (" + ".join(parts) + " * exp(-s|x|^2)").replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"GaussianLaurent({self.dim}, {{{', '.join(f'{j}: {p!r}' for j, p in sorted(self.terms.items()))}}})"


class HSeries:
    """Truncated series  sum_k hbar^k G_k  with GaussianLaurent coefficients.

    ``order`` is the highest retained hbar exponent (None keeps everything);
    insertions above the order are silently dropped so sums of consistently
    truncated series remain consistently truncated.
    """

    __slots__ = ("dim", "order", "coeffs")

    def __init__(
        self,
        dim: int,
        coeffs: Mapping[int, GaussianLaurent] | None = None,
        order: int | None = None,
    ):
        clean: dict[int, GaussianLaurent] = {}
        if coeffs:
            for k, g in coeffs.items():
                if g.dim != dim:
                    raise ValueError("coefficient dimension mismatch")
                if g and (order is None or k <= order):
                    clean[int(k)] = g
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("HSeries is immutable")

    def __add__(self, other: "HSeries") -> "HSeries":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        orders = [o for o in (self.order, other.order) if o is not None]
        order = min(orders) if orders else None
        out = {k: g for k, g in self.coeffs.items() if order is None or k <= order}
        for k, g in other.coeffs.items():
            if order is not None and k > order:
                continue
            out[k] = out[k] + g if k in out else g
        return HSeries(self.dim, out, order)

    def truncate(self, order: int) -> "HSeries":
        return HSeries(self.dim, self.coeffs, order)

    def coefficient(self, k: int) -> GaussianLaurent:
        return self.coeffs.get(k, GaussianLaurent.zero(self.dim))

    def support(self) -> list[int]:
        return sorted(self.coeffs)

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HSeries)
            and self.dim == other.dim
            and self.coeffs == other.coeffs
        )

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {g!r}" for k, g in sorted(self.coeffs.items()))
        return f"HSeries({self.dim}, {{{body}}}, order={self.order})"
