"""Differential operators with polynomial coefficients, and their grading
in the semiclassical parameter.

A ``DiffOp`` is a finite sum  sum_alpha  a_alpha(x) * d^alpha  where the
a_alpha are exact-rational polynomials and d^alpha is the plain partial
derivative of multi-order alpha.  Composition expands derivatives past
coefficients with the Leibniz rule, so the algebra is associative and
exact.  An ``HGradedOp`` attaches an integer grade (the power of the
semiclassical parameter hbar) to each DiffOp; products convolve grades.
"""

from __future__ import annotations

from typing import Mapping

from .poly import (
    Monomial,
    Polynomial,
    Rational,
    check_monomial,
    monomial_degree,
    monomial_mul,
    multi_binomial,
    submultiindices,
)


class GradingError(ValueError):
    """An operator violates the expected hbar-grading structure."""


class DiffOp:
    """Immutable differential operator  sum_alpha a_alpha(x) d^alpha."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Mapping[Monomial, Polynomial] | None = None):
        clean: dict[Monomial, Polynomial] = {}
        if terms:
            for alpha, coeff in terms.items():
                if coeff.dim != dim:
                    raise ValueError("coefficient dimension mismatch")
                if coeff:
                    clean[check_monomial(alpha, dim)] = coeff
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("DiffOp is immutable")

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def zero(cls, dim: int) -> "DiffOp":
        return cls(dim)

    @classmethod
    def identity(cls, dim: int) -> "DiffOp":
        return cls(dim, {(0,) * dim: Polynomial.constant(dim, 1)})

    @classmethod
    def multiplication(cls, f: Polynomial) -> "DiffOp":
        """The operator u -> f * u."""
        return cls(f.dim, {(0,) * f.dim: f})

    @classmethod
    def partial(cls, dim: int, axis: int, order: int = 1) -> "DiffOp":
        alpha = tuple(order if j == axis else 0 for j in range(dim))
        return cls(dim, {alpha: Polynomial.constant(dim, 1)})

    # ------------------------------------------------------------------
    # linear structure

    def _require_same_dim(self, other: "DiffOp") -> None:
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} != {other.dim}")

    def __add__(self, other: "DiffOp") -> "DiffOp":
        self._require_same_dim(other)
        out = dict(self.terms)
        for alpha, coeff in other.terms.items():
            out[alpha] = out[alpha] + coeff if alpha in out else coeff
        return DiffOp(self.dim, out)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def __neg__(self) -> "DiffOp":
        return DiffOp(self.dim, {a: -c for a, c in self.terms.items()})

    def scale(self, c: Rational) -> "DiffOp":
        return DiffOp(self.dim, {a: p.scale(c) for a, p in self.terms.items()})

    # ------------------------------------------------------------------
    # operator algebra

    def apply(self, p: Polynomial) -> Polynomial:
        """Apply the operator to a polynomial, exactly."""
        if p.dim != self.dim:
            raise ValueError("dimension mismatch")
        out = Polynomial.zero(self.dim)
        for alpha, coeff in self.terms.items():
            out = out + coeff * p.deriv_multi(alpha)
        return out

    def compose(self, other: "DiffOp") -> "DiffOp":
        """Operator composition (self o other).

        Uses  d^a (b(x) u) = sum_{mu <= a} C(a, mu) (d^mu b) d^{a-mu} u
        to push derivative monomials past the right factor's coefficients.
        """
        self._require_same_dim(other)
        out: dict[Monomial, Polynomial] = {}
        for a, pa in self.terms.items():
            for b, pb in other.terms.items():
                for mu in submultiindices(a):
                    db = pb.deriv_multi(mu)
                    if not db:
                        continue
                    coeff = (pa * db).scale(multi_binomial(a, mu))
                    alpha = monomial_mul(tuple(i - j for i, j in zip(a, mu)), b)
                    out[alpha] = out[alpha] + coeff if alpha in out else coeff
        return DiffOp(self.dim, out)

    def commutator(self, other: "DiffOp") -> "DiffOp":
        return self.compose(other) - other.compose(self)

    # ------------------------------------------------------------------
    # structure

    def degree(self) -> int:
        """Highest derivative order present; -1 for the zero operator."""
        return max((monomial_degree(a) for a in self.terms), default=-1)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DiffOp)
            and self.dim == other.dim
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return hash((self.dim, tuple(sorted((a, hash(p)) for a, p in self.terms.items()))))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for alpha, coeff in sorted(self.terms.items()):
            dstr = "*".join(
                f"d{j}" if e == 1 else f"d{j}^{e}" for j, e in enumerate(alpha) if e
            )
            cstr = str(coeff)
            if " " in cstr:
                cstr = f"({cstr})"
            parts.append(f"{cstr}*{dstr}" if dstr else cstr)
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"DiffOp({self.dim}, {{{', '.join(f'{a}: {p!r}' for a, p in self.terms.items())}}})"


def op_compose(d1: DiffOp, d2: DiffOp) -> DiffOp:
    """(d1 o d2) u = d1(d2 u) for all polynomials u."""
    return d1.compose(d2)


def op_commutator(d1: DiffOp, d2: DiffOp) -> DiffOp:
    """[d1, d2] = d1 o d2 - d2 o d1."""
    return d1.commutator(d2)


def op_apply(d: DiffOp, p: Polynomial) -> Polynomial:
    return d.apply(p)


class HGradedOp:
    """A finite sum  sum_g hbar^g D_g  of differential operators.

    Grades are plain integers; products convolve them.  The Kantorovitz
    operators X_m live here with grade support {m+i : 1 <= i <= m,
    i = m mod 2} and grade-(m+i) entry of derivative order <= i-1.
    """

    __slots__ = ("dim", "grades")

    def __init__(self, dim: int, grades: Mapping[int, DiffOp] | None = None):
        clean: dict[int, DiffOp] = {}
        if grades:
            for g, op in grades.items():
                if op.dim != dim:
                    raise ValueError("grade entry dimension mismatch")
                if op:
                    clean[int(g)] = op
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "grades", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("HGradedOp is immutable")

    @classmethod
    def identity(cls, dim: int) -> "HGradedOp":
        return cls(dim, {0: DiffOp.identity(dim)})

    def __add__(self, other: "HGradedOp") -> "HGradedOp":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        out = dict(self.grades)
        for g, op in other.grades.items():
            out[g] = out[g] + op if g in out else op
        return HGradedOp(self.dim, out)

    def __sub__(self, other: "HGradedOp") -> "HGradedOp":
        return self + other.scale(-1)

    def scale(self, c: Rational) -> "HGradedOp":
        return HGradedOp(self.dim, {g: op.scale(c) for g, op in self.grades.items()})

    def compose(self, other: "HGradedOp") -> "HGradedOp":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        out: dict[int, DiffOp] = {}
        for g1, op1 in self.grades.items():
            for g2, op2 in other.grades.items():
                term = op1.compose(op2)
                if not term:
                    continue
                g = g1 + g2
                out[g] = out[g] + term if g in out else term
        return HGradedOp(self.dim, out)

    def __pow__(self, k: int) -> "HGradedOp":
        if k < 0:
            raise ValueError("negative power")
        out = HGradedOp.identity(self.dim)
        for _ in range(k):
            out = out.compose(self)
        return out

    def __bool__(self) -> bool:
        return bool(self.grades)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HGradedOp)
            and self.dim == other.dim
            and self.grades == other.grades
        )

    def max_grade(self) -> int:
        return max(self.grades, default=0)

    def __str__(self) -> str:
        if not self.grades:
            return "0"
        return " + ".join(f"h^{g}*[{op}]" for g, op in sorted(self.grades.items()))


def check_grading(x: HGradedOp, m: int) -> None:
    """Verify the grade support and degree bounds of the m-th Kantorovitz
    operator; raise GradingError on any violation."""
    if m == 0:
        if x != HGradedOp.identity(x.dim):
            raise GradingError("X_0 must be the identity")
        return
    for g, op in x.grades.items():
        i = g - m
        if not (1 <= i <= m) or (i - m) % 2 != 0:
            raise GradingError(f"grade {g} not of the form m+i, i=m mod 2, for m={m}")
        if op.degree() > i - 1:
            raise GradingError(
                f"grade {g} entry has degree {op.degree()} > {i - 1} for m={m}"
            )
