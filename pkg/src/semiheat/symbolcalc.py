"""Symbol calculus for the graded Kantorovitz operators.

Operators are paired with left Kohn-Nirenberg symbols through D = -i d/dx,
so an operator  sum_alpha a_alpha(x) d^alpha  has full symbol
sum_alpha a_alpha(x) (i xi)^alpha.  Coefficients are Gaussian rationals
(exact rational real and imaginary parts); the imaginary units introduced
by the 1/sqrt(-1) factors in the recursions must cancel in every final
real quantity, and that cancellation is asserted rather than assumed.

The graded recursions mirror the operator recursion
X_{m+1}^i = -[Lap/2, X_m^{i-1}] + [|x|^2/2, X_m^{i+1}] + V X_m^{i-1}:

  full symbol:   p -> (sum_r (xi_r/i) d_{x_r} - (1/2) d_{x_r}^2 + V) p   [grade +2]
                    + (sum_r  i x_r d_{xi_r} + (1/2) d_{xi_r}^2) p       [grade +0]

  principal:     q -> (1/i) sum_r xi_r d_{x_r} q                         [grade +2]
                    - (1/i) sum_r x_r d_{xi_r} q                         [grade +0]

with the subprincipal recursion coupling to the principal chain.  The
principal symbols determine the leading diagonal coefficient for odd m:
substituting each monomial xi^alpha by (-i)^{|alpha|} c_alpha (with c_alpha
the diagonal Gaussian derivative constant) and attaching s^{-(|alpha|)/2}
reproduces the lowest hbar coefficient of ``diagonal_eval`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .diffop import DiffOp, HGradedOp, check_grading
from .gaussian import GaussianLaurent
from .kantorovitz import derivative_constant
from .poly import (
    Monomial,
    Polynomial,
    Rational,
    monomial_degree,
    monomial_mul,
)


@dataclass(frozen=True)
class GaussRat:
    """Exact complex rational a + b*i."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def real(cls, c: Rational) -> "GaussRat":
        return cls(Fraction(c), Fraction(0))

    @classmethod
    def i_power(cls, k: int) -> "GaussRat":
        return (ONE, I, -ONE, -I)[k % 4]

    def __add__(self, other: "GaussRat") -> "GaussRat":
        return GaussRat(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "GaussRat") -> "GaussRat":
        return GaussRat(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "GaussRat":
        return GaussRat(-self.re, -self.im)

    def __mul__(self, other) -> "GaussRat":
        if isinstance(other, (int, Fraction)):
            return GaussRat(self.re * other, self.im * other)
        return GaussRat(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def is_real(self) -> bool:
        return not self.im


ONE = GaussRat(Fraction(1), Fraction(0))
I = GaussRat(Fraction(0), Fraction(1))
INV_I = -I  # 1/i = -i


class PhaseSymbol:
    """Polynomial in (x, xi) with GaussRat coefficients.

    Terms are keyed by (xi multi-index, x multi-index).
    """

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int,
                 terms: Mapping[tuple[Monomial, Monomial], GaussRat] | None = None):
        clean: dict[tuple[Monomial, Monomial], GaussRat] = {}
        if terms:
            for (xi, x), z in terms.items():
                if len(xi) != dim or len(x) != dim:
                    raise ValueError("multi-index length mismatch")
                if z:
                    clean[(tuple(xi), tuple(x))] = z
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("PhaseSymbol is immutable")

    @classmethod
    def zero(cls, dim: int) -> "PhaseSymbol":
        return cls(dim)

    @classmethod
    def from_poly(cls, p: Polynomial) -> "PhaseSymbol":
        z = (0,) * p.dim
        return cls(p.dim, {(z, mono): GaussRat.real(c) for mono, c in p.terms.items()})

    def __add__(self, other: "PhaseSymbol") -> "PhaseSymbol":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        out = dict(self.terms)
        for key, z in other.terms.items():
            out[key] = out[key] + z if key in out else z
        return PhaseSymbol(self.dim, out)

    def __sub__(self, other: "PhaseSymbol") -> "PhaseSymbol":
        return self + other.scale(-ONE)

    def scale(self, z) -> "PhaseSymbol":
        if isinstance(z, (int, Fraction)):
            z = GaussRat.real(z)
        return PhaseSymbol(self.dim, {k: z * v for k, v in self.terms.items()})

    def dx(self, axis: int) -> "PhaseSymbol":
        out: dict[tuple[Monomial, Monomial], GaussRat] = {}
        for (xi, x), z in self.terms.items():
            e = x[axis]
            if e:
                key = (xi, x[:axis] + (e - 1,) + x[axis + 1:])
                val = z * e
                out[key] = out[key] + val if key in out else val
        return PhaseSymbol(self.dim, out)

    def dxi(self, axis: int) -> "PhaseSymbol":
        out: dict[tuple[Monomial, Monomial], GaussRat] = {}
        for (xi, x), z in self.terms.items():
            e = xi[axis]
            if e:
                key = (xi[:axis] + (e - 1,) + xi[axis + 1:], x)
                val = z * e
                out[key] = out[key] + val if key in out else val
        return PhaseSymbol(self.dim, out)

    def mul_x(self, axis: int) -> "PhaseSymbol":
        return PhaseSymbol(self.dim, {
            (xi, x[:axis] + (x[axis] + 1,) + x[axis + 1:]): z
            for (xi, x), z in self.terms.items()
        })

    def mul_xi(self, axis: int) -> "PhaseSymbol":
        return PhaseSymbol(self.dim, {
            (xi[:axis] + (xi[axis] + 1,) + xi[axis + 1:], x): z
            for (xi, x), z in self.terms.items()
        })

    def mul_poly(self, p: Polynomial) -> "PhaseSymbol":
        if p.dim != self.dim:
            raise ValueError("dimension mismatch")
        out: dict[tuple[Monomial, Monomial], GaussRat] = {}
        for (xi, x), z in self.terms.items():
            for mono, c in p.terms.items():
                key = (xi, monomial_mul(x, mono))
                val = z * c
                out[key] = out[key] + val if key in out else val
        return PhaseSymbol(self.dim, out)

    def xi_homogeneous(self, k: int) -> "PhaseSymbol":
        """The part of exact xi-degree k."""
        return PhaseSymbol(self.dim, {
            (xi, x): z for (xi, x), z in self.terms.items()
            if monomial_degree(xi) == k
        })

    def xi_degree(self) -> int:
        return max((monomial_degree(xi) for xi, _ in self.terms), default=-1)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PhaseSymbol)
            and self.dim == other.dim
            and self.terms == other.terms
        )

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: ({z.re})+({z.im})i" for k, z in sorted(self.terms.items()))
        return f"PhaseSymbol({self.dim}, {{{body}}})"


class GradedSymbol:
    """Map from hbar grade to PhaseSymbol, mirroring HGradedOp."""

    __slots__ = ("dim", "grades")

    def __init__(self, dim: int, grades: Mapping[int, PhaseSymbol] | None = None):
        clean: dict[int, PhaseSymbol] = {}
        if grades:
            for g, sym in grades.items():
                if sym.dim != dim:
                    raise ValueError("grade entry dimension mismatch")
                if sym:
                    clean[int(g)] = sym
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "grades", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("GradedSymbol is immutable")

    def __bool__(self) -> bool:
        return bool(self.grades)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GradedSymbol)
            and self.dim == other.dim
            and self.grades == other.grades
        )

    def grade(self, g: int) -> PhaseSymbol:
        return self.grades.get(g, PhaseSymbol.zero(self.dim))


def full_symbol(op: DiffOp) -> PhaseSymbol:
    """Left Kohn-Nirenberg full symbol: d^alpha carries i^{|alpha|} xi^alpha."""
    out: dict[tuple[Monomial, Monomial], GaussRat] = {}
    for alpha, coeff in op.terms.items():
        phase = GaussRat.i_power(monomial_degree(alpha))
        for mono, c in coeff.terms.items():
            key = (alpha, mono)
            val = phase * c
            out[key] = out[key] + val if key in out else val
    return PhaseSymbol(op.dim, out)


def graded_full_symbol(x_op: HGradedOp) -> GradedSymbol:
    return GradedSymbol(x_op.dim, {g: full_symbol(op) for g, op in x_op.grades.items()})


def _validate_symbol_grading(sym: GradedSymbol) -> None:
    if any(g < 0 for g in sym.grades):
        raise ValueError("negative grade in graded symbol")


def full_symbol_step(p_prev: GradedSymbol, potential: Polynomial) -> GradedSymbol:
    """Full-symbol image of one Kantorovitz step (Kohn-Nirenberg composition
    with the three generators, applied grade by grade)."""
    _validate_symbol_grading(p_prev)
    dim = p_prev.dim
    out: dict[int, PhaseSymbol] = {}

    def accumulate(g: int, sym: PhaseSymbol) -> None:
        if sym:
            out[g] = out[g] + sym if g in out else sym

    for g, q in p_prev.grades.items():
        up = q.mul_poly(potential)
        down = PhaseSymbol.zero(dim)
        for r in range(dim):
            up = up + q.dx(r).mul_xi(r).scale(INV_I) - q.dx(r).dx(r).scale(Fraction(1, 2))
            down = down + q.dxi(r).mul_x(r).scale(I) + q.dxi(r).dxi(r).scale(Fraction(1, 2))
        accumulate(g + 2, up)
        accumulate(g, down)
    return GradedSymbol(dim, out)


def principal_step(sigma_prev: GradedSymbol) -> GradedSymbol:
    """Top-degree part of the full-symbol step: the first-order transport
    (1/i) sum_r (xi_r d_{x_r} [grade +2]  -  x_r d_{xi_r} [grade +0])."""
    _validate_symbol_grading(sigma_prev)
    dim = sigma_prev.dim
    out: dict[int, PhaseSymbol] = {}

    def accumulate(g: int, sym: PhaseSymbol) -> None:
        if sym:
            out[g] = out[g] + sym if g in out else sym

    for g, q in sigma_prev.grades.items():
        up = PhaseSymbol.zero(dim)
        down = PhaseSymbol.zero(dim)
        for r in range(dim):
            up = up + q.dx(r).mul_xi(r)
            down = down - q.dxi(r).mul_x(r)
        accumulate(g + 2, up.scale(INV_I))
        accumulate(g, down.scale(INV_I))
    return GradedSymbol(dim, out)


def subprincipal_step(sigma_tilde_prev: GradedSymbol, sigma_prev: GradedSymbol,
                      potential: Polynomial) -> GradedSymbol:
    """Next subprincipal symbol: transport of the previous subprincipal plus
    the second-order and potential couplings to the previous principal."""
    _validate_symbol_grading(sigma_tilde_prev)
    _validate_symbol_grading(sigma_prev)
    dim = sigma_prev.dim
    out: dict[int, PhaseSymbol] = {}

    def accumulate(g: int, sym: PhaseSymbol) -> None:
        if sym:
            out[g] = out[g] + sym if g in out else sym

    for g, q in sigma_tilde_prev.grades.items():
        up = PhaseSymbol.zero(dim)
        down = PhaseSymbol.zero(dim)
        for r in range(dim):
            up = up + q.dx(r).mul_xi(r)
            down = down - q.dxi(r).mul_x(r)
        accumulate(g + 2, up.scale(INV_I))
        accumulate(g, down.scale(INV_I))
    for g, q in sigma_prev.grades.items():
        up = q.mul_poly(potential)
        down = PhaseSymbol.zero(dim)
        for r in range(dim):
            up = up - q.dx(r).dx(r).scale(Fraction(1, 2))
            down = down + q.dxi(r).dxi(r).scale(Fraction(1, 2))
        accumulate(g + 2, up)
        accumulate(g, down)
    return GradedSymbol(dim, out)


def initial_symbol(potential: Polynomial) -> GradedSymbol:
    """Symbol of X_1 = hbar^2 V: the potential at grade 2."""
    return GradedSymbol(potential.dim, {2: PhaseSymbol.from_poly(potential)})


def principal_chain(potential: Polynomial, m_max: int) -> list[GradedSymbol]:
    """[None, sigma_1, ..., sigma_{m_max}] by iterating principal_step."""
    chain: list[GradedSymbol] = [GradedSymbol(potential.dim), initial_symbol(potential)]
    for _ in range(m_max - 1):
        chain.append(principal_step(chain[-1]))
    return chain


def subprincipal_chain(potential: Polynomial, m_max: int) -> list[GradedSymbol]:
    """[None, tilde sigma_1, ..., tilde sigma_{m_max}]; tilde sigma_1 = 0."""
    sigmas = principal_chain(potential, m_max)
    chain: list[GradedSymbol] = [GradedSymbol(potential.dim), GradedSymbol(potential.dim)]
    for m in range(1, m_max):
        chain.append(subprincipal_step(chain[m], sigmas[m], potential))
    return chain


def full_symbol_chain(potential: Polynomial, m_max: int) -> list[GradedSymbol]:
    """[None, p_1, ..., p_{m_max}] by iterating full_symbol_step."""
    chain: list[GradedSymbol] = [GradedSymbol(potential.dim), initial_symbol(potential)]
    for _ in range(m_max - 1):
        chain.append(full_symbol_step(chain[-1], potential))
    return chain


def principal_symbol_closed_form(m: int, potential: Polynomial) -> PhaseSymbol:
    """Closed form of the top principal symbol:
    ((1/i) sum_r xi_r d_{x_r})^{m-1} V."""
    if m < 1:
        raise ValueError("m must be >= 1")
    sym = PhaseSymbol.from_poly(potential)
    for _ in range(m - 1):
        nxt = PhaseSymbol.zero(potential.dim)
        for r in range(potential.dim):
            nxt = nxt + sym.dx(r).mul_xi(r)
        sym = nxt.scale(INV_I)
    return sym


def principal_part(x_op: HGradedOp, m: int) -> GradedSymbol:
    """Grade-by-grade top-homogeneous symbol part of X_m (xi-degree i-1 at
    grade m+i)."""
    return GradedSymbol(x_op.dim, {
        g: full_symbol(op).xi_homogeneous(g - m - 1)
        for g, op in x_op.grades.items()
    })


def subprincipal_part(x_op: HGradedOp, m: int) -> GradedSymbol:
    """Grade-by-grade next-to-top symbol part of X_m (xi-degree i-2)."""
    return GradedSymbol(x_op.dim, {
        g: full_symbol(op).xi_homogeneous(g - m - 2)
        for g, op in x_op.grades.items()
        if g - m - 2 >= 0
    })


def leading_diagonal_term(m: int, x_op: HGradedOp) -> GaussianLaurent:
    """Leading hbar^{m+1} coefficient of the diagonal evaluation of X_m,
    for odd m, computed from principal symbols alone.

    Each top monomial xi^alpha is replaced by (-i)^{|alpha|} c_alpha and
    weighted by s^{-|alpha|/2}; the imaginary parts must cancel exactly.
    """
    if m % 2 == 0:
        raise ValueError(
            "leading term from principal symbols is valid only for odd m; "
            "for even m the subprincipal data enters (use diagonal_eval)"
        )
    check_grading(x_op, m)
    dim = x_op.dim
    acc: dict[int, Polynomial] = {}
    for g, op in x_op.grades.items():
        i = g - m
        top = full_symbol(op).xi_homogeneous(i - 1)
        for (xi, mono), z in top.terms.items():
            c = derivative_constant(xi)
            if not c:
                continue
            w = z * GaussRat.i_power(-monomial_degree(xi))
            if not w.is_real():
                raise ArithmeticError("imaginary parts failed to cancel")
            j = -(i - 1) // 2
            p = Polynomial.monomial(mono, w.re * c)
            acc[j] = acc[j] + p if j in acc else p
    return GaussianLaurent(dim, acc)


# ----------------------------------------------------------------------
# reduction of the integrated leading term to radial moments of V

_FormalKey = tuple[Monomial, Monomial, Monomial]  # (xi, x, d^..V)


def _formal_principal_chain(m: int, dim: int) -> dict[int, dict[_FormalKey, GaussRat]]:
    """Principal chain with the potential kept symbolic: terms are
    xi^a x^b d^c V with GaussRat coefficients, per grade."""
    zero = (0,) * dim
    cur: dict[int, dict[_FormalKey, GaussRat]] = {2: {(zero, zero, zero): ONE}}
    for _ in range(m - 1):
        nxt: dict[int, dict[_FormalKey, GaussRat]] = {}

        def accumulate(g: int, key: _FormalKey, val: GaussRat) -> None:
            if val:
                slot = nxt.setdefault(g, {})
                slot[key] = slot[key] + val if key in slot else val

        for g, terms in cur.items():
            for (xi, x, dv), z in terms.items():
                for r in range(dim):
                    up = xi[:r] + (xi[r] + 1,) + xi[r + 1:]
                    # xi_r d_{x_r}: product rule over x^b and the V-derivative
                    if x[r]:
                        accumulate(
                            g + 2,
                            (up, x[:r] + (x[r] - 1,) + x[r + 1:], dv),
                            INV_I * z * x[r],
                        )
                    accumulate(g + 2, (up, x, dv[:r] + (dv[r] + 1,) + dv[r + 1:]), INV_I * z)
                    # -x_r d_{xi_r}
                    if xi[r]:
                        accumulate(
                            g,
                            (xi[:r] + (xi[r] - 1,) + xi[r + 1:],
                             x[:r] + (x[r] + 1,) + x[r + 1:], dv),
                            -(INV_I * z * xi[r]),
                        )
        cur = nxt
    return cur


def _gaussian_weighted_derivative(a: Monomial, b: Monomial) -> dict[tuple[int, Monomial], Fraction]:
    """d^b (x^a e^{-s|x|^2}) / e^{-s|x|^2} as a map (s exponent, monomial)
    -> coefficient."""
    h: dict[tuple[int, Monomial], Fraction] = {(0, a): Fraction(1)}
    for axis, order in enumerate(b):
        for _ in range(order):
            nxt: dict[tuple[int, Monomial], Fraction] = {}

            def accumulate(key, val):
                if val:
                    nxt[key] = nxt.get(key, Fraction(0)) + val

            for (se, mono), c in h.items():
                e = mono[axis]
                if e:
                    accumulate((se, mono[:axis] + (e - 1,) + mono[axis + 1:]), c * e)
                accumulate((se + 1, mono[:axis] + (e + 1,) + mono[axis + 1:]), c * -2)
            h = nxt
    return h


def sphere_average_weight(delta: Monomial) -> Fraction:
    """Average of u^{2 delta} over the unit sphere in dimension len(delta):
    prod_j (2 delta_j - 1)!! / prod_{l<|delta|} (n + 2l)."""
    n = len(delta)
    k = sum(delta)
    num = math.prod(math.prod(range(2 * d - 1, 0, -2)) if d else 1 for d in delta)
    den = math.prod(n + 2 * l for l in range(k))
    return Fraction(num, den)


@dataclass(frozen=True)
class TraceReduction:
    """Radial reduction of the integrated leading diagonal term:
    integral(rho_m) dx = integral( sum_k chi_k(s) |x|^{2k} ) V e^{-s|x|^2} dx.

    ``chi`` maps the radial power k to {s exponent: coefficient}.
    """

    m: int
    dim: int
    chi: dict[int, dict[int, Fraction]]

    def is_zero(self) -> bool:
        return not self.chi

    def radial_polynomial_str(self) -> str:
        if not self.chi:
            return "0"
        parts = []
        for k in sorted(self.chi):
            coeffs = " + ".join(
                f"{c}*s^{e}" if e else str(c)
                for e, c in sorted(self.chi[k].items())
            )
            parts.append(f"({coeffs})*|x|^{2 * k}" if k else f"({coeffs})")
        return " + ".join(parts)


def universal_trace_polynomial(m: int, dim: int) -> TraceReduction:
    """Reduce the integral of the odd-m leading diagonal coefficient to a
    V-independent radial polynomial paired against V e^{-s|x|^2}.

    The reduction integrates every x^a d^b V term by parts onto V, then
    expresses the resulting kernel in powers of |x|^2.  That the kernel is
    exactly rotation invariant (so the radial rewrite is lossless) is
    asserted, not assumed.
    """
    if m % 2 == 0 or m < 1:
        raise ValueError("m must be odd and >= 1")
    # leading coefficient with V symbolic: apply the diagonal substitution
    # xi^a -> (-i)^{|a|} c_a s^{-|a|/2} to each grade's principal terms
    rho: dict[tuple[int, Monomial, Monomial], Fraction] = {}
    for g, terms in _formal_principal_chain(m, dim).items():
        for (xi, x, dv), z in terms.items():
            c = derivative_constant(xi)
            if not c:
                continue
            w = z * GaussRat.i_power(-monomial_degree(xi))
            if not w.is_real():
                raise ArithmeticError("imaginary parts failed to cancel")
            key = (-monomial_degree(xi) // 2, x, dv)
            val = w.re * c
            rho[key] = rho.get(key, Fraction(0)) + val
    # integrate by parts: moves every V-derivative onto the Gaussian weight
    kernel: dict[tuple[int, Monomial], Fraction] = {}
    for (s0, a, b), coeff in rho.items():
        if not coeff:
            continue
        sign = Fraction((-1) ** monomial_degree(b))
        for (se, mono), c in _gaussian_weighted_derivative(a, b).items():
            key = (s0 + se, mono)
            kernel[key] = kernel.get(key, Fraction(0)) + coeff * sign * c
    kernel = {k: v for k, v in kernel.items() if v}
    # radial rewrite
    chi: dict[int, dict[int, Fraction]] = {}
    for (se, mono), c in kernel.items():
        if any(e % 2 for e in mono):
            raise ArithmeticError("reduced kernel contains an odd monomial")
        delta = tuple(e // 2 for e in mono)
        k = sum(delta)
        slot = chi.setdefault(k, {})
        slot[se] = slot.get(se, Fraction(0)) + c * sphere_average_weight(delta)
    chi = {k: {e: c for e, c in s.items() if c} for k, s in chi.items()}
    chi = {k: s for k, s in chi.items() if s}
    # losslessness: expanding chi back over monomials must reproduce kernel
    rebuilt: dict[tuple[int, Monomial], Fraction] = {}
    for k, svals in chi.items():
        for delta_parts in _compositions(k, dim):
            mono = tuple(2 * d for d in delta_parts)
            weight = Fraction(math.factorial(k),
                              math.prod(math.factorial(d) for d in delta_parts))
            for se, c in svals.items():
                key = (se, mono)
                rebuilt[key] = rebuilt.get(key, Fraction(0)) + c * weight
    rebuilt = {k: v for k, v in rebuilt.items() if v}
    if rebuilt != kernel:
        raise ArithmeticError("reduced kernel is not rotation invariant")
    return TraceReduction(m=m, dim=dim, chi=chi)


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    """All tuples of ``parts`` non-negative ints summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
