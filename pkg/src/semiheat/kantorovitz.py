"""Kantorovitz operator recursion and the on-diagonal defect expansion.

For semigroup generators A and B, Kantorovitz's identity writes
e^{t(A+B)} = (sum_m t^m/m! X_m) e^{tA} with X_0 = I and
X_m = B X_{m-1} + [A, X_{m-1}].  Here A is the shifted semiclassical
oscillator and B = hbar^2 V, so the recursion becomes

    X_m = hbar^2 V X_{m-1} - hbar^2 [Lap/2, X_{m-1}] + [|x|^2/2, X_{m-1}],

which preserves the grading X_m = hbar^m sum_i hbar^i X_m^{i-1}
(i = m mod 2, 1 <= i <= m, X_m^{i-1} of derivative order <= i-1).
Applying the identity to -A and -hbar^2 V gives the heat semigroup as
e^{-tH}(x,y) = sum_m (-1)^m t^m/m! [X_m e^{-tA}](x,y).

``diagonal_eval`` applies X_m to the kernel's Gaussian factor

    e(x, y, s) = exp(-|x-y|^2/(4 hbar^2 s)) * exp(-s|x+y|^2/4)

and restricts to x = y.  Each derivative monomial is Leibniz-split over
the two factors: derivatives of the first factor survive on the diagonal
only for even multi-orders mu = 2*nu, where

    d^mu exp(-|x-y|^2/(4 hbar^2 s)) |_{x=y}
        = c_mu hbar^{-|mu|} s^{-|mu|/2},    c_mu = (-1/4)^{|nu|} mu!/nu!,

while derivatives of the second factor produce polynomials in (s, x)
times exp(-s|x|^2).  ``defect_expansion`` then substitutes the exact
series t = 2s(1 + (hbar s)^2/3 + (hbar s)^4/5 + ...) and collects even
hbar powers of the prefactor-normalized defect

    D = [e^{-tA}(x,x) - e^{-tH}(x,x)] / [(4 pi hbar^2 s)^{-n/2}(1+hbar s)^n]
      = hbar^2 sum_k hbar^{2k} U_k(s, x),

whose leading coefficient is U_0 = 2 s V(x) exp(-s|x|^2).
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from fractions import Fraction

from .diffop import DiffOp, GradingError, HGradedOp, check_grading
from .gaussian import GaussianLaurent, HSeries
from .poly import (
    Monomial,
    Polynomial,
    monomial_degree,
    multi_binomial,
    radius_squared,
    submultiindices,
)

# Test hook: when True, derivative_constant returns a wrong value for
# second derivatives, which must make the symbol/diagonal cross-checks fail.
_CORRUPT_DERIVATIVE_TABLE = False


def derivative_constant(mu: Monomial) -> Fraction:
    """Diagonal derivative of the moving Gaussian factor: the constant c_mu
    in d^mu exp(-|x-y|^2/(4a))|_{x=y} = c_mu a^{-|mu|/2} with a = hbar^2 s,
    i.e. c_mu = (-1/4)^{|nu|} mu!/nu! for mu = 2 nu; zero unless every
    component of mu is even."""
    if any(e % 2 for e in mu):
        return Fraction(0)
    nu = tuple(e // 2 for e in mu)
    c = Fraction(-1, 4) ** sum(nu)
    c *= Fraction(
        math.prod(math.factorial(e) for e in mu),
        math.prod(math.factorial(e) for e in nu),
    )
    if _CORRUPT_DERIVATIVE_TABLE and monomial_degree(mu) == 2:
        return -c
    return c


@contextmanager
def corrupted_derivative_table():
    """Deliberately corrupt c_mu for |mu| = 2 (fault-injection test hook)."""
    global _CORRUPT_DERIVATIVE_TABLE
    _CORRUPT_DERIVATIVE_TABLE = True
    try:
        yield
    finally:
        _CORRUPT_DERIVATIVE_TABLE = False


def half_laplacian(dim: int) -> DiffOp:
    """Lap/2 = (1/2) sum_j d^2/dx_j^2."""
    terms = {}
    for j in range(dim):
        alpha = tuple(2 if k == j else 0 for k in range(dim))
        terms[alpha] = Polynomial.constant(dim, Fraction(1, 2))
    return DiffOp(dim, terms)


def half_radius_sq_op(dim: int) -> DiffOp:
    """Multiplication by |x|^2 / 2."""
    return DiffOp.multiplication(radius_squared(dim).scale(Fraction(1, 2)))


def kantorovitz_step(x_prev: HGradedOp, potential: Polynomial,
                     m_prev: int | None = None) -> HGradedOp:
    """One step of the graded recursion:
    X_m = hbar^2 V X_{m-1} - hbar^2 [Lap/2, X_{m-1}] + [|x|^2/2, X_{m-1}].

    If ``m_prev`` is given, the input grading is validated first.
    """
    if potential.dim != x_prev.dim:
        raise ValueError("dimension mismatch")
    if m_prev is not None:
        check_grading(x_prev, m_prev)
    dim = x_prev.dim
    lap2 = half_laplacian(dim)
    x2half = half_radius_sq_op(dim)
    vmult = DiffOp.multiplication(potential)
    out: dict[int, DiffOp] = {}

    def accumulate(grade: int, op: DiffOp) -> None:
        if op:
            out[grade] = out[grade] + op if grade in out else op

    for g, op in x_prev.grades.items():
        accumulate(g + 2, vmult.compose(op) - lap2.commutator(op))
        accumulate(g, x2half.commutator(op))
    return HGradedOp(dim, out)


def operator_chain(potential: Polynomial, m_max: int) -> list[HGradedOp]:
    """X_0 .. X_{m_max}, validating the grading invariant at every step."""
    xs = [HGradedOp.identity(potential.dim)]
    for m in range(1, m_max + 1):
        nxt = kantorovitz_step(xs[-1], potential)
        check_grading(nxt, m)
        xs.append(nxt)
    return xs


def oscillator_graded(dim: int) -> HGradedOp:
    """The shifted oscillator A = -hbar^2 Lap/2 + |x|^2/2 - n hbar/2 as a
    graded operator (grades 0, 1, 2)."""
    return HGradedOp(dim, {
        0: half_radius_sq_op(dim),
        1: DiffOp.multiplication(Polynomial.constant(dim, Fraction(-dim, 2))),
        2: -half_laplacian(dim),
    })


def kantorovitz_closed_form(m: int, potential: Polynomial) -> HGradedOp:
    """Closed form X_m = sum_j (-1)^j C(m, j) H^{m-j} A^j with H = A + hbar^2 V.

    Must equal the recursion output exactly; the cost grows quickly with m,
    so this is a cross-check, not the production path.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    dim = potential.dim
    a = oscillator_graded(dim)
    h = a + HGradedOp(dim, {2: DiffOp.multiplication(potential)})
    a_pows = [HGradedOp.identity(dim)]
    h_pows = [HGradedOp.identity(dim)]
    for _ in range(m):
        a_pows.append(a_pows[-1].compose(a))
        h_pows.append(h_pows[-1].compose(h))
    out = HGradedOp(dim)
    for j in range(m + 1):
        term = h_pows[m - j].compose(a_pows[j]).scale(Fraction((-1) ** j * math.comb(m, j)))
        out = out + term
    return out


# ----------------------------------------------------------------------
# diagonal evaluation

_PAIR_GAUSS_CACHE: dict[Monomial, dict[tuple[int, Monomial], Fraction]] = {}


def _pair_gaussian_derivative(beta: Monomial) -> dict[tuple[int, Monomial], Fraction]:
    """d^beta_x exp(-s|x+y|^2/4) restricted to x = y, as a map
    (s exponent, x-monomial) -> coefficient.

    With u = x + y the derivative is (d^beta g)(u) for g = exp(-s|u|^2/4);
    the polynomial prefactor obeys h_{beta+e_j} = d_{u_j} h_beta - (s/2) u_j h_beta
    and the diagonal sets u = 2x.
    """
    if beta in _PAIR_GAUSS_CACHE:
        return _PAIR_GAUSS_CACHE[beta]
    dim = len(beta)
    h: dict[tuple[int, Monomial], Fraction] = {(0, (0,) * dim): Fraction(1)}
    for axis, order in enumerate(beta):
        for _ in range(order):
            nxt: dict[tuple[int, Monomial], Fraction] = {}

            def accumulate(key, val):
                if val:
                    nxt[key] = nxt.get(key, Fraction(0)) + val

            for (se, mono), c in h.items():
                e = mono[axis]
                if e:
                    down = mono[:axis] + (e - 1,) + mono[axis + 1:]
                    accumulate((se, down), c * e)
                up = mono[:axis] + (e + 1,) + mono[axis + 1:]
                accumulate((se + 1, up), c * Fraction(-1, 2))
            h = nxt
    # substitute u = 2x
    out = {
        (se, mono): c * 2 ** monomial_degree(mono)
        for (se, mono), c in h.items()
        if c
    }
    _PAIR_GAUSS_CACHE[beta] = out
    return out


def diagonal_eval(x_op: HGradedOp, m: int) -> HSeries:
    """Apply X_m to the Mehler Gaussian pair and restrict to the diagonal.

    Returns the hbar-series of GaussianLaurent coefficients.  Structural
    facts verified on the way out: only even hbar exponents occur, the
    lowest is m+1 for odd m and m+2 for even m, and the highest is 2m.
    """
    check_grading(x_op, m)
    dim = x_op.dim
    acc: dict[int, dict[int, Polynomial]] = {}
    for g, op in x_op.grades.items():
        for alpha, coeff in op.terms.items():
            for mu in submultiindices(alpha, step=2):
                c_mu = derivative_constant(mu)
                if not c_mu:
                    continue
                k = monomial_degree(mu)
                factor = c_mu * multi_binomial(alpha, mu)
                beta = tuple(a - b for a, b in zip(alpha, mu))
                hexp = g - k
                slot = acc.setdefault(hexp, {})
                for (se, mono), hv in _pair_gaussian_derivative(beta).items():
                    p = coeff * Polynomial.monomial(mono, hv * factor)
                    if not p:
                        continue
                    j = se - k // 2
                    slot[j] = slot[j] + p if j in slot else p
    coeffs = {
        hexp: GaussianLaurent(dim, terms)
        for hexp, terms in acc.items()
        if any(terms.values())
    }
    series = HSeries(dim, coeffs)
    lowest = m + 1 if m % 2 else m + 2
    for hexp in series.support():
        if hexp % 2 or not lowest <= hexp <= 2 * m:
            raise GradingError(
                f"diagonal evaluation of X_{m} produced hbar exponent {hexp}"
            )
    return series


def diagonal_s_bounds(m: int, hexp: int) -> tuple[int, int]:
    """Allowed s-exponent window of the hbar^hexp coefficient of
    diagonal_eval(X_m).

    Writing hexp = m+1+2r (m odd, l = (m-1)/2) or m+2+2r (m even,
    l = m/2-1), the derivative bookkeeping bounds the s-exponents by
    [r-l, 2r] for odd m and [r-l, 2r+1] for even m.  (Equivalently: the
    coefficient times s^l is a polynomial divisible by s^r, of degree at
    most 2r+l resp. 2r+l+1.)
    """
    if m % 2:
        r = (hexp - m - 1) // 2
        l = (m - 1) // 2
        return r - l, 2 * r
    r = (hexp - m - 2) // 2
    l = m // 2 - 1
    return r - l, 2 * r + 1


def time_power_series(m: int, h_max: int) -> dict[int, Fraction]:
    """hbar-coefficients of t^m where t = 2s(1 + (hbar s)^2/3 + ...).

    By homogeneity the hbar^h coefficient of t^m is a single monomial
    c * s^{m+h}; the returned map is {h: c} for even h <= h_max.
    """
    base = {h: Fraction(2, h + 1) for h in range(0, h_max + 1, 2)}
    out = {0: Fraction(1)}
    for _ in range(m):
        nxt: dict[int, Fraction] = {}
        for h1, c1 in out.items():
            for h2, c2 in base.items():
                h = h1 + h2
                if h > h_max:
                    continue
                nxt[h] = nxt.get(h, Fraction(0)) + c1 * c2
        out = nxt
    return out


def defect_expansion(potential: Polynomial, order: int) -> list[GaussianLaurent]:
    """Coefficients U_0 .. U_order of the normalized on-diagonal heat defect

        [e^{-tA}(x,x) - e^{-tH}(x,x)] / prefactor
            = hbar^2 sum_k hbar^{2k} U_k(s, x).

    Sums the Kantorovitz terms for m = 1 .. 2*order+1 (the even term
    m = 2*order+2 starts at hbar^{2*order+4} and cannot contribute),
    with the exact rational time substitution truncated at hbar^{2*order+2}.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    dim = potential.dim
    cap = 2 * order + 2
    chain = operator_chain(potential, 2 * order + 1)
    total: dict[int, GaussianLaurent] = {}
    for m in range(1, 2 * order + 2):
        diag = diagonal_eval(chain[m], m)
        sign_over_mfact = Fraction((-1) ** (m + 1), math.factorial(m))
        tpow = time_power_series(m, cap)
        for h_t, c_t in tpow.items():
            for h_d, gl in diag.coeffs.items():
                h = h_t + h_d
                if h > cap:
                    continue
                piece = gl.shift_s(m + h_t).scale(sign_over_mfact * c_t)
                total[h] = total[h] + piece if h in total else piece
    total = {h: gl for h, gl in total.items() if gl}
    for h in total:
        if h % 2 or not 2 <= h <= cap:
            raise GradingError(f"defect expansion produced hbar exponent {h}")
    return [total.get(2 * k + 2, GaussianLaurent.zero(dim)) for k in range(order + 1)]
