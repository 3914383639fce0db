import math
import random
from fractions import Fraction

import pytest

from semiheat.diffop import DiffOp, GradingError, HGradedOp, check_grading
from semiheat.gaussian import GaussianLaurent
from semiheat.kantorovitz import (
    corrupted_derivative_table,
    defect_expansion,
    derivative_constant,
    diagonal_eval,
    diagonal_s_bounds,
    kantorovitz_closed_form,
    kantorovitz_step,
    operator_chain,
    oscillator_graded,
    time_power_series,
)
from semiheat.poly import Polynomial, radius_squared


def var(dim=1, axis=0):
    return Polynomial.variable(dim, axis)


def random_potential(rng, dim, max_deg=3):
    terms = {}
    for _ in range(rng.randint(2, 4)):
        mono = tuple(rng.randint(0, max_deg) for _ in range(dim))
        while sum(mono) > max_deg:
            mono = tuple(rng.randint(0, max_deg) for _ in range(dim))
        terms[mono] = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
    return Polynomial(dim, terms)


# ----------------------------------------------------------------------
# the recursion and the published low-order operators

def test_first_operator_is_potential():
    for dim in (1, 2):
        v = radius_squared(dim)
        x1 = kantorovitz_step(HGradedOp.identity(dim), v, m_prev=0)
        assert x1 == HGradedOp(dim, {2: DiffOp.multiplication(v)})


def test_x2_quadratic_potential():
    v = var() ** 2
    chain = operator_chain(v, 2)
    want = HGradedOp(1, {4: DiffOp(1, {
        (1,): Polynomial(1, {(1,): -2}),
        (0,): Polynomial(1, {(4,): 1, (0,): -1}),
    })})
    assert chain[2] == want


def test_x3_low_grade_is_euler_of_potential():
    v = var() ** 2
    chain = operator_chain(v, 3)
    assert chain[3].grades[4] == DiffOp.multiplication(Polynomial(1, {(2,): 2}))


def second_order_term(v):
    # sum_{i,j} V_ij d_i d_j
    dim = v.dim
    terms = {}
    for i in range(dim):
        for j in range(dim):
            alpha = tuple((1 if k == i else 0) + (1 if k == j else 0) for k in range(dim))
            c = v.deriv(i).deriv(j)
            terms[alpha] = terms[alpha] + c if alpha in terms else c
    return DiffOp(dim, {a: c for a, c in terms.items() if c})


def first_order_gradient_term(v, f):
    # sum_i (d_i f) d_i
    dim = v.dim
    return DiffOp(dim, {
        tuple(1 if k == i else 0 for k in range(dim)): f.deriv(i)
        for i in range(dim)
        if f.deriv(i)
    })


def euler_applied(v):
    out = Polynomial.zero(v.dim)
    for i in range(v.dim):
        out = out + Polynomial.variable(v.dim, i) * v.deriv(i)
    return out


@pytest.mark.parametrize("dim", [1, 2])
def test_published_operator_formulas(dim):
    rng = random.Random(101 + dim)
    v = random_potential(rng, dim)
    chain = operator_chain(v, 4)

    # X_2^1 = -sum V_i d_i + V^2 - Lap V / 2
    x21 = first_order_gradient_term(v, v).scale(-1) + DiffOp.multiplication(
        v * v - v.laplacian().scale(Fraction(1, 2)))
    assert chain[2] == HGradedOp(dim, {4: x21})

    # X_3^0 = sum x_i V_i
    assert chain[3].grades[4] == DiffOp.multiplication(euler_applied(v))

    # X_3^2 = sum V_ij d_i d_j + sum d_i(Lap V - 3/2 V^2) d_i
    #         + Lap^2 V/4 - Lap(V^2)/2 + V^3 - V Lap V / 2
    aux = v.laplacian() - (v * v).scale(Fraction(3, 2))
    x32 = (
        second_order_term(v)
        + first_order_gradient_term(v, aux)
        + DiffOp.multiplication(
            v.laplacian().laplacian().scale(Fraction(1, 4))
            - (v * v).laplacian().scale(Fraction(1, 2))
            + v * v * v
            - (v * v.laplacian()).scale(Fraction(1, 2))
        )
    )
    assert chain[3].grades[6] == x32

    # X_4^1 = -[Lap/2, sum x_i V_i] + [|x|^2/2, X_3^2] + (1/2) sum x_i d_i(V^2)
    from semiheat.kantorovitz import half_laplacian, half_radius_sq_op
    x41 = (
        -half_laplacian(dim).commutator(DiffOp.multiplication(euler_applied(v)))
        + half_radius_sq_op(dim).commutator(x32)
        + DiffOp.multiplication(euler_applied(v * v).scale(Fraction(1, 2)))
    )
    assert chain[4].grades[6] == x41

    # X_4^3 = [-Lap/2, second + first order parts of X_3^2] + sum V V_ij d_i d_j
    #         modulo terms of derivative order < 2
    x43_top = (
        half_laplacian(dim).commutator(second_order_term(v)
                                       + first_order_gradient_term(v, aux)).scale(-1)
        + DiffOp.multiplication(v).compose(second_order_term(v))
    )
    got = chain[4].grades[8]
    got_top = DiffOp(dim, {a: c for a, c in got.terms.items() if sum(a) >= 2})
    want_top = DiffOp(dim, {a: c for a, c in x43_top.terms.items() if sum(a) >= 2})
    assert got_top == want_top


def test_closed_form_equals_recursion():
    rng = random.Random(5)
    for dim in (1, 2):
        v = random_potential(rng, dim)
        chain = operator_chain(v, 4)
        for m in range(5):
            assert kantorovitz_closed_form(m, v) == chain[m]


def test_closed_form_m3_linear_potential():
    v = var()
    chain = operator_chain(v, 3)
    assert kantorovitz_closed_form(3, v) == chain[3]


def test_closed_form_special_cases():
    v = var() ** 2
    dim = 1
    a = oscillator_graded(dim)
    b = HGradedOp(dim, {2: DiffOp.multiplication(v)})
    # m = 1: H - A = hbar^2 V
    assert kantorovitz_closed_form(1, v) == b
    # m = 2: H^2 - 2HA + A^2 = B^2 + [A, B]
    assert kantorovitz_closed_form(2, v) == b.compose(b) + (
        a.compose(b) - b.compose(a))


def test_step_rejects_bad_grading():
    v = var() ** 2
    bad = HGradedOp(1, {3: DiffOp.partial(1, 0, 2)})  # degree 2 > i-1 at m=1
    with pytest.raises(GradingError):
        kantorovitz_step(bad, v, m_prev=1)


def test_grading_invariant_random():
    rng = random.Random(12)
    for trial in range(10):
        dim = rng.choice((1, 2))
        v = random_potential(rng, dim)
        chain = operator_chain(v, 6)  # raises internally on violation
        for m in range(7):
            check_grading(chain[m], m)


# ----------------------------------------------------------------------
# diagonal evaluation

def test_derivative_constants():
    assert derivative_constant((0,)) == 1
    assert derivative_constant((2,)) == Fraction(-1, 2)
    assert derivative_constant((4,)) == Fraction(3, 4)
    assert derivative_constant((1,)) == 0
    assert derivative_constant((2, 2)) == Fraction(1, 4)
    assert derivative_constant((3, 1)) == 0


def test_derivative_constant_finite_difference():
    # d^2/dx^2 exp(-(x-y)^2/4a) |_{x=y} = -1/(2a)
    a, y0, h = 0.37, 0.4, 1e-4
    f = lambda x: math.exp(-((x - y0) ** 2) / (4 * a))
    second = (f(y0 + h) - 2 * f(y0) + f(y0 - h)) / h**2
    assert second == pytest.approx(-1 / (2 * a), rel=1e-6)
    assert float(derivative_constant((2,))) / a == pytest.approx(-1 / (2 * a))


def test_corrupted_table_hook_restores():
    with corrupted_derivative_table():
        assert derivative_constant((2,)) == Fraction(1, 2)
    assert derivative_constant((2,)) == Fraction(-1, 2)


def test_diagonal_multiplication_operator():
    v = radius_squared(2)
    x1 = operator_chain(v, 1)[1]
    diag = diagonal_eval(x1, 1)
    assert diag.support() == [2]
    assert diag.coefficient(2) == GaussianLaurent.from_poly(v)


def test_diagonal_x3_quadratic_frozen():
    # brute-force values for V = x^2 (n = 1):
    #   hbar^4: 2x^2 - 1/s
    #   hbar^6: (x^6 - 7x^2) + s(6x^4 - 1) + s^2 (2x^2)
    v = var() ** 2
    x3 = operator_chain(v, 3)[3]
    diag = diagonal_eval(x3, 3)
    assert diag.support() == [4, 6]
    want4 = GaussianLaurent(1, {
        -1: Polynomial.constant(1, -1),
        0: Polynomial(1, {(2,): 2}),
    })
    want6 = GaussianLaurent(1, {
        0: Polynomial(1, {(6,): 1, (2,): -7}),
        1: Polynomial(1, {(4,): 6, (0,): -1}),
        2: Polynomial(1, {(2,): 2}),
    })
    assert diag.coefficient(4) == want4
    assert diag.coefficient(6) == want6


def test_diagonal_parity_and_s_window():
    rng = random.Random(20)
    for _ in range(10):
        dim = rng.choice((1, 2))
        v = random_potential(rng, dim)
        chain = operator_chain(v, 6)
        for m in range(1, 7):
            diag = diagonal_eval(chain[m], m)
            lowest = m + 1 if m % 2 else m + 2
            for hexp in diag.support():
                assert hexp % 2 == 0
                assert lowest <= hexp <= 2 * m
                lo, hi = diagonal_s_bounds(m, hexp)
                support = diag.coefficient(hexp).s_support()
                assert support[0] >= lo
                assert support[-1] <= hi


def test_s_window_is_sharp_beyond_naive_bound():
    # The hbar^{m+1} coefficient for m = 3 is NOT a pure s^{-l} monomial:
    # for V = x^2 it is 2x^2 - 1/s, so after factoring s^{-l} (l = 1) the
    # residual polynomial has s-degree 1, not 0.  Any bound that caps the
    # hbar^{m+1+2r} coefficient at s-degree 2r after a global s^{-l} split
    # is violated here; the implemented window [r-l, 2r] is the sharp one.
    v = var() ** 2
    diag = diagonal_eval(operator_chain(v, 3)[3], 3)
    support = diag.coefficient(4).s_support()
    l = 1
    naive_max_degree = 0  # would force support == {-l}
    assert max(j + l for j in support) > naive_max_degree
    assert support == [-1, 0]  # matches the implemented window [r-l, 2r] = [-1, 0]


def test_diagonal_rejects_bad_grading():
    bad = HGradedOp(1, {4: DiffOp.partial(1, 0, 2)})
    with pytest.raises(GradingError):
        diagonal_eval(bad, 3)


# ----------------------------------------------------------------------
# time substitution and defect expansion

def test_time_power_series_matches_log_series():
    assert time_power_series(1, 4) == {
        0: Fraction(2), 2: Fraction(2, 3), 4: Fraction(2, 5)}
    # t^2: (2s)^2 (1 + u/3 + u^2/5)^2 with u = (hbar s)^2
    assert time_power_series(2, 4) == {
        0: Fraction(4),
        2: Fraction(8, 3),
        4: Fraction(8, 5) + Fraction(4, 9),
    }


def test_time_power_series_numeric():
    from semiheat import mehler
    s, hbar = 0.4, 0.3
    for m in (1, 2, 3):
        series = time_power_series(m, 40)
        val = sum(float(c) * hbar**h * s ** (m + h) for h, c in series.items())
        assert val == pytest.approx(mehler.t_of_s(s, hbar) ** m, rel=1e-13)


def test_leading_defect_identity_fixtures():
    from semiheat.fixtures import SYMBOLIC_FIXTURES, symbolic_fixture
    for name in SYMBOLIC_FIXTURES:
        v = symbolic_fixture(name, 1)
        assert defect_expansion(v, 0)[0] == GaussianLaurent(1, {1: v.scale(2)})
    v2 = symbolic_fixture("quadratic", 2)
    assert defect_expansion(v2, 0)[0] == GaussianLaurent(2, {1: v2.scale(2)})


def test_zero_potential_all_coefficients_vanish():
    for k, g in enumerate(defect_expansion(Polynomial.zero(1), 2)):
        assert not g, f"U_{k} should vanish for V = 0"


def expected_second_coefficient(v):
    """Hand-derived U_1 = e^{-s|x|^2} [ (2/3)s^3 (V - x.grad V)
    + s^2 ((1/3) Lap V - 2 V^2) ]."""
    dim = v.dim
    euler = Polynomial.zero(dim)
    for i in range(dim):
        euler = euler + Polynomial.variable(dim, i) * v.deriv(i)
    return GaussianLaurent(dim, {
        3: (v - euler).scale(Fraction(2, 3)),
        2: v.laplacian().scale(Fraction(1, 3)) - (v * v).scale(2),
    })


def test_second_coefficient_matches_hand_derivation():
    rng = random.Random(31)
    for dim in (1, 2):
        for _ in range(3):
            v = random_potential(rng, dim)
            coeffs = defect_expansion(v, 1)
            assert coeffs[0] == GaussianLaurent(dim, {1: v.scale(2)})
            assert coeffs[1] == expected_second_coefficient(v)


def test_defect_expansion_support_and_truncation():
    v = var() ** 2
    coeffs = defect_expansion(v, 2)
    assert len(coeffs) == 3
    assert coeffs[0] == GaussianLaurent(1, {1: v.scale(2)})
    assert coeffs[1] == expected_second_coefficient(v)
    assert coeffs[2]  # U_2 is a nonzero GaussianLaurent

    with pytest.raises(ValueError):
        defect_expansion(v, -1)
