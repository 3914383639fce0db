"""Cross-check matrix tying the tiers together.

Every check compares two independent routes to the same quantity
(recursion vs closed form, operators vs symbols, exact expansion vs
spectral oracle, closed-form integrals vs quadrature) and reports a
measured error.  The CLI ``validate`` command runs these and fails with
the first offending check named.
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from . import invariants, kantorovitz, mehler, oracle, symbolcalc
from .diffop import DiffOp, HGradedOp, check_grading
from .fixtures import RadialBump, RadialTimesLinearHarmonic, symbolic_fixture
from .gaussian import GaussianLaurent
from .kantorovitz import (
    defect_expansion,
    diagonal_eval,
    diagonal_s_bounds,
    kantorovitz_closed_form,
    operator_chain,
    oscillator_graded,
)
from .poly import Polynomial, radius_squared


@dataclass
class CheckResult:
    name: str
    group: str
    passed: bool
    measure: float
    detail: str = ""

    def __post_init__(self):
        # numpy scalars leak in from comparisons; keep the report JSON-clean
        self.passed = bool(self.passed)
        self.measure = float(self.measure)


def random_potential(rng: random.Random, dim: int, max_degree: int = 3) -> Polynomial:
    terms = {}
    for _ in range(rng.randint(2, 5)):
        mono = tuple(rng.randint(0, max_degree) for _ in range(dim))
        while sum(mono) > max_degree:
            mono = tuple(rng.randint(0, max_degree) for _ in range(dim))
        terms[mono] = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
    return Polynomial(dim, terms)


# ----------------------------------------------------------------------
# mehler group

def check_mehler_exponent(samples: int = 10_000, tol: float = 1e-13) -> CheckResult:
    rng = random.Random(1)
    worst = 0.0
    for _ in range(samples):
        n = rng.choice((1, 2))
        hbar = rng.uniform(0.05, 0.5)
        s = rng.uniform(0.05, 0.9 / hbar * 0.9)
        t = mehler.t_of_s(s, hbar)
        x = [rng.uniform(-2, 2) for _ in range(n)]
        y = [rng.uniform(-2, 2) for _ in range(n)]
        a = mehler.exponent(x, y, s, hbar)
        b = mehler._exponent_time_form(x, y, t, hbar)
        worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    return CheckResult("exponent-identity", "mehler", worst <= tol, worst)


def check_time_roundtrip(tol: float = 1e-14) -> CheckResult:
    worst = 0.0
    for s, hbar in ((0.7, 0.1), (0.5, 0.2), (0.3, 1.0), (0.9, 0.05)):
        worst = max(worst, abs(mehler.s_of_t(mehler.t_of_s(s, hbar), hbar) - s))
    for t, hbar in ((1.0, 0.1), (0.5, 0.3), (2.0, 0.05)):
        worst = max(worst, abs(mehler.t_of_s(mehler.s_of_t(t, hbar), hbar) - t))
    return CheckResult("time-roundtrip", "mehler", worst <= tol, worst)


def check_semigroup(tol: float = 1e-6) -> CheckResult:
    hbar, t1, t2 = 0.2, 0.3, 0.3
    s1, s12 = mehler.s_of_t(t1, hbar), mehler.s_of_t(t1 + t2, hbar)
    worst = 0.0
    for x, y in ((0.0, 0.0), (0.5, -0.3), (1.0, 0.7)):
        conv, _ = integrate.quad(
            lambda z: mehler.kernel_eval((x,), (z,), s1, hbar)
            * mehler.kernel_eval((z,), (y,), s1, hbar),
            -np.inf, np.inf,
        )
        direct = mehler.kernel_eval((x,), (y,), s12, hbar)
        worst = max(worst, abs(conv - direct) / abs(direct))
    return CheckResult("semigroup-quadrature", "mehler", worst <= tol, worst)


# ----------------------------------------------------------------------
# operator group

def check_recursion_vs_closed_form() -> CheckResult:
    rng = random.Random(2)
    ok = True
    for dim in (1, 2):
        v = random_potential(rng, dim)
        chain = operator_chain(v, 4)
        for m in range(5):
            ok = ok and kantorovitz_closed_form(m, v) == chain[m]
    return CheckResult("recursion-vs-closed-form", "operators", ok, 0.0 if ok else 1.0)


def check_x2_identity() -> CheckResult:
    v = random_potential(random.Random(3), 2)
    a = oscillator_graded(v.dim)
    b = HGradedOp(v.dim, {2: DiffOp.multiplication(v)})
    lhs = kantorovitz_closed_form(2, v)
    rhs = b.compose(b) + (a.compose(b) - b.compose(a))
    ok = lhs == rhs
    return CheckResult("x2-identity", "operators", ok, 0.0 if ok else 1.0)


def check_published_operators() -> CheckResult:
    rng = random.Random(4)
    ok = True
    for dim in (1, 2):
        v = random_potential(rng, dim)
        chain = operator_chain(v, 3)
        ok = ok and chain[1] == HGradedOp(dim, {2: DiffOp.multiplication(v)})
        grad_term = DiffOp(dim, {
            tuple(1 if k == j else 0 for k in range(dim)): -v.deriv(j)
            for j in range(dim)
        })
        x2_1 = grad_term + DiffOp.multiplication(v * v - v.laplacian().scale(Fraction(1, 2)))
        ok = ok and chain[2] == HGradedOp(dim, {4: x2_1})
        euler_v = Polynomial.zero(dim)
        for j in range(dim):
            euler_v = euler_v + Polynomial.variable(dim, j) * v.deriv(j)
        ok = ok and chain[3].grades.get(4) == DiffOp.multiplication(euler_v)
        zero_order = chain[3].grades[6].terms.get((0,) * dim, Polynomial.zero(dim))
        expected = (
            v.laplacian().laplacian().scale(Fraction(1, 4))
            - (v * v).laplacian().scale(Fraction(1, 2))
            + v * v * v
            - (v * v.laplacian()).scale(Fraction(1, 2))
        )
        ok = ok and zero_order == expected
    return CheckResult("published-operators", "operators", ok, 0.0 if ok else 1.0)


def check_grading_and_parity() -> CheckResult:
    rng = random.Random(5)
    ok = True
    for _ in range(4):
        dim = rng.choice((1, 2))
        v = random_potential(rng, dim)
        chain = operator_chain(v, 6)
        for m in range(1, 7):
            check_grading(chain[m], m)
            diag = diagonal_eval(chain[m], m)
            lowest = m + 1 if m % 2 else m + 2
            for hexp in diag.support():
                if hexp % 2 or hexp < lowest or hexp > 2 * m:
                    ok = False
                lo, hi = diagonal_s_bounds(m, hexp)
                sup = diag.coefficient(hexp).s_support()
                if sup and (sup[0] < lo or sup[-1] > hi):
                    ok = False
    return CheckResult("grading-parity-swindow", "operators", ok, 0.0 if ok else 1.0)


# ----------------------------------------------------------------------
# symbol group

def check_symbol_equivalence() -> CheckResult:
    rng = random.Random(6)
    ok = True
    for dim in (1, 2):
        v = random_potential(rng, dim)
        chain = operator_chain(v, 6)
        fulls = symbolcalc.full_symbol_chain(v, 6)
        prins = symbolcalc.principal_chain(v, 6)
        for m in range(1, 7):
            ok = ok and symbolcalc.graded_full_symbol(chain[m]) == fulls[m]
            ok = ok and symbolcalc.principal_part(chain[m], m) == prins[m]
            top = prins[m].grade(2 * m)
            ok = ok and top == symbolcalc.principal_symbol_closed_form(m, v)
    return CheckResult("symbol-operator-equivalence", "symbols", ok, 0.0 if ok else 1.0)


def check_leading_diagonal_term() -> CheckResult:
    rng = random.Random(7)
    ok = True
    for dim in (1, 2):
        v = random_potential(rng, dim)
        chain = operator_chain(v, 5)
        for m in (1, 3, 5):
            lead = symbolcalc.leading_diagonal_term(m, chain[m])
            direct = diagonal_eval(chain[m], m).coefficient(m + 1)
            ok = ok and lead == direct
    return CheckResult("leading-term-vs-diagonal", "symbols", ok, 0.0 if ok else 1.0)


def check_diagonal_reference_values() -> CheckResult:
    """Diagonal evaluation against hand-computed constants for V = x^2,
    m = 3 (independent of the derivative-constant table, so a corrupted
    table is caught here)."""
    v = Polynomial(1, {(2,): Fraction(1)})
    diag = diagonal_eval(operator_chain(v, 3)[3], 3)
    want4 = GaussianLaurent(1, {
        -1: Polynomial.constant(1, -1),
        0: Polynomial(1, {(2,): 2}),
    })
    want6 = GaussianLaurent(1, {
        0: Polynomial(1, {(6,): 1, (2,): -7}),
        1: Polynomial(1, {(4,): 6, (0,): -1}),
        2: Polynomial(1, {(2,): 2}),
    })
    ok = diag.coefficient(4) == want4 and diag.coefficient(6) == want6
    return CheckResult("diagonal-reference-values", "symbols", ok, 0.0 if ok else 1.0)


# ----------------------------------------------------------------------
# expansion group

def check_leading_defect_exact() -> CheckResult:
    ok = True
    for name in ("zero", "linear", "quadratic", "quartic", "odd-cubic"):
        v = symbolic_fixture(name, 1)
        expected = GaussianLaurent(1, {1: v.scale(2)})
        ok = ok and defect_expansion(v, 0)[0] == expected
    v2 = symbolic_fixture("quadratic", 2)
    ok = ok and defect_expansion(v2, 0)[0] == GaussianLaurent(2, {1: v2.scale(2)})
    return CheckResult("leading-defect-exact", "expansion", ok, 0.0 if ok else 1.0)


def check_oracle_fit(basis: int = 400) -> CheckResult:
    x2 = symbolic_fixture("quadratic", 1)
    lin = symbolic_fixture("linear", 1)
    s = 0.5
    worst = 0.0
    fit = oracle.fit_expansion(x2, s, (0.0, 0.5, 1.0), (0.2, 0.1, 0.05), basis_size=basis)
    sym = defect_expansion(x2, 1)
    c1_exp = np.array([sym[0].eval_at(s, (x,)) for x in fit.points])
    c2_exp = np.array([sym[1].eval_at(s, (x,)) for x in fit.points])
    worst = max(worst, abs(fit.c1[2] - c1_exp[2]) / abs(c1_exp[2]))
    rel2 = np.max(np.abs(fit.c2 - c2_exp) / np.abs(c2_exp))
    fit_lin = oracle.fit_expansion(lin, s, (0.5, 1.0, 1.5), (0.2, 0.1, 0.05), basis_size=basis)
    sym_lin = defect_expansion(lin, 1)
    c2_lin = np.array([sym_lin[1].eval_at(s, (x,)) for x in fit_lin.points])
    rel2 = max(rel2, np.max(np.abs(fit_lin.c2 - c2_lin) / np.abs(c2_lin)))
    passed = worst <= 0.01 and rel2 <= 0.05
    return CheckResult(
        "oracle-defect-fit", "oracle", passed, max(worst, rel2),
        detail=f"c1 rel err {worst:.2e}, worst c2 rel err {rel2:.2e}",
    )


def check_free_trace(basis: int = 200, tol: float = 1e-10) -> CheckResult:
    hbar, s = 0.1, 0.5
    model = oracle.build_hamiltonian(None, hbar, basis, dim=1)
    got = oracle.heat_trace(model, mehler.t_of_s(s, hbar))
    want = mehler.free_trace(s, hbar, 1)
    err = abs(got - want)
    return CheckResult("free-trace-exact", "oracle", err <= tol, err)


# ----------------------------------------------------------------------
# invariants group

def check_invariant_quadrature(tol: float = 1e-8) -> CheckResult:
    worst = 0.0
    s = 0.7
    for name in ("linear", "quadratic", "odd-cubic"):
        v = symbolic_fixture(name, 1)
        i1, i2, i3 = invariants.invariant_triple(v, s)
        integrands = (
            lambda x: v.eval_at((x,)),
            lambda x: v.eval_at((x,)) ** 2,
            lambda x: v.eval_at((x,)) ** 3
            - v.eval_at((x,)) * v.laplacian().eval_at((x,)),
        )
        for got, f in zip((i1, i2, i3), integrands):
            ref, _ = integrate.quad(
                lambda x: f(x) * math.exp(-s * x * x), -np.inf, np.inf
            )
            worst = max(worst, abs(got - ref))
    return CheckResult("invariant-quadrature", "invariants", worst <= tol, worst)


def check_radial_fubini(tol: float = 1e-10) -> CheckResult:
    worst = 0.0
    s = 0.6
    for dim, name in ((1, "quadratic"), (2, "quadratic"), (2, "linear"), (3, "linear")):
        v = symbolic_fixture(name, dim)
        p = v + radius_squared(dim)  # make it radially nontrivial
        direct = invariants.gaussian_integral(p, s)
        assembled = sum(
            float(c) * invariants.radial_gaussian_integral(q, s)
            for q, c in invariants.radial_profile(p).items()
        )
        worst = max(worst, abs(direct - assembled) / max(1.0, abs(direct)))
    return CheckResult("radial-fubini", "invariants", worst <= tol, worst)


# ----------------------------------------------------------------------
# detectors group

def check_detectors() -> CheckResult:
    ok = True
    r2 = symbolic_fixture("quadratic", 2)
    verdict = invariants.constancy_detector(r2, 1, 1e-10)
    ok = ok and verdict.constant and abs(verdict.value - 1.0) < 1e-12
    lin = symbolic_fixture("linear", 2)
    ok = ok and not invariants.constancy_detector(lin, 1, 1e-10).constant
    v1 = invariants.odd_linear_detector(lin, 1, 1e-10)
    ok = ok and v1.in_class and abs(v1.chi - 1.0) < 1e-12
    cubic = symbolic_fixture("odd-cubic", 2)
    ok = ok and not invariants.odd_linear_detector(cubic, 1, 1e-10).in_class
    bump = RadialBump(0.5, 1.5)
    grid = np.arange(0.05, 2.5, 0.025)
    rec = invariants.support_annulus(bump, grid, n=2, nodes=256)
    ok = ok and rec is not None and abs(rec[0] - 0.5) <= 0.05 and abs(rec[1] - 1.5) <= 0.05
    fix = RadialTimesLinearHarmonic(2)
    nv = invariants.odd_linear_detector_numeric(fix, fix.radial_derivative, 1.2, 1e-6)
    ok = ok and nv.in_class and abs(nv.chi - 2.0 / 1.2) < 1e-6
    return CheckResult("detectors", "detectors", ok, 0.0 if ok else 1.0)


# ----------------------------------------------------------------------

ALL_GROUPS = ("mehler", "operators", "symbols", "expansion", "oracle",
              "invariants", "detectors")

_CHECKS = (
    ("mehler", check_mehler_exponent),
    ("mehler", check_time_roundtrip),
    ("mehler", check_semigroup),
    ("operators", check_recursion_vs_closed_form),
    ("operators", check_x2_identity),
    ("operators", check_published_operators),
    ("operators", check_grading_and_parity),
    ("symbols", check_symbol_equivalence),
    ("symbols", check_leading_diagonal_term),
    ("symbols", check_diagonal_reference_values),
    ("expansion", check_leading_defect_exact),
    ("oracle", check_free_trace),
    ("oracle", check_oracle_fit),
    ("invariants", check_invariant_quadrature),
    ("invariants", check_radial_fubini),
    ("detectors", check_detectors),
)


def run_checks(groups: tuple[str, ...] | None = None,
               inject_fault: str | None = None) -> tuple[list[CheckResult], bool]:
    """Run the cross-check matrix (optionally restricted to groups).

    ``inject_fault='cmu'`` corrupts the diagonal derivative-constant table
    for the duration of the run; the symbol/diagonal cross-check must then
    fail, which exercises the failure path end to end.
    """
    results: list[CheckResult] = []

    def execute():
        for group, check in _CHECKS:
            if groups and group not in groups:
                continue
            results.append(check())

    if inject_fault == "cmu":
        with kantorovitz.corrupted_derivative_table():
            execute()
    elif inject_fault is None:
        execute()
    else:
        raise ValueError(f"unknown fault {inject_fault!r}")
    return results, all(r.passed for r in results)


def report_dict(results: list[CheckResult], passed: bool) -> dict:
    failing = [r.name for r in results if not r.passed]
    return {
        "passed": passed,
        "first_failure": failing[0] if failing else None,
        "checks": [asdict(r) for r in results],
    }
