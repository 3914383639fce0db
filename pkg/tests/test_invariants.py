import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from semiheat import invariants as inv
from semiheat.fixtures import RadialBump, RadialTimesLinearHarmonic
from semiheat.invariants import PiValue
from semiheat.poly import Polynomial, radius_squared


def var(dim, axis=0):
    return Polynomial.variable(dim, axis)


# ----------------------------------------------------------------------
# exact scalars

def test_pivalue_arithmetic():
    a = PiValue.of(2, 1)          # 2 pi
    b = PiValue.of(Fraction(1, 2))
    assert float(a) == pytest.approx(2 * math.pi)
    assert a * a == PiValue.of(4, 2)
    assert (a + a) == PiValue.of(4, 1)
    assert (a - a) == PiValue()
    assert a / PiValue.of(2, 1) == PiValue.of(1)
    assert (a * b).terms == {1: Fraction(1)}
    assert (a / PiValue.of(4)).terms == {1: Fraction(1, 2)}
    with pytest.raises(ValueError):
        (a + b) / (a + b)  # two-term divisor unsupported
    assert PiValue.of(3).as_fraction() == 3


# ----------------------------------------------------------------------
# Gaussian integrals

def test_gaussian_integral_normalization():
    one = Polynomial.constant(1, 1)
    val = inv.gaussian_integral(one)
    assert val.coeffs == {0: Fraction(1)}           # sqrt(pi/s)
    assert val.evalf(2.0) == pytest.approx(math.sqrt(math.pi / 2.0))


def test_gaussian_integral_odd_vanishes():
    assert not inv.gaussian_integral(var(1))
    assert inv.gaussian_integral(var(1), s=1.0) == 0.0


def test_gaussian_integral_x_squared():
    got = inv.gaussian_integral(var(1) ** 2, s=1.0)
    ref, _ = integrate.quad(lambda x: x * x * math.exp(-x * x), -np.inf, np.inf)
    assert got == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-14)
    assert got == pytest.approx(ref, abs=1e-10)


def test_invariant_triple_constant_potential():
    c = Fraction(3, 2)
    v = Polynomial.constant(1, c)
    s = 0.8
    i1, i2, i3 = inv.invariant_triple(v, s)
    base = math.sqrt(math.pi / s)
    assert i1 == pytest.approx(float(c) * base, rel=1e-14)
    assert i2 == pytest.approx(float(c) ** 2 * base, rel=1e-14)
    assert i3 == pytest.approx(float(c) ** 3 * base, rel=1e-14)


def test_invariant_triple_linear():
    i1, i2, i3 = inv.invariant_triple(var(1), 1.0)
    assert i1 == 0.0
    assert i2 == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-14)
    assert i3 == 0.0


def test_invariant_triple_quadratic_includes_laplacian_coupling():
    # I3 for V = x^2 (n = 1): integral (x^6 - 2 x^2) e^{-s x^2}
    v = var(1) ** 2
    s = 0.7
    _, _, i3 = inv.invariant_triple(v, s)
    ref, _ = integrate.quad(
        lambda x: (x**6 - 2 * x * x) * math.exp(-s * x * x), -np.inf, np.inf)
    assert i3 == pytest.approx(ref, abs=1e-8)


def test_invariant_triple_quadrature_dim2():
    v = var(2, 0) * var(2, 1) + var(2, 0) ** 2
    s = 0.9
    i1, i2, i3 = inv.invariant_triple(v, s)
    lap = v.laplacian()

    def integrand(kind):
        def f(y, x):
            vv = v.eval_at((x, y))
            if kind == 1:
                val = vv
            elif kind == 2:
                val = vv * vv
            else:
                val = vv**3 - vv * lap.eval_at((x, y))
            return val * math.exp(-s * (x * x + y * y))
        return f

    for got, kind in ((i1, 1), (i2, 2), (i3, 3)):
        ref, _ = integrate.dblquad(integrand(kind), -8, 8, -8, 8, epsabs=1e-10)
        assert got == pytest.approx(ref, abs=1e-8)


def _rational_rotation(dim):
    if dim == 2:
        return [[Fraction(3, 5), Fraction(-4, 5)],
                [Fraction(4, 5), Fraction(3, 5)]]
    g12 = np.array([[Fraction(3, 5), Fraction(-4, 5), Fraction(0)],
                    [Fraction(4, 5), Fraction(3, 5), Fraction(0)],
                    [Fraction(0), Fraction(0), Fraction(1)]], dtype=object)
    g23 = np.array([[Fraction(1), Fraction(0), Fraction(0)],
                    [Fraction(0), Fraction(5, 13), Fraction(-12, 13)],
                    [Fraction(0), Fraction(12, 13), Fraction(5, 13)]], dtype=object)
    return (g12 @ g23).tolist()


@pytest.mark.parametrize("dim", [2, 3])
def test_invariants_rotation_invariant_exactly(dim):
    v = var(dim, 0) ** 2 + var(dim, 0) * var(dim, 1) - var(dim, 1) ** 3
    rot = _rational_rotation(dim)
    rotated = v.substitute_linear(rot)
    assert rotated != v  # the rotation genuinely moves the potential
    assert inv.invariant_triple_exact(v) == inv.invariant_triple_exact(rotated)


def test_i2_positive_definite():
    # I2 > 0 for nonzero V at every s; identically zero only for V = 0
    v = Polynomial(1, {(0,): 1, (2,): -1})  # 1 - x^2 changes sign
    val = inv.gaussian_integral(v * v)
    for s in (0.2, 1.0, 5.0):
        assert val.evalf(s) > 0
    assert not inv.gaussian_integral(Polynomial.zero(1) * Polynomial.zero(1))


# ----------------------------------------------------------------------
# sphere functionals

def test_unit_sphere_monomial_integrals():
    assert inv.unit_sphere_monomial_integral((2, 0)) == PiValue.of(1, 1)   # pi
    assert inv.unit_sphere_monomial_integral((1, 0)) == PiValue()
    assert inv.unit_sphere_monomial_integral((0, 0)) == PiValue.of(2, 1)   # 2 pi
    assert inv.unit_sphere_monomial_integral((2, 0, 0)) == PiValue.of(Fraction(4, 3), 1)


def test_sphere_m1_m2_linear():
    f = inv.sphere_functionals(var(2, 0), 1)
    assert f.m1 == PiValue()
    assert f.m2 == PiValue.of(1, 1)  # integral of cos^2 over the circle = pi
    # quadrature cross-check
    m1, m2 = inv.sphere_average_numeric(lambda p: p[0], 1.0, n=2)
    assert m1 == pytest.approx(0.0, abs=1e-12)
    assert m2 == pytest.approx(math.pi, rel=1e-12)


def test_sphere_radial_potential():
    # V = |x|^2 is constant r^2 on the radius-r sphere
    r = Fraction(3, 2)
    f = inv.sphere_functionals(radius_squared(2), r)
    assert f.m1 == PiValue.of(2 * r**3, 1)       # 2 pi r * r^2
    assert f.m2 == PiValue.of(2 * r**5, 1)       # 2 pi r * r^4
    assert f.area * f.m2 == f.m1 * f.m1          # Cauchy-Schwarz equality


def test_sphere_angular_pairing_degree_one():
    # <V, -Lap_S V> = M2 * (n-1)/r^2 for the degree-one harmonic V = x_1
    for r in (Fraction(1), Fraction(2), Fraction(1, 2)):
        f = inv.sphere_functionals(var(2, 0), r)
        assert f.v_neg_lap == f.m2 * (Fraction(1) / (r * r))


def test_sphere_functionals_cubic_frozen():
    # V = x1^3 at r = 1 (n = 2): hand values
    f = inv.sphere_functionals(var(2, 0) ** 3, 1)
    assert f.m2 == PiValue.of(Fraction(5, 8), 1)
    assert f.v_dvr == PiValue.of(Fraction(15, 8), 1)
    assert f.dvr_sq == PiValue.of(Fraction(45, 8), 1)
    assert f.v_neg_lap == PiValue.of(Fraction(9, 8), 1)


def test_dim1_sphere_is_point_pair():
    # n = 1: the "sphere" is {-r, r}
    v = var(1) ** 2
    f = inv.sphere_functionals(v, Fraction(2))
    assert f.m1 == PiValue.of(8)    # 4 + 4
    assert f.area == PiValue.of(2)


# ----------------------------------------------------------------------
# detectors

def test_constancy_detector_accepts_radial():
    verdict = inv.constancy_detector(radius_squared(2), Fraction(3, 2), 1e-10)
    assert verdict.constant
    assert verdict.value == pytest.approx(2.25, rel=1e-14)


def test_constancy_detector_rejects_linear():
    verdict = inv.constancy_detector(var(2, 0), 1, 1e-10)
    assert not verdict.constant
    # defect = |S_r| M2 - M1^2 = 2 pi * pi = 2 pi^2
    assert verdict.defect == pytest.approx(2 * math.pi**2, rel=1e-14)


def test_constancy_detector_zero_potential():
    verdict = inv.constancy_detector(Polynomial.zero(2), 1, 1e-10)
    assert verdict.constant and verdict.value == 0.0


def test_odd_linear_equality_case_exact():
    # V = x1: both sides equal 2 pi^2 r^4 exactly, chi = 1/r
    for r in (Fraction(1), Fraction(2)):
        f = inv.sphere_functionals(var(2, 0), r)
        lam1 = Fraction(1) / (r * r)
        lhs = f.m2 * (f.dvr_sq + f.v_neg_lap)
        rhs = f.v_dvr * f.v_dvr + (f.m2 * f.m2) * lam1
        assert lhs == rhs == PiValue.of(2 * r**4, 2)
        verdict = inv.odd_linear_detector(var(2, 0), r, 1e-10)
        assert verdict.in_class
        assert verdict.chi == pytest.approx(1.0 / float(r), rel=1e-14)


def test_odd_linear_strict_inequality_cubic():
    # V = x1^3 at r = 1: gap = 135 pi^2/32 - 125 pi^2/32 = 5 pi^2 / 16
    verdict = inv.odd_linear_detector(var(2, 0) ** 3, 1, 1e-10)
    assert not verdict.in_class
    assert verdict.lhs == pytest.approx(135 * math.pi**2 / 32, rel=1e-14)
    assert verdict.rhs == pytest.approx(125 * math.pi**2 / 32, rel=1e-14)
    assert verdict.gap == pytest.approx(5 * math.pi**2 / 16, rel=1e-12)


def test_odd_linear_detector_preconditions():
    with pytest.raises(ValueError):
        inv.odd_linear_detector(var(2, 0) ** 2, 1, 1e-10)  # even potential
    with pytest.raises(ValueError):
        inv.odd_linear_detector(var(1), 1, 1e-10)          # dim 1
    # odd potential vanishing identically on the unit sphere
    v = var(2, 0) * (radius_squared(2) - Polynomial.constant(2, 1))
    assert v.is_odd()
    with pytest.raises(inv.DetectorUndefined):
        inv.odd_linear_detector(v, 1, 1e-10)
    assert inv.odd_linear_detector(v, 2, 1e-10) is not None  # fine elsewhere


def test_odd_linear_numeric_fixture():
    # V = f(r) x1/r with f = r^2: in class with chi = f'/f = 2/r
    fix = RadialTimesLinearHarmonic(2)
    verdict = inv.odd_linear_detector_numeric(
        fix, fix.radial_derivative, 1.2, 1e-8)
    assert verdict.in_class
    assert verdict.chi == pytest.approx(2.0 / 1.2, rel=1e-9)


def test_support_annulus_recovery():
    bump = RadialBump(0.5, 1.5)
    grid = np.arange(0.05, 2.5, 0.025)
    rec = inv.support_annulus(bump, grid, n=2, nodes=256)
    assert rec is not None
    assert rec[0] == pytest.approx(0.5, abs=0.03)
    assert rec[1] == pytest.approx(1.5, abs=0.03)


def test_support_annulus_zero_function():
    assert inv.support_annulus(lambda p: 0.0, [0.5, 1.0], n=2, nodes=32) is None


# ----------------------------------------------------------------------
# consistency between the Gaussian and sphere routes

@pytest.mark.parametrize("dim", [1, 2, 3])
def test_radial_fubini(dim):
    # int P e^{-s|x|^2} dx = int_0^inf [int_{S_r} P] e^{-s r^2} dr
    p = var(dim, 0) ** 2 + radius_squared(dim) + Polynomial.constant(dim, 1)
    if dim >= 2:
        p = p + var(dim, 0) * var(dim, 1)  # odd piece integrates to zero
    s = 0.6
    direct = inv.gaussian_integral(p, s)
    assembled = sum(
        float(c) * inv.radial_gaussian_integral(q, s)
        for q, c in inv.radial_profile(p).items()
    )
    assert assembled == pytest.approx(direct, rel=1e-10)


def _euler(p):
    out = Polynomial.zero(p.dim)
    for j in range(p.dim):
        out = out + Polynomial.variable(p.dim, j) * p.deriv(j)
    return out


@pytest.mark.parametrize("dim", [2, 3])
def test_spherical_laplacian_decomposition(dim):
    # int V Lap V e^{-s|x|^2} dx assembled in spherical coordinates:
    # radial second derivative + (n-1)/r radial first + angular term
    v = var(dim, 0) ** 3 + var(dim, 0) * var(dim, 1)
    s = 0.8
    direct = inv.gaussian_integral(v * v.laplacian(), s)

    rad = _euler(v)                      # r dV/dr on the sphere
    rad2 = _euler(rad) - rad             # r^2 d^2V/dr^2 on the sphere
    grad_sq = Polynomial.zero(dim)
    for j in range(dim):
        grad_sq = grad_sq + v.deriv(j) ** 2

    def radial_integral(profile, shift):
        return sum(
            float(c) * inv.radial_gaussian_integral(q + shift, s)
            for q, c in profile.items()
        )

    term_rr = radial_integral(inv.radial_profile(v * rad2), -2)
    term_r = (dim - 1) * radial_integral(inv.radial_profile(v * rad), -2)
    # <V, Lap_S V>/r^2 = -( |grad V|^2 - (dV/dr)^2 ) integrated on the sphere
    term_ang = -(
        radial_integral(inv.radial_profile(grad_sq), 0)
        - radial_integral(inv.radial_profile(rad * rad), -2)
    )
    assert term_rr + term_r + term_ang == pytest.approx(direct, rel=1e-10)


def test_invariant_report_shapes():
    rep = inv.invariant_report(var(2, 0) ** 2, [0.5, 1.0], [1.0, 2.0])
    assert len(rep.i1) == len(rep.s_grid) == 2
    assert len(rep.m2) == len(rep.r_grid) == 2
    assert rep.m2[0] > 0
