"""Heat-trace invariants, sphere functionals, and inverse-spectral detectors.

The three Gaussian-weighted integrals

    I1 = int V e^{-s|x|^2},  I2 = int V^2 e^{-s|x|^2},
    I3 = int (V^3 - V Lap V) e^{-s|x|^2}

are computed exactly from the even-moment formula; sphere integrals of
monomials use the classical closed-form averages, kept exact as rational
multiples of integer powers of pi (``PiValue``).  Quadrature never enters
this module; it lives in the tests as an independent oracle.

Detectors: constancy on a sphere is the Cauchy-Schwarz equality case of
M1(r)^2 <= |S_r| M2(r); for odd V, membership in the class {V|_{S_r} a
degree-one spherical harmonic with radial derivative proportional to V}
is the equality case of

    ||V||^2 (||dV/dr||^2 + <V, -Lap_S V>)  >=  <V, dV/dr>^2 + l1 ||V||^4,

with l1 = (n-1)/r^2 the first nonzero eigenvalue of the sphere Laplacian
(which carries its intrinsic 1/r^2 scaling).  Equality forces
dV/dr = chi V on the sphere with chi = <V, dV/dr> / ||V||^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .poly import Monomial, Polynomial, Rational, double_factorial
from .symbolcalc import sphere_average_weight


class DetectorUndefined(ValueError):
    """The requested detector has no meaning on this input (e.g. V = 0
    on the sphere)."""


class PiValue:
    """Exact scalar of the form  sum_k c_k * pi^k  with rational c_k."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, Rational] | None = None):
        clean: dict[int, Fraction] = {}
        if terms:
            for k, c in terms.items():
                c = Fraction(c)
                if c:
                    clean[int(k)] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("PiValue is immutable")

    @classmethod
    def of(cls, c: Rational, pi_power: int = 0) -> "PiValue":
        return cls({pi_power: Fraction(c)})

    def __add__(self, other: "PiValue") -> "PiValue":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return PiValue(out)

    def __sub__(self, other: "PiValue") -> "PiValue":
        return self + (-other)

    def __neg__(self) -> "PiValue":
        return PiValue({k: -c for k, c in self.terms.items()})

    def __mul__(self, other) -> "PiValue":
        if isinstance(other, (int, Fraction)):
            return PiValue({k: c * other for k, c in self.terms.items()})
        out: dict[int, Fraction] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = k1 + k2
                out[k] = out.get(k, Fraction(0)) + c1 * c2
        return PiValue(out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "PiValue":
        if isinstance(other, (int, Fraction)):
            return PiValue({k: c / other for k, c in self.terms.items()})
        if len(other.terms) != 1:
            raise ValueError("can only divide by a single-term PiValue")
        ((k0, c0),) = other.terms.items()
        return PiValue({k - k0: c / c0 for k, c in self.terms.items()})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, PiValue) and self.terms == other.terms

    def __float__(self) -> float:
        return float(sum(float(c) * math.pi**k for k, c in self.terms.items()))

    def as_fraction(self) -> Fraction:
        """The value when it carries no pi at all."""
        if not self.terms:
            return Fraction(0)
        if set(self.terms) != {0}:
            raise ValueError("value is not pi-free")
        return self.terms[0]

    def __repr__(self) -> str:
        if not self.terms:
            return "PiValue(0)"
        body = " + ".join(
            f"{c}" if k == 0 else (f"{c}*pi" if k == 1 else f"{c}*pi^{k}")
            for k, c in sorted(self.terms.items())
        )
        return f"PiValue({body})"


# ----------------------------------------------------------------------
# Gaussian integrals

class GaussianIntegralValue:
    """Exact value of int P(x) e^{-s|x|^2} dx over R^n:
    pi^{n/2} * sum_k c_k s^{-n/2 - k}."""

    __slots__ = ("dim", "coeffs")

    def __init__(self, dim: int, coeffs: Mapping[int, Rational] | None = None):
        clean: dict[int, Fraction] = {}
        if coeffs:
            for k, c in coeffs.items():
                c = Fraction(c)
                if c:
                    clean[int(k)] = c
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("GaussianIntegralValue is immutable")

    def __add__(self, other: "GaussianIntegralValue") -> "GaussianIntegralValue":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + c
        return GaussianIntegralValue(self.dim, out)

    def scale(self, c: Rational) -> "GaussianIntegralValue":
        return GaussianIntegralValue(self.dim, {k: v * c for k, v in self.coeffs.items()})

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GaussianIntegralValue)
            and self.dim == other.dim
            and self.coeffs == other.coeffs
        )

    def evalf(self, s: float) -> float:
        return math.pi ** (self.dim / 2.0) * sum(
            float(c) * s ** (-self.dim / 2.0 - k) for k, c in self.coeffs.items()
        )

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {c}" for k, c in sorted(self.coeffs.items()))
        return f"GaussianIntegralValue(dim={self.dim}, {{{body}}})"


def gaussian_moment(mono: Monomial) -> tuple[Fraction, int] | None:
    """int x^mono e^{-s|x|^2} dx = c * pi^{n/2} s^{-n/2 - k}; returns (c, k)
    or None when some exponent is odd."""
    if any(e % 2 for e in mono):
        return None
    nu = tuple(e // 2 for e in mono)
    k = sum(nu)
    c = Fraction(math.prod(double_factorial(2 * v - 1) for v in nu), 2**k)
    return c, k


def gaussian_integral(p: Polynomial, s: float | None = None):
    """Exact Gaussian integral of a polynomial; a float when s is given,
    otherwise the exact Laurent value in sqrt(s)."""
    out: dict[int, Fraction] = {}
    for mono, coeff in p.terms.items():
        m = gaussian_moment(mono)
        if m is None:
            continue
        c, k = m
        out[k] = out.get(k, Fraction(0)) + c * coeff
    value = GaussianIntegralValue(p.dim, out)
    return value if s is None else value.evalf(s)


def invariant_triple_exact(potential: Polynomial) -> tuple[
        GaussianIntegralValue, GaussianIntegralValue, GaussianIntegralValue]:
    """The three heat-trace invariants with s kept symbolic."""
    v = potential
    i1 = gaussian_integral(v)
    i2 = gaussian_integral(v * v)
    i3 = gaussian_integral(v * v * v - v * v.laplacian())
    return i1, i2, i3


def invariant_triple(potential: Polynomial, s: float) -> tuple[float, float, float]:
    """I1, I2, I3 at a numeric s (exact assembly, one final float)."""
    if s <= 0:
        raise ValueError("s must be positive")
    i1, i2, i3 = invariant_triple_exact(potential)
    return i1.evalf(s), i2.evalf(s), i3.evalf(s)


# ----------------------------------------------------------------------
# sphere functionals (exact, polynomial potentials)

def unit_sphere_area(n: int) -> PiValue:
    if n == 1:
        return PiValue.of(2)          # the two-point set {-1, +1}
    if n == 2:
        return PiValue.of(2, 1)       # 2 pi
    if n == 3:
        return PiValue.of(4, 1)       # 4 pi
    raise ValueError("sphere functionals support dimensions 1..3")


def unit_sphere_monomial_integral(mono: Monomial) -> PiValue:
    """int_{S^{n-1}} u^mono dsigma, exact."""
    n = len(mono)
    if any(e % 2 for e in mono):
        return PiValue()
    delta = tuple(e // 2 for e in mono)
    return unit_sphere_area(n) * sphere_average_weight(delta)


def sphere_integral(p: Polynomial, r: Rational) -> PiValue:
    """int_{S_r} p dsigma_r with the induced area measure (scales r^{n-1})."""
    r = Fraction(r)
    if r <= 0:
        raise ValueError("r must be positive")
    n = p.dim
    out = PiValue()
    for mono, c in p.terms.items():
        unit = unit_sphere_monomial_integral(mono)
        if unit:
            out = out + unit * (c * r ** (sum(mono) + n - 1))
    return out


def radial_profile(p: Polynomial) -> dict[int, PiValue]:
    """int_{S_r} p dsigma_r as an exact polynomial in r: {power: PiValue}."""
    n = p.dim
    out: dict[int, PiValue] = {}
    for mono, c in p.terms.items():
        unit = unit_sphere_monomial_integral(mono)
        if unit:
            q = sum(mono) + n - 1
            out[q] = out.get(q, PiValue()) + unit * c
    return {q: v for q, v in out.items() if v}


def radial_gaussian_integral(q: int, s: float) -> float:
    """int_0^inf r^q e^{-s r^2} dr = Gamma((q+1)/2) / (2 s^{(q+1)/2})."""
    return math.gamma((q + 1) / 2.0) / (2.0 * s ** ((q + 1) / 2.0))


def _radial_derivative_numerator(p: Polynomial) -> Polynomial:
    """x . grad p  (equals r * dp/dr on the sphere of radius r)."""
    out = Polynomial.zero(p.dim)
    for j in range(p.dim):
        out = out + Polynomial.variable(p.dim, j) * p.deriv(j)
    return out


@dataclass(frozen=True)
class SphereFunctionals:
    """Exact sphere pairings of a polynomial potential at radius r."""

    dim: int
    r: Fraction
    area: PiValue                 # |S_r|
    m1: PiValue                   # int_{S_r} V
    m2: PiValue                   # int_{S_r} V^2  ( = ||V||^2 )
    v_dvr: PiValue                # <V, dV/dr>
    dvr_sq: PiValue               # ||dV/dr||^2
    v_neg_lap: PiValue            # <V, -Lap_{S_r} V>


def sphere_functionals(potential: Polynomial, r: Rational) -> SphereFunctionals:
    """All sphere pairings used by the detectors, exactly.

    The tangential pairing uses |grad_S V|^2 = |grad V|^2 - (dV/dr)^2 and
    integrates by parts on the closed sphere, so no eigen-decomposition of
    the sphere Laplacian is needed.
    """
    r = Fraction(r)
    if r <= 0:
        raise ValueError("r must be positive")
    n = potential.dim
    rad = _radial_derivative_numerator(potential)
    grad_sq = Polynomial.zero(n)
    for j in range(n):
        grad_sq = grad_sq + potential.deriv(j) ** 2
    m2 = sphere_integral(potential * potential, r)
    dvr_sq = sphere_integral(rad * rad, r) / (r * r)
    return SphereFunctionals(
        dim=n,
        r=r,
        area=unit_sphere_area(n) * r ** (n - 1),
        m1=sphere_integral(potential, r),
        m2=m2,
        v_dvr=sphere_integral(potential * rad, r) / r,
        dvr_sq=dvr_sq,
        v_neg_lap=sphere_integral(grad_sq, r) - dvr_sq,
    )


# ----------------------------------------------------------------------
# detectors

@dataclass(frozen=True)
class ConstancyVerdict:
    constant: bool
    value: float | None           # the constant, when detected
    defect: float                 # |S_r| M2 - M1^2  (>= 0 by Cauchy-Schwarz)
    scale: float                  # |S_r| M2


def constancy_detector(potential: Polynomial, r: Rational, tol: float) -> ConstancyVerdict:
    """Declare V constant on the radius-r sphere iff the Cauchy-Schwarz
    defect |S_r| M2 - M1^2 vanishes relative to |S_r| M2."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    f = sphere_functionals(potential, r)
    defect = f.area * f.m2 - f.m1 * f.m1
    scale = float(f.area * f.m2)
    if scale == 0.0:
        return ConstancyVerdict(constant=True, value=0.0, defect=0.0, scale=0.0)
    if float(defect) <= tol * scale:
        return ConstancyVerdict(
            constant=True,
            value=float(f.m1 / f.area),
            defect=float(defect),
            scale=scale,
        )
    return ConstancyVerdict(constant=False, value=None, defect=float(defect), scale=scale)


@dataclass(frozen=True)
class OddLinearVerdict:
    in_class: bool
    chi: float | None             # <V, dV/dr> / ||V||^2 when in class
    lhs: float
    rhs: float
    gap: float


def odd_linear_detector(potential: Polynomial, r: Rational, tol: float) -> OddLinearVerdict:
    """For odd V, test equality in

        ||V||^2 (||dV/dr||^2 + <V, -Lap_S V>) >= <V, dV/dr>^2 + l1 ||V||^4

    with l1 = (n-1)/r^2.  Equality holds exactly when V restricted to the
    sphere is a degree-one spherical harmonic with dV/dr = chi V there.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if potential.dim < 2:
        raise ValueError("odd-linear detector needs genuine spheres (dim >= 2)")
    if not potential.is_odd():
        raise ValueError("potential must be odd")
    r = Fraction(r)
    f = sphere_functionals(potential, r)
    if not f.m2:
        raise DetectorUndefined(f"V vanishes identically on the sphere r={r}")
    lam1 = Fraction(potential.dim - 1) / (r * r)
    lhs = f.m2 * (f.dvr_sq + f.v_neg_lap)
    rhs = f.v_dvr * f.v_dvr + (f.m2 * f.m2) * lam1
    gap = lhs - rhs
    in_class = float(gap) <= tol * float(lhs)
    chi = float(f.v_dvr / f.m2) if in_class else None
    return OddLinearVerdict(
        in_class=in_class, chi=chi, lhs=float(lhs), rhs=float(rhs), gap=float(gap)
    )


# ----------------------------------------------------------------------
# numeric path (pointwise potentials: compactly supported fixtures etc.)

def sphere_average_numeric(f: Callable[[np.ndarray], float], r: float, n: int = 2,
                           nodes: int = 1024) -> tuple[float, float]:
    """(M1, M2) for a pointwise potential by quadrature on the sphere."""
    if r <= 0:
        raise ValueError("r must be positive")
    if n == 2:
        theta = np.linspace(0.0, 2.0 * np.pi, nodes, endpoint=False)
        pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        vals = np.array([f(p) for p in pts])
        w = 2.0 * np.pi * r / nodes
        return float(np.sum(vals) * w), float(np.sum(vals**2) * w)
    if n == 3:
        # product rule: Gauss-Legendre in cos(phi), trapezoid in theta
        mu, wmu = np.polynomial.legendre.leggauss(max(nodes // 8, 16))
        theta = np.linspace(0.0, 2.0 * np.pi, nodes, endpoint=False)
        wth = 2.0 * np.pi / nodes
        m1 = m2 = 0.0
        for m, wm in zip(mu, wmu):
            sin_phi = math.sqrt(1.0 - m * m)
            pts = np.stack([
                r * sin_phi * np.cos(theta),
                r * sin_phi * np.sin(theta),
                np.full_like(theta, r * m),
            ], axis=1)
            vals = np.array([f(p) for p in pts])
            m1 += wm * np.sum(vals) * wth
            m2 += wm * np.sum(vals**2) * wth
        return float(m1 * r * r), float(m2 * r * r)
    raise ValueError("numeric sphere averages support n = 2 or 3")


@dataclass(frozen=True)
class NumericSphereFunctionals:
    r: float
    m1: float
    m2: float
    v_dvr: float
    dvr_sq: float
    v_neg_lap: float


def sphere_functionals_numeric(f: Callable[[np.ndarray], float],
                               f_radial: Callable[[np.ndarray], float],
                               r: float, nodes: int = 2048) -> NumericSphereFunctionals:
    """Numeric counterpart of ``sphere_functionals`` on the circle (n = 2);
    the angular derivative is taken spectrally."""
    theta = np.linspace(0.0, 2.0 * np.pi, nodes, endpoint=False)
    pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    v = np.array([f(p) for p in pts])
    vr = np.array([f_radial(p) for p in pts])
    freqs = np.fft.fftfreq(nodes, d=1.0 / nodes)
    dtheta_v = np.real(np.fft.ifft(1j * freqs * np.fft.fft(v)))
    w = 2.0 * np.pi * r / nodes
    return NumericSphereFunctionals(
        r=r,
        m1=float(np.sum(v) * w),
        m2=float(np.sum(v * v) * w),
        v_dvr=float(np.sum(v * vr) * w),
        dvr_sq=float(np.sum(vr * vr) * w),
        v_neg_lap=float(np.sum(dtheta_v**2) * w) / (r * r),
    )


def odd_linear_detector_numeric(f: Callable[[np.ndarray], float],
                                f_radial: Callable[[np.ndarray], float],
                                r: float, tol: float, n: int = 2,
                                nodes: int = 2048) -> OddLinearVerdict:
    """Numeric-path version of the odd-linear detector (n = 2)."""
    if n != 2:
        raise ValueError("numeric odd-linear detector supports n = 2")
    sf = sphere_functionals_numeric(f, f_radial, r, nodes)
    if sf.m2 <= 0:
        raise DetectorUndefined(f"V vanishes on the sphere r={r}")
    lam1 = (n - 1) / r**2
    lhs = sf.m2 * (sf.dvr_sq + sf.v_neg_lap)
    rhs = sf.v_dvr**2 + lam1 * sf.m2**2
    gap = lhs - rhs
    in_class = gap <= tol * lhs
    return OddLinearVerdict(
        in_class=in_class,
        chi=sf.v_dvr / sf.m2 if in_class else None,
        lhs=lhs, rhs=rhs, gap=gap,
    )


def support_annulus(f: Callable[[np.ndarray], float], r_grid: Sequence[float],
                    n: int = 2, rel_threshold: float = 1e-10,
                    nodes: int = 512) -> tuple[float, float] | None:
    """Scan M2(r) over a radius grid and report the smallest annulus
    containing the support; None when V vanishes on the whole grid."""
    m2 = np.array([sphere_average_numeric(f, r, n, nodes)[1] for r in r_grid])
    peak = float(np.max(m2))
    if peak <= 0.0:
        return None
    alive = np.nonzero(m2 > rel_threshold * peak)[0]
    return float(r_grid[alive[0]]), float(r_grid[alive[-1]])


@dataclass(frozen=True)
class InvariantReport:
    """Invariants on an s-grid plus sphere averages on an r-grid."""

    s_grid: tuple[float, ...]
    i1: tuple[float, ...]
    i2: tuple[float, ...]
    i3: tuple[float, ...]
    r_grid: tuple[float, ...]
    m1: tuple[float, ...]
    m2: tuple[float, ...]


def invariant_report(potential: Polynomial, s_grid: Sequence[float],
                     r_grid: Sequence[float]) -> InvariantReport:
    triples = [invariant_triple(potential, s) for s in s_grid]
    v2 = potential * potential
    return InvariantReport(
        s_grid=tuple(float(s) for s in s_grid),
        i1=tuple(t[0] for t in triples),
        i2=tuple(t[1] for t in triples),
        i3=tuple(t[2] for t in triples),
        r_grid=tuple(float(r) for r in r_grid),
        m1=tuple(float(sphere_integral(potential, Fraction(r))) for r in r_grid),
        m2=tuple(float(sphere_integral(v2, Fraction(r))) for r in r_grid),
    )
