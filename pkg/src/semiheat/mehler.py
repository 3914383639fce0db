"""Closed-form heat kernel of the semiclassical harmonic oscillator.

The oscillator here is  A = sum_i (-(hbar^2/2) d^2/dx_i^2 + x_i^2/2 - hbar/2),
whose spectrum is hbar * |k| over multi-indices k >= 0.  Mehler's formula
gives its heat kernel in closed form; in the rescaled time

    s = (1/hbar) (1 - e^{-t hbar}) / (1 + e^{-t hbar})

the kernel factors into a free-heat-like Gaussian in x - y and a standing
Gaussian in x + y:

    e^{-tA}(x, y) = (4 pi hbar^2 s)^{-n/2} (1 + hbar s)^n
                    * exp( -|x-y|^2 / (4 hbar^2 s) - s |x+y|^2 / 4 ).

The prefactor is pinned by the exact free trace: integrating the diagonal
must reproduce sum_k e^{-t hbar |k|} = ((1 + hbar s)/(2 hbar s))^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


def _check_positive(**vals: float) -> None:
    for name, v in vals.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")


def s_of_t(t: float, hbar: float) -> float:
    """Rescaled time s as a function of heat time t; s ~ t/2 for small hbar.

    Uses expm1 so the small-(t*hbar) regime keeps full precision.
    """
    _check_positive(t=t, hbar=hbar)
    q = math.exp(-t * hbar)
    return -math.expm1(-t * hbar) / ((1.0 + q) * hbar)


def t_of_s(s: float, hbar: float) -> float:
    """Heat time t as a function of s; singular as hbar*s -> 1."""
    _check_positive(s=s, hbar=hbar)
    if hbar * s >= 1.0:
        raise ValueError(f"time change singular: hbar*s = {hbar * s} >= 1")
    u = hbar * s
    return (math.log1p(u) - math.log1p(-u)) / hbar


@dataclass(frozen=True)
class TimePair:
    """A consistent (t, s) pair at a given hbar."""

    t: float
    s: float
    hbar: float

    def __post_init__(self):
        _check_positive(t=self.t, s=self.s, hbar=self.hbar)
        if self.hbar * self.s >= 1.0:
            raise ValueError("hbar*s must be < 1")
        lhs = math.exp(-self.t * self.hbar)
        rhs = (1.0 - self.hbar * self.s) / (1.0 + self.hbar * self.s)
        if abs(lhs - rhs) > 1e-10 * max(abs(lhs), abs(rhs), 1e-300):
            raise ValueError("t and s are inconsistent")

    @classmethod
    def from_t(cls, t: float, hbar: float) -> "TimePair":
        return cls(t=t, s=s_of_t(t, hbar), hbar=hbar)

    @classmethod
    def from_s(cls, s: float, hbar: float) -> "TimePair":
        return cls(t=t_of_s(s, hbar), s=s, hbar=hbar)


def exponent(x: Sequence[float], y: Sequence[float], s: float, hbar: float) -> float:
    """Exponent of the kernel in rescaled time:
    -|x-y|^2/(4 hbar^2 s) - s |x+y|^2 / 4."""
    d2 = sum((a - b) ** 2 for a, b in zip(x, y))
    p2 = sum((a + b) ** 2 for a, b in zip(x, y))
    return -d2 / (4.0 * hbar * hbar * s) - s * p2 / 4.0


def _exponent_time_form(x: Sequence[float], y: Sequence[float], t: float, hbar: float) -> float:
    """Same exponent written directly in heat time, before the change of
    variables: used to validate the algebra of the time substitution."""
    q = math.exp(-t * hbar)
    n2 = sum(a * a for a in x) + sum(b * b for b in y)
    d2 = sum((a - b) ** 2 for a, b in zip(x, y))
    return (
        -n2 / (2.0 * hbar) * (1.0 - q) / (1.0 + q)
        - q * d2 / (hbar * (1.0 - q) * (1.0 + q))
    )


def diagonal_prefactor(s: float, hbar: float, n: int) -> float:
    """(4 pi hbar^2 s)^{-n/2} (1 + hbar s)^n."""
    _check_positive(s=s, hbar=hbar)
    return (4.0 * math.pi * hbar * hbar * s) ** (-n / 2.0) * (1.0 + hbar * s) ** n


def kernel_eval(x: Sequence[float], y: Sequence[float], s: float, hbar: float) -> float:
    """Heat kernel of A at the point pair (x, y) in rescaled time s."""
    if len(x) != len(y):
        raise ValueError("x and y must have the same dimension")
    _check_positive(s=s, hbar=hbar)
    if hbar * s >= 1.0:
        raise ValueError("hbar*s must be < 1")
    n = len(x)
    return diagonal_prefactor(s, hbar, n) * math.exp(exponent(x, y, s, hbar))


def free_trace(s: float, hbar: float, n: int) -> float:
    """Exact trace of e^{-tA}: the geometric series over the spectrum
    hbar*|k| equals ((1 + hbar s)/(2 hbar s))^n in rescaled time."""
    _check_positive(s=s, hbar=hbar)
    if hbar * s >= 1.0:
        raise ValueError("hbar*s must be < 1")
    return ((1.0 + hbar * s) / (2.0 * hbar * s)) ** n
