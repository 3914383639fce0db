"""semiheat: semiclassical heat-kernel expansion of the perturbed
harmonic oscillator.

Tiers:
  - exact: polynomial/operator algebra over the rationals (poly, diffop),
    the Kantorovitz recursion and diagonal defect expansion (kantorovitz),
    and the parallel symbol calculus (symbolcalc);
  - closed form: Mehler kernel and time change (mehler);
  - numeric: Hermite-basis spectral oracle (oracle) and quadrature-free
    invariants/detectors (invariants).
"""

__version__ = "0.1.0"

from .diffop import DiffOp, GradingError, HGradedOp, op_apply, op_commutator, op_compose
from .gaussian import GaussianLaurent, HSeries
from .kantorovitz import (
    defect_expansion,
    diagonal_eval,
    kantorovitz_closed_form,
    kantorovitz_step,
    operator_chain,
)
from .mehler import TimePair, free_trace, kernel_eval, s_of_t, t_of_s
from .poly import Polynomial, poly_mul, radius_squared
from .symbolcalc import (
    GradedSymbol,
    PhaseSymbol,
    full_symbol_step,
    leading_diagonal_term,
    principal_step,
    principal_symbol_closed_form,
    subprincipal_step,
    universal_trace_polynomial,
)

__all__ = [
    "DiffOp",
    "GaussianLaurent",
    "GradedSymbol",
    "GradingError",
    "HGradedOp",
    "HSeries",
    "PhaseSymbol",
    "Polynomial",
    "TimePair",
    "defect_expansion",
    "diagonal_eval",
    "free_trace",
    "full_symbol_step",
    "kantorovitz_closed_form",
    "kantorovitz_step",
    "kernel_eval",
    "leading_diagonal_term",
    "op_apply",
    "op_commutator",
    "op_compose",
    "operator_chain",
    "poly_mul",
    "principal_step",
    "principal_symbol_closed_form",
    "radius_squared",
    "s_of_t",
    "subprincipal_step",
    "t_of_s",
    "universal_trace_polynomial",
]
