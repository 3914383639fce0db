"""Independent numerical ground truth for the symbolic expansion.

The perturbed oscillator H = A + hbar^2 V is discretized in the Hermite
eigenbasis of A, where A is exactly diagonal (eigenvalues hbar*|k|) and
polynomial potentials have exactly banded matrices built from the ladder
recurrence for the position operator (scale sqrt(hbar/2)).  The heat
semigroup then comes from one dense symmetric eigendecomposition, so the
oracle's error budget is pure basis truncation.

Truncation handling: ``heat_trace`` adds the closed-form tail of the free
trace beyond the basis (exact for V = 0, and the natural first-order
truncation mitigation otherwise); the tail fraction is reported and a
``TruncationWarning`` is raised when it is not negligible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigh

from . import mehler
from .poly import Polynomial


class TruncationWarning(UserWarning):
    """Basis truncation may be contaminating the requested quantity."""


@dataclass(frozen=True)
class SpectralModel:
    """Eigendecomposition of the discretized Hamiltonian."""

    hbar: float
    dim: int
    basis_size: int  # states per axis
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    potential: Polynomial | None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are supported")


def position_matrix(size: int, hbar: float) -> np.ndarray:
    """Position operator in the Hermite basis: offdiagonal sqrt(hbar*(k+1)/2)."""
    off = np.sqrt(hbar * np.arange(1, size) / 2.0)
    mat = np.zeros((size, size))
    idx = np.arange(size - 1)
    mat[idx, idx + 1] = off
    mat[idx + 1, idx] = off
    return mat


def position_power_matrices(size: int, hbar: float, max_power: int) -> list[np.ndarray]:
    """[I, x, x^2, ..., x^max_power] cropped to ``size`` states.

    Powers are computed in an enlarged basis (size + max_power) before
    cropping, so every retained matrix element is exact up to rounding:
    intermediate ladder states never hit the truncation edge.
    """
    big = size + max_power
    x = position_matrix(big, hbar)
    mats = [np.eye(big)]
    for _ in range(max_power):
        mats.append(mats[-1] @ x)
    return [m[:size, :size].copy() for m in mats]


def build_hamiltonian(potential: Polynomial | None, hbar: float, basis_size: int,
                      dim: int | None = None) -> SpectralModel:
    """Discretize H = A + hbar^2 V and eigendecompose.

    ``potential`` may be None (free oscillator).  For dim 2 only traces are
    supported downstream (tensor basis of size basis_size^2).
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    if basis_size < 16:
        raise ValueError("basis_size must be at least 16")
    if potential is None:
        if dim is None:
            dim = 1
    else:
        dim = potential.dim
    if potential is None or not potential:
        # free oscillator: exactly diagonal, no decomposition needed
        if dim == 1:
            vals = hbar * np.arange(basis_size, dtype=float)
            vecs = np.eye(basis_size)
        elif dim == 2:
            ka = np.arange(basis_size)
            vals = np.sort(hbar * (ka[:, None] + ka[None, :]).ravel())
            vecs = None  # traces only in dim 2
        else:
            raise ValueError("only dimensions 1 and 2 are supported")
        return SpectralModel(
            hbar=hbar, dim=dim, basis_size=basis_size,
            eigenvalues=vals, eigenvectors=vecs, potential=potential,
        )
    if dim == 1:
        hmat = np.diag(hbar * np.arange(basis_size, dtype=float))
        pows = position_power_matrices(basis_size, hbar, potential.degree())
        vmat = np.zeros_like(hmat)
        for mono, c in potential.terms.items():
            vmat += float(c) * pows[mono[0]]
        hmat += hbar * hbar * vmat
    elif dim == 2:
        if basis_size > 100:
            raise ValueError("dim-2 basis limited to 100 states per axis")
        ka = np.arange(basis_size)
        hmat = np.diag(hbar * (ka[:, None] + ka[None, :]).ravel().astype(float))
        deg = max(max(m) for m in potential.terms)
        pows = position_power_matrices(basis_size, hbar, deg)
        vmat = np.zeros_like(hmat)
        for mono, c in potential.terms.items():
            vmat += float(c) * np.kron(pows[mono[0]], pows[mono[1]])
        hmat += hbar * hbar * vmat
    else:
        raise ValueError("only dimensions 1 and 2 are supported")
    hmat = 0.5 * (hmat + hmat.T)
    vals, vecs = eigh(hmat)
    return SpectralModel(
        hbar=hbar,
        dim=dim,
        basis_size=basis_size,
        eigenvalues=vals,
        eigenvectors=vecs,
        potential=potential,
    )


def hermite_functions(count: int, u: np.ndarray) -> np.ndarray:
    """First ``count`` L2-normalized Hermite functions at points u,
    via the stable three-term recurrence.  Shape (count, len(u))."""
    u = np.asarray(u, dtype=float)
    out = np.zeros((count, u.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * u * u)
    if count > 1:
        out[1] = np.sqrt(2.0) * u * out[0]
    for k in range(1, count - 1):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * u * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


def basis_functions(model: SpectralModel, xs: np.ndarray) -> np.ndarray:
    """Semiclassically scaled Hermite functions hbar^{-1/4} h_k(x/sqrt(hbar))."""
    u = np.asarray(xs, dtype=float) / np.sqrt(model.hbar)
    return model.hbar ** -0.25 * hermite_functions(model.basis_size, u)


def free_tail(hbar: float, t: float, basis_size: int, dim: int) -> float:
    """Closed-form tail of the free trace beyond the truncated basis."""
    q = np.exp(-t * hbar)
    full = 1.0 / (1.0 - q)
    trunc = (1.0 - q**basis_size) / (1.0 - q)
    return full**dim - trunc**dim


def heat_trace(model: SpectralModel, t: float, tail: str = "free") -> float:
    """Trace of e^{-tH} from the spectrum, with the free tail correction
    (``tail='none'`` disables it)."""
    if t <= 0:
        raise ValueError("t must be positive")
    if tail not in ("free", "none"):
        raise ValueError("tail must be 'free' or 'none'")
    base = float(np.sum(np.exp(-t * model.eigenvalues)))
    correction = free_tail(model.hbar, t, model.basis_size, model.dim)
    if correction > 1e-3 * base:
        warnings.warn(
            f"free-tail fraction {correction / base:.2e} is large; increase the basis",
            TruncationWarning,
            stacklevel=2,
        )
    return base + correction if tail == "free" else base


def heat_kernel_diag(model: SpectralModel, t: float, xs: Sequence[float],
                     tail_tol: float = 1e-6) -> np.ndarray:
    """Diagonal kernel e^{-tH}(x, x) = sum_j e^{-t lambda_j} |phi_j(x)|^2
    at the given points (dim 1 only)."""
    if model.dim != 1:
        raise ValueError("diagonal kernel evaluation is implemented for dim 1 only")
    if t <= 0:
        raise ValueError("t must be positive")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    phi = model.eigenvectors.T @ basis_functions(model, xs)
    weights = np.exp(-t * model.eigenvalues)
    result = weights @ (phi * phi)
    # tail heuristic: free tail times an amplitude bound for |phi_k(x)|^2,
    # exponentially suppressed where even the top mode is evanescent
    amp = model.hbar ** -0.5 / np.sqrt(2.0 * model.basis_size)
    u_sq = np.min(xs * xs) / model.hbar
    barrier = max(0.0, u_sq - (2.0 * model.basis_size + 1.0))
    est = free_tail(model.hbar, t, model.basis_size, 1) * amp * np.exp(-barrier / 2.0)
    if est > tail_tol * max(float(np.max(result)), 1e-300):
        warnings.warn(
            f"estimated truncation tail {est:.2e} exceeds tolerance",
            TruncationWarning,
            stacklevel=2,
        )
    return result


@dataclass(frozen=True)
class HSweepFit:
    """Least-squares fit of the normalized defect against powers of hbar^2."""

    hbars: tuple[float, ...]
    s: float
    points: tuple[float, ...]
    defects: np.ndarray          # shape (len(hbars), len(points))
    coefficients: np.ndarray     # shape (n_terms, len(points))
    residuals: np.ndarray        # rms residual per point
    condition_number: float
    tail_fractions: tuple[float, ...] = field(default=())

    @property
    def c1(self) -> np.ndarray:
        return self.coefficients[0]

    @property
    def c2(self) -> np.ndarray:
        return self.coefficients[1]


def normalized_defect(model: SpectralModel, s: float, xs: Sequence[float]) -> np.ndarray:
    """[free kernel - perturbed kernel] / prefactor on the diagonal."""
    hbar = model.hbar
    t = mehler.t_of_s(s, hbar)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    free = np.array([mehler.kernel_eval((x,), (x,), s, hbar) for x in xs])
    pert = heat_kernel_diag(model, t, xs)
    return (free - pert) / mehler.diagonal_prefactor(s, hbar, 1)


def fit_expansion(potential: Polynomial, s: float, xs: Sequence[float],
                  hbars: Sequence[float], basis_size: int = 400,
                  n_terms: int = 3, jobs: int = 1) -> HSweepFit:
    """Sweep hbar, measure the normalized defect, and fit
    D = c1 hbar^2 + c2 hbar^4 (+ c3 hbar^6).

    Requires at least three hbar samples in (approximately) geometric
    progression with max(hbar)*s < 0.5.  The sweep entries are independent;
    ``jobs`` > 1 runs them on a thread pool (all inputs are immutable).
    """
    hbars = tuple(float(h) for h in hbars)
    if len(hbars) < 3:
        raise ValueError("need at least 3 hbar samples to separate hbar^2 and hbar^4")
    ratios = [hbars[i] / hbars[i + 1] for i in range(len(hbars) - 1)]
    if max(ratios) / min(ratios) > 1.5:
        raise ValueError("hbar samples should form a roughly geometric progression")
    if max(hbars) * s >= 0.5:
        raise ValueError("max(hbar)*s must be < 0.5")
    if not 2 <= n_terms <= 3:
        raise ValueError("n_terms must be 2 or 3")
    xs = tuple(float(x) for x in xs)

    def measure(hbar: float) -> tuple[np.ndarray, float]:
        model = build_hamiltonian(potential, hbar, basis_size)
        t = mehler.t_of_s(s, hbar)
        tail = free_tail(hbar, t, basis_size, 1) / mehler.free_trace(s, hbar, 1)
        return normalized_defect(model, s, xs), tail

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            measured = list(pool.map(measure, hbars))
    else:
        measured = [measure(h) for h in hbars]
    rows = [m[0] for m in measured]
    tails = [m[1] for m in measured]
    defects = np.vstack(rows)
    u = np.array(hbars) ** 2
    design = np.vander(u, n_terms + 1, increasing=True)[:, 1:]
    coeffs, _, _, _ = np.linalg.lstsq(design, defects, rcond=None)
    resid = defects - design @ coeffs
    rms = np.sqrt(np.mean(resid**2, axis=0))
    return HSweepFit(
        hbars=hbars,
        s=s,
        points=xs,
        defects=defects,
        coefficients=coeffs,
        residuals=rms,
        condition_number=float(np.linalg.cond(design)),
        tail_fractions=tuple(tails),
    )
