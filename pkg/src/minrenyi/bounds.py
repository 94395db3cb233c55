"""Closed-form bounds and rates for the product-channel additivity question.

All logarithms are natural. Orders ``p`` live in the open interval (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._golden import golden_section_min

__all__ = [
    "CriticalConstants",
    "mixture_bound",
    "entangled_input_bound",
    "threshold_profile",
    "find_critical",
    "in_violation_window",
    "entropy_gap_threshold",
    "squared_deviation_from_gap",
    "log_density_exponent",
    "deficit_rate",
]


def _check_order(p):
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")


def _check_gap(dS):
    if not dS >= 0:
        raise ValueError(f"entropy gap must be non-negative, got {dS}")


@dataclass(frozen=True)
class CriticalConstants:
    y0: float
    h0: float
    p0: float


def mixture_bound(weights, p: float) -> float:
    """``ln((sum w_i^2)^p + sum_{i != j} (w_i w_j)^p) / (1 - p)``.

    Upper bound on the output entropy of ``E (x) conj(E)`` at the maximally
    entangled input, given the channel weights.
    """
    _check_order(p)
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be a probability vector")
    diag = np.sum(w * w)
    outer = np.outer(w, w) ** p
    off = outer.sum() - np.trace(outer)
    return float(math.log(diag**p + off) / (1.0 - p))


def entangled_input_bound(D: int, p: float) -> float:
    """``2 ln D + ln(1 - 1/D + D^(p-2)) / (1 - p)``, the weight-free bound."""
    _check_order(p)
    if D < 1:
        raise ValueError("D must be >= 1")
    return 2.0 * math.log(D) + math.log(1.0 - 1.0 / D + D ** (p - 2.0)) / (1.0 - p)


def threshold_profile(y: float) -> float:
    """``2 y^2 / (-ln(1 - y))`` on (0, 1).

    The sign is chosen so the profile is positive; its maximum fixes the
    edge of the non-additivity window.
    """
    if not 0.0 < y < 1.0:
        raise ValueError(f"y must lie in (0, 1), got {y}")
    return 2.0 * y * y / -math.log1p(-y)


def find_critical(grid_points: int = 10_000, tol: float = 1e-12) -> CriticalConstants:
    """Maximize the threshold profile: coarse grid, then golden section.

    Unimodality is checked on the grid (one sign change of the discrete
    differences) before the golden-section refinement relies on it.
    """
    y = np.arange(1, grid_points) / grid_points
    vals = 2.0 * y * y / -np.log1p(-y)
    signs = np.sign(np.diff(vals))
    signs = signs[signs != 0]
    if np.count_nonzero(np.diff(signs)) != 1:
        raise ArithmeticError("threshold profile is not unimodal on the grid")
    i = int(np.argmax(vals))
    lo, hi = y[max(i - 1, 0)], y[min(i + 1, y.size - 1)]
    y0, neg = golden_section_min(lambda t: -threshold_profile(t), float(lo), float(hi), tol)
    h0 = -neg
    p0 = (1.0 - math.sqrt(1.0 - h0)) / 2.0
    return CriticalConstants(y0=float(y0), h0=float(h0), p0=float(p0))


def in_violation_window(p: float, c: CriticalConstants) -> bool:
    return (0.0 < p < c.p0) or (1.0 - c.p0 < p < 1.0)


def entropy_gap_threshold(D: int, p: float) -> float:
    """Gap dS with ``(D^(1-p) - dS)^2 = (D^2 - D + D^p) D^(-2p)``.

    Twice the entropy ``ln(D^(1-p) - dS) / (1 - p)`` equals
    ``entangled_input_bound(D, p)``.
    """
    _check_order(p)
    if D < 2:
        raise ValueError("D must be >= 2")
    return D ** (1.0 - p) - D ** (-p) * math.sqrt(D * D - D + D**p)


def squared_deviation_from_gap(D: int, p: float, dS: float) -> float:
    """Leading-order ``sum_i (D q_i - 1)^2 = 2 D^p dS / (p (1 - p))``."""
    _check_order(p)
    _check_gap(dS)
    if D < 1:
        raise ValueError("D must be >= 1")
    return 2.0 * D**p * dS / (p * (1.0 - p))


def log_density_exponent(q, N: int, D: int) -> float:
    """``(N - D) sum_i (ln(D q_i) + 1 - D q_i)`` for a spectrum q of length D.

    This is the log of the spectrum-dependent factor of the eigenvalue
    density of conjugate outputs; the normalizing prefactor is not included.
    Returns ``-inf`` when some ``q_i`` is zero.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (D,):
        raise ValueError(f"spectrum must have length D = {D}")
    if N <= D:
        raise ValueError("need N > D")
    if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("q must be a probability vector")
    if np.any(q == 0):
        return -math.inf
    x = D * q
    return float((N - D) * np.sum(np.log(x) + 1.0 - x))


def deficit_rate(p: float, D: int, dS: float) -> float:
    """Per-(N - D) exponential rate ``D^p dS / (p (1 - p))`` of the deficit density."""
    _check_order(p)
    _check_gap(dS)
    return D**p * dS / (p * (1.0 - p))
