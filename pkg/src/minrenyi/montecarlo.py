"""Monte Carlo checks of eigenvalue concentration for conjugate outputs.

Two sampling modes exist on purpose. ``concentration_experiment`` and
``density_shape_correlation`` draw a fresh channel for every trial (joint
randomness over channel and input); ``conjugate_deviations`` and the
estimators built on it keep one channel fixed and only resample inputs.

Per-trial randomness comes from child streams of the RngStream passed in,
so results do not depend on evaluation order or thread count.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln
from scipy.stats import spearmanr

from ._golden import golden_section_min
from ._parallel import ordered_map
from .bounds import log_density_exponent
from .channels import RandomUnitaryChannel, conjugate_apply, sample_channel
from .quantum import RngStream, as_pure_state, eigenvalues, random_pure_state

__all__ = [
    "ConcentrationReport",
    "NearEventReport",
    "concentration_scale",
    "concentration_experiment",
    "conjugate_deviations",
    "estimate_p_lambda",
    "p_lambda_curve",
    "estimate_q_lambda",
    "binomial_standard_error",
    "decompose_relative",
    "overlap_cdf",
    "fit_interpolation",
    "near_event_experiment",
    "knn_log_density",
    "density_shape_correlation",
    "DEFAULT_LAMBDAS",
]

DEFAULT_LAMBDAS = (0.5, 1.0, 2.0, 3.0, 5.0)


def _as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError("Monte Carlo routines need an RngStream or an integer seed")


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass
class ConcentrationReport:
    D: int
    N: int
    trials: int
    deviations: np.ndarray
    median_deviation: float
    scaled_median: float

    def to_dict(self) -> dict:
        return _to_jsonable(asdict(self))


@dataclass
class NearEventReport:
    trials: int
    y0: float
    reference_spectrum: np.ndarray
    fitted_y: np.ndarray
    residuals: np.ndarray
    ls_fitted_y: np.ndarray
    fraction_above_y0: float
    median_residual: float

    def to_dict(self) -> dict:
        return _to_jsonable(asdict(self))


def concentration_scale(N: int) -> float:
    """``sqrt(ln N / N)``, the width of the lambda-maximally-mixed band per unit lambda."""
    return math.sqrt(math.log(N) / N)


def _max_deviation(ch: RandomUnitaryChannel, psi) -> float:
    q = eigenvalues(conjugate_apply(ch, psi))
    return float(np.max(np.abs(q - 1.0 / ch.D)))


def concentration_experiment(D: int, N_list, trials: int, rng=None) -> list[ConcentrationReport]:
    """Per N, sample a fresh channel and input per trial and record max_i |q_i - 1/D|.

    Trial t of the j-th N uses stream ``rng.child(j * trials + t)``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    stream = _as_stream(rng)
    reports = []
    for j, N in enumerate(N_list):
        if N <= D:
            raise ValueError(f"need N > D, got N={N}, D={D}")

        def one(t, N=N, j=j):
            gen = stream.child(j * trials + t).generator()
            ch = sample_channel(D, N, gen)
            return _max_deviation(ch, random_pure_state(N, gen))

        dev = np.array(ordered_map(one, range(trials)))
        med = float(np.median(dev))
        reports.append(
            ConcentrationReport(D, N, trials, dev, med, med / concentration_scale(N))
        )
    return reports


def conjugate_deviations(ch: RandomUnitaryChannel, trials: int, rng=None) -> np.ndarray:
    """max_i |q_i - 1/D| for ``trials`` random inputs through a fixed channel."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    stream = _as_stream(rng)
    return np.array(
        ordered_map(
            lambda t: _max_deviation(ch, random_pure_state(ch.N, stream.child(t))),
            range(trials),
        )
    )


def estimate_p_lambda(ch: RandomUnitaryChannel, lam: float, trials: int, rng=None) -> float:
    """Fraction of random inputs whose conjugate output is lambda-maximally mixed."""
    dev = conjugate_deviations(ch, trials, rng)
    return float(np.mean(dev <= lam * concentration_scale(ch.N)))


def p_lambda_curve(ch: RandomUnitaryChannel, lambdas, trials: int, rng=None) -> np.ndarray:
    """``estimate_p_lambda`` on a grid of lambdas from one shared set of inputs."""
    dev = conjugate_deviations(ch, trials, rng)
    scale = concentration_scale(ch.N)
    return np.array([np.mean(dev <= lam * scale) for lam in lambdas])


def estimate_q_lambda(
    D: int, N: int, lam: float, n_channels: int, trials_per_channel: int, rng=None
) -> float:
    """Fraction of sampled channels whose P_lambda estimate falls below 1/2.

    Channel i is drawn from ``rng.child(i).child(0)``; its inputs come from
    ``rng.child(i).child(1)``.
    """
    if n_channels < 1:
        raise ValueError("n_channels must be >= 1")
    stream = _as_stream(rng)

    def one(i):
        ch = sample_channel(D, N, stream.child(i).child(0))
        return estimate_p_lambda(ch, lam, trials_per_channel, stream.child(i).child(1))

    p_hat = np.array(ordered_map(one, range(n_channels)))
    return float(np.mean(p_hat < 0.5))


def binomial_standard_error(fraction: float, n: int) -> float:
    return math.sqrt(fraction * (1.0 - fraction) / n)


def decompose_relative(chi, psi0):
    """Write ``chi = sqrt(1 - x^2) psi0 + x phi`` after fixing chi's global phase.

    The phase makes ``<psi0|chi>`` real and non-negative. Returns
    ``(x, phi, chi_adjusted)``; ``phi`` is None when ``x <= 1e-12``.
    """
    chi = np.asarray(chi, dtype=complex)
    psi0 = as_pure_state(psi0)
    if chi.shape != psi0.shape:
        raise ValueError("chi and psi0 must have the same dimension")
    overlap = np.vdot(psi0, chi)
    if abs(overlap) > 0:
        chi = chi * (np.conj(overlap) / abs(overlap))
    rest = chi - abs(overlap) * psi0
    x = float(np.linalg.norm(rest))
    if x <= 1e-12:
        return 0.0, None, chi
    return min(x, 1.0), rest / x, chi


def overlap_cdf(x0: float, n: int) -> float:
    """``P(x^2 <= x0) = x0^(n-1)`` for a uniformly random state in C^n."""
    if not 0.0 <= x0 <= 1.0:
        raise ValueError("x0 must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    return x0 ** (n - 1)


def fit_interpolation(q, p) -> tuple[float, float, float]:
    """Fit ``q ~ y p + (1 - y) / D`` over y in [0, 1].

    Returns ``(y_minmax, residual, y_least_squares)``. The min-max residual
    is convex and piecewise linear in y, so golden section finds it; the
    endpoints are compared as well because the optimum often sits on them.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    D = q.size
    dq, dp = q - 1.0 / D, p - 1.0 / D

    def resid(y):
        return float(np.max(np.abs(dq - y * dp)))

    best_y, best_r = 1.0, resid(1.0)
    for y, r in (golden_section_min(resid, 0.0, 1.0, 1e-12), (0.0, resid(0.0))):
        if r < best_r:
            best_y, best_r = y, r
    denom = float(dp @ dp)
    y_ls = float(np.clip(dq @ dp / denom, 0.0, 1.0)) if denom > 0 else 1.0
    return float(best_y), best_r, y_ls


def near_event_experiment(
    ch: RandomUnitaryChannel, psi0, y0: float, trials: int, rng=None, states=None
) -> NearEventReport:
    """Fit each random input's conjugate spectrum against psi0's.

    ``states`` replaces the random inputs when given (trial t uses
    ``states[t]``); otherwise trial t draws from ``rng.child(t)``.
    """
    psi0 = as_pure_state(psi0, ch.N)
    p = eigenvalues(conjugate_apply(ch, psi0))
    stream = _as_stream(rng)
    if states is not None:
        states = [np.asarray(s, dtype=complex) for s in states]
        trials = len(states)

    def one(t):
        chi = states[t] if states is not None else random_pure_state(ch.N, stream.child(t))
        q = eigenvalues(conjugate_apply(ch, chi))
        return fit_interpolation(q, p)

    fits = np.array(ordered_map(one, range(trials)), dtype=float).reshape(trials, 3)
    ys, res, ls = fits[:, 0], fits[:, 1], fits[:, 2]
    return NearEventReport(
        trials=trials,
        y0=float(y0),
        reference_spectrum=p,
        fitted_y=ys,
        residuals=res,
        ls_fitted_y=ls,
        fraction_above_y0=float(np.mean(ys >= y0)),
        median_residual=float(np.median(res)),
    )


def knn_log_density(points, k: int = 10) -> np.ndarray:
    """k-nearest-neighbour log density estimate at each sample point."""
    x = np.asarray(points, dtype=float)
    n, d = x.shape
    dist, _ = cKDTree(x).query(x, k + 1)
    r = dist[:, -1]
    log_ball = (d / 2) * math.log(math.pi) - gammaln(d / 2 + 1) + d * np.log(r)
    return np.log(k) - np.log(n - 1) - log_ball


def density_shape_correlation(D: int, N: int, samples: int, rng=None, k: int = 10):
    """Spearman correlation between kNN density and the density exponent.

    Spectra come from fresh channels and inputs (same sampling as
    ``concentration_experiment``). Points live in the first D - 1
    coordinates of the descending spectrum. Returns ``(rho, spectra)``.
    """
    stream = _as_stream(rng)

    def one(t):
        gen = stream.child(t).generator()
        ch = sample_channel(D, N, gen)
        return eigenvalues(conjugate_apply(ch, random_pure_state(N, gen)))

    spectra = np.array(ordered_map(one, range(samples)))
    dens = knn_log_density(spectra[:, : D - 1], k)
    expo = np.array([log_density_exponent(q, N, D) for q in spectra])
    return float(spearmanr(dens, expo)[0]), spectra
