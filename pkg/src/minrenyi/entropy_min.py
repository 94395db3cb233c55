"""Multistart estimation of minimum output Renyi entropy over pure inputs.

The output spectrum of a pure input is read off the singular values of the
Kraus-column matrix ``A`` (column i is ``sqrt(w_i) U_i^dag psi``): the
nonzero eigenvalues of both the direct and the conjugate output are the
squared singular values. Going through the SVD keeps tiny eigenvalues
accurate to ``eps * sigma`` instead of ``eps``, which matters for p < 1
where ``lambda**p`` amplifies noise near zero.

Every value returned here is an upper bound on the true minimum: it is the
entropy of an explicit witness state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .channels import RandomUnitaryChannel, complex_conjugate
from .quantum import (
    RngStream,
    _entropy_kernel,
    as_generator,
    maximally_entangled,
    random_pure_state,
    renyi_entropy,
    renyi_order,
)

__all__ = [
    "MinimizationConfig",
    "EntropyEstimate",
    "DescentResult",
    "output_entropy",
    "product_output_entropy",
    "riemannian_gradient",
    "local_descent",
    "minimize_output_entropy",
    "minimize_product_entropy",
    "brute_force_min",
    "PRODUCT_DIM_LIMIT",
]

PRODUCT_DIM_LIMIT = 64
ARMIJO = 1e-4
SHRINK = 0.5
MIN_STEP = 1e-20

_EPS = np.finfo(float).eps
# singular values below s_max * max(shape) * eps * RANK_SAFETY count as zero;
# the safety factor absorbs rounding in the input state, so the same state
# reached by different arithmetic gets the same rank decision
RANK_SAFETY = 10.0


@dataclass(frozen=True)
class MinimizationConfig:
    starts: int = 32
    max_iters: int = 2000
    grad_tol: float = 1e-8
    value_tol: float = 1e-10
    fd_step: float = 1e-6
    include_special_starts: bool = True

    def __post_init__(self):
        if self.starts < 1 or self.max_iters < 1:
            raise ValueError("starts and max_iters must be >= 1")
        if min(self.grad_tol, self.value_tol, self.fd_step) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class EntropyEstimate:
    value: float
    witness: np.ndarray
    start_index: int
    iterations: int
    converged: bool
    all_start_values: np.ndarray


@dataclass
class DescentResult:
    psi: np.ndarray
    value: float
    iterations: int
    converged: bool
    values: list = field(default_factory=list)
    fd_steps: int = 0


class _SingleMap:
    def __init__(self, ch: RandomUnitaryChannel):
        self.dim = ch.N
        self.n_kraus = ch.D
        root = np.sqrt(ch.weights)[:, None, None]
        self._down = ch.adjoints * root
        self._up = ch.unitaries * root

    def columns(self, psi):
        return (self._down @ psi).T

    def combine(self, b):
        return np.einsum("kij,jk->i", self._up, b)

    def operator(self, c):
        """Matrix of ``psi -> A(psi) c``."""
        return np.einsum("k,kij->ij", c, self._down)


class _ProductMap:
    """Kraus action of ``ch_a (x) ch_b`` on vectors with index ``i*N_b + j``."""

    def __init__(self, ch_a: RandomUnitaryChannel, ch_b: RandomUnitaryChannel):
        self.na, self.nb = ch_a.N, ch_b.N
        self.da, self.db = ch_a.D, ch_b.D
        self.dim = self.na * self.nb
        self.n_kraus = self.da * self.db
        self._root = np.sqrt(np.outer(ch_a.weights, ch_b.weights))[:, :, None, None]
        self._ua, self._uad = ch_a.unitaries, ch_a.adjoints
        self._vb = ch_b.unitaries
        self._vb_conj = np.conj(ch_b.unitaries)
        self._vb_t = np.swapaxes(ch_b.unitaries, 1, 2)

    def columns(self, psi):
        m = psi.reshape(self.na, self.nb)
        left = self._uad @ m
        blocks = (left[:, None] @ self._vb_conj[None]) * self._root
        return blocks.reshape(self.n_kraus, self.dim).T

    def combine(self, b):
        blocks = b.T.reshape(self.da, self.db, self.na, self.nb) * self._root
        right = np.sum(blocks @ self._vb_t[None], axis=1)
        return np.sum(self._ua @ right, axis=0).reshape(self.dim)


def _singular_values(a, compute_uv=False):
    if compute_uv:
        w, s, vh = np.linalg.svd(a, full_matrices=False)
    else:
        s = np.linalg.svd(a, compute_uv=False)
    s = np.where(s < s[0] * max(a.shape) * _EPS * RANK_SAFETY, 0.0, s)
    return (w, s, vh) if compute_uv else s


class _Objective:
    def __init__(self, kmap, order):
        self.kmap = kmap
        self.order = renyi_order(order)

    def value(self, psi) -> float:
        s = _singular_values(self.kmap.columns(psi))
        return float(_entropy_kernel(s * s, self.order.p, self.order.von_neumann))

    def value_and_grad(self, psi):
        """Entropy and its complex Euclidean gradient ``G``.

        ``G`` satisfies ``dH = Re(G^dag dpsi)``. With ``G = A^dag A`` and
        ``M = H'(G)``, ``A M = W diag(sigma f'(sigma^2)) V^dag``, which stays
        bounded at zero singular values whenever ``p >= 1/2``.
        """
        w, s, vh = _singular_values(self.kmap.columns(psi), compute_uv=True)
        lam = s * s
        pos = s > 0
        safe = np.where(pos, s, 1.0)
        p = self.order.p
        if self.order.von_neumann:
            value = float(_entropy_kernel(lam, 1.0, True))
            coef = np.where(pos, -safe * (2.0 * np.log(safe) + 1.0), 0.0)
        else:
            total = np.sum(np.where(pos, safe ** (2 * p), 0.0))
            value = float(np.log(total) / (1.0 - p))
            coef = np.where(pos, p * safe ** (2 * p - 1) / ((1.0 - p) * total), 0.0)
        b = (w * coef) @ vh
        return value, 2.0 * self.kmap.combine(b)

    def fd_gradient(self, psi, step):
        """Central differences of ``H(x / |x|)`` over the 2*dim real coordinates."""
        n = psi.shape[0]
        grad = np.zeros(n, dtype=complex)
        for unit, slot in ((1.0, "re"), (1j, "im")):
            for k in range(n):
                e = np.zeros(n, dtype=complex)
                e[k] = unit * step
                fp = self.value(_normalize(psi + e))
                fm = self.value(_normalize(psi - e))
                d = (fp - fm) / (2 * step)
                if slot == "re":
                    grad[k] += d
                else:
                    grad[k] += 1j * d
        return grad


def _snap_to_face(kmap, psi, rel_tol=1e-6, max_rounds=50):
    """Push singular values below ``rel_tol * sigma_max`` to exact zero.

    Alternates between the right singular vectors C of the tiny singular
    values and the unit vector psi minimizing ``|A(psi) C|``, aiming for the
    bare ``max(shape) * eps`` level so the result sits well inside the rank
    cutoff. Returns None when there is nothing to snap or the alternation
    does not get below the cutoff.
    """
    landed = None
    for _ in range(max_rounds):
        a = kmap.columns(psi)
        _, s, vh = np.linalg.svd(a, full_matrices=False)
        tiny = s < rel_tol * s[0]
        if not np.any(tiny):
            return landed
        floor = s[0] * max(a.shape) * _EPS
        if np.all(s[tiny] < floor * RANK_SAFETY):
            landed = psi
            if np.all(s[tiny] < floor):
                break
        stacked = np.vstack([kmap.operator(c) for c in vh[tiny].conj()])
        psi = _normalize(np.linalg.svd(stacked)[2][-1].conj())
    return landed


def _normalize(psi):
    return psi / np.linalg.norm(psi)


def _tangent(psi, g):
    return g - np.real(np.vdot(psi, g)) * psi


def output_entropy(ch: RandomUnitaryChannel, psi, order) -> float:
    """Renyi entropy of ``ch(|psi><psi|)`` computed from the Kraus-column SVD."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (ch.N,):
        raise ValueError(f"state has dimension {psi.shape}, channel acts on dimension {ch.N}")
    s = _singular_values(_SingleMap(ch).columns(psi))
    return renyi_entropy(s * s, order)


def product_output_entropy(ch_a: RandomUnitaryChannel, ch_b: RandomUnitaryChannel, psi, order) -> float:
    """Renyi entropy of ``(ch_a (x) ch_b)(|psi><psi|)``.

    Inputs of numerical Schmidt rank one are evaluated through the factor
    spectra, whose tensor product is the exact output spectrum; this keeps
    the entropy of ``psi_a (x) psi_b`` equal to the sum of the factor
    entropies even when tiny eigenvalues are present.
    """
    kmap = _ProductMap(ch_a, ch_b)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (kmap.dim,):
        raise ValueError(f"state has dimension {psi.shape}, expected {kmap.dim}")
    u, c, vh = np.linalg.svd(psi.reshape(kmap.na, kmap.nb))
    if c.size == 1 or c[1] <= c[0] * max(kmap.na, kmap.nb) * _EPS * RANK_SAFETY:
        sa = _singular_values(_SingleMap(ch_a).columns(u[:, 0]))
        sb = _singular_values(_SingleMap(ch_b).columns(vh[0]))
        return renyi_entropy(np.outer(sa * sa, sb * sb).ravel(), order)
    s = _singular_values(kmap.columns(psi))
    return renyi_entropy(s * s, order)


def riemannian_gradient(ch: RandomUnitaryChannel, psi, order) -> np.ndarray:
    """Sphere-projected gradient of the output entropy, as a complex vector.

    Real part holds the derivatives along Re(psi), imaginary part along Im(psi).
    """
    psi = np.asarray(psi, dtype=complex)
    _, g = _Objective(_SingleMap(ch), order).value_and_grad(psi)
    return _tangent(psi, g)


def local_descent(objective: _Objective, psi0, cfg: MinimizationConfig) -> DescentResult:
    """Projected gradient descent on the unit sphere with Armijo backtracking.

    Each trial point is ``normalize(psi - t * grad)``; t halves until the
    sufficient-decrease test passes. The first trial step is 1; later ones
    start at twice the previously accepted step, capped at 1.
    """
    psi = _normalize(np.asarray(psi0, dtype=complex))
    f, g = objective.value_and_grad(psi)
    values = [f]
    fd_steps = 0
    converged = False
    it = 0
    t_accepted = 0.5
    while it < cfg.max_iters:
        if not np.all(np.isfinite(g)):
            g = objective.fd_gradient(psi, cfg.fd_step)
            fd_steps += 1
        g = _tangent(psi, g)
        gnorm2 = float(np.real(np.vdot(g, g)))
        if np.sqrt(gnorm2) < cfg.grad_tol:
            converged = True
            break
        t = min(1.0, 2.0 * t_accepted)
        while t >= MIN_STEP:
            cand = _normalize(psi - t * g)
            fc = objective.value(cand)
            if fc <= f - ARMIJO * t * gnorm2:
                break
            t *= SHRINK
        else:
            # no step decreases the objective at working precision
            converged = True
            break
        it += 1
        decrease = f - fc
        t_accepted = t
        psi = cand
        f, g = objective.value_and_grad(psi)
        values.append(f)
        if decrease < cfg.value_tol:
            converged = True
            break
    # descent stalls next to rank-deficient outputs, where lambda**p with
    # p < 1 is ill-conditioned; land exactly on the face when that helps
    if hasattr(objective.kmap, "operator") and objective.order.p < 1:
        snapped = _snap_to_face(objective.kmap, psi)
        if snapped is not None:
            fs = objective.value(snapped)
            if fs < f:
                psi, f = snapped, fs
                values.append(f)
    return DescentResult(psi, f, it, converged, values, fd_steps)


def _random_starts(dim, count, rng):
    if isinstance(rng, RngStream):
        return [random_pure_state(dim, rng.child(k)) for k in range(count)]
    gen = as_generator(rng)
    return [random_pure_state(dim, gen) for _ in range(count)]


def _multistart(objective, starts, cfg, evaluate) -> EntropyEstimate:
    # each start point stays in the candidate set next to its descended point
    best = None
    finals = []
    any_converged = False
    for k, psi0 in enumerate(starts):
        res = local_descent(objective, psi0, cfg)
        value, witness = evaluate(res.psi), res.psi
        start_value = evaluate(psi0)
        if start_value < value:
            value, witness = start_value, np.asarray(psi0, dtype=complex)
        finals.append(value)
        any_converged |= res.converged
        if best is None or value < best[0] - 1e-12:
            best = (value, k, witness, res)
    value, k, witness, res = best
    return EntropyEstimate(
        value=value,
        witness=witness,
        start_index=k,
        iterations=res.iterations,
        converged=any_converged,
        all_start_values=np.array(finals),
    )


def minimize_output_entropy(
    ch: RandomUnitaryChannel, order, cfg: MinimizationConfig | None = None, rng=None
) -> EntropyEstimate:
    """Best local minimum over ``cfg.starts`` random starts and the basis states.

    Random start k is drawn from ``rng.child(k)`` when ``rng`` is an
    RngStream. The N computational basis states follow the random starts
    when ``cfg.include_special_starts`` is set.
    """
    cfg = cfg or MinimizationConfig()
    rng = RngStream(0) if rng is None else rng
    order = renyi_order(order)
    objective = _Objective(_SingleMap(ch), order)
    starts = _random_starts(ch.N, cfg.starts, rng)
    if cfg.include_special_starts:
        starts += list(np.eye(ch.N, dtype=complex))
    return _multistart(objective, starts, cfg, lambda psi: output_entropy(ch, psi, order))


def minimize_product_entropy(
    ch: RandomUnitaryChannel,
    order,
    cfg: MinimizationConfig | None = None,
    rng=None,
    single: EntropyEstimate | None = None,
) -> EntropyEstimate:
    """Minimize output entropy of ``ch (x) conj(ch)`` over states on N^2 dimensions.

    Start 0 is the maximally entangled state, start 1 the product witness
    ``psi (x) conj(psi)`` from a single-channel minimization (``single``, or
    computed here from ``rng.child(0)``); random starts use ``rng.child(1)``.
    """
    if ch.N > PRODUCT_DIM_LIMIT:
        raise ValueError(f"product minimization needs N <= {PRODUCT_DIM_LIMIT}, got {ch.N}")
    cfg = cfg or MinimizationConfig()
    rng = RngStream(0) if rng is None else rng
    order = renyi_order(order)
    bar = complex_conjugate(ch)
    if single is None:
        sub = rng.child(0) if isinstance(rng, RngStream) else rng
        single = minimize_output_entropy(ch, order, cfg, sub)
    starts = [maximally_entangled(ch.N), np.kron(single.witness, np.conj(single.witness))]
    sub = rng.child(1) if isinstance(rng, RngStream) else rng
    starts += _random_starts(ch.N * ch.N, cfg.starts, sub)
    objective = _Objective(_ProductMap(ch, bar), order)
    return _multistart(objective, starts, cfg, lambda psi: product_output_entropy(ch, bar, psi, order))


def _bloch_state(theta, phi):
    return np.stack(
        [np.cos(theta / 2) + 0j, np.exp(1j * phi) * np.sin(theta / 2)], axis=-1
    )


def brute_force_min(ch: RandomUnitaryChannel, order, grid_resolution: int = 400) -> float:
    """Qubit-only oracle: Bloch-sphere grid search plus a Nelder-Mead polish.

    The grid has ``grid_resolution`` polar angles in [0, pi] and twice as many
    azimuths in [0, 2 pi). The polish starts from the best cell.
    """
    if ch.N != 2:
        raise ValueError("brute_force_min only handles qubit channels (N = 2)")
    order = renyi_order(order)
    theta = np.linspace(0.0, np.pi, grid_resolution)
    phi = np.arange(2 * grid_resolution) * (np.pi / grid_resolution)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    psi = _bloch_state(tt.ravel(), pp.ravel())
    down = ch.adjoints * np.sqrt(ch.weights)[:, None, None]
    cols = np.einsum("kij,pj->pik", down, psi)
    s = np.linalg.svd(cols, compute_uv=False)
    s = np.where(s < s[:, :1] * max(cols.shape[1:]) * _EPS * RANK_SAFETY, 0.0, s)
    grid_vals = _entropy_kernel(s * s, order.p, order.von_neumann)
    best = int(np.argmin(grid_vals))
    t0, p0 = tt.ravel()[best], pp.ravel()[best]

    def f(x):
        return output_entropy(ch, _bloch_state(x[0], x[1]), order)

    dt, dp = np.pi / grid_resolution, np.pi / grid_resolution
    simplex = np.array([[t0, p0], [t0 + dt, p0], [t0, p0 + dp]])
    res = minimize(
        f,
        simplex[0],
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000},
    )
    return float(min(max(grid_vals[best], 0.0), res.fun))
