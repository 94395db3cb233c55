"""States, spectra, entropies and random sampling primitives.

Everything here works on plain numpy arrays. Pure states are complex
vectors, density matrices are complex square arrays and spectra are real
vectors sorted in descending order. Entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RngStream",
    "RenyiOrder",
    "as_generator",
    "renyi_order",
    "as_pure_state",
    "as_density_matrix",
    "as_spectrum",
    "renyi_entropy",
    "von_neumann_entropy",
    "eigenvalues",
    "haar_unitary",
    "random_pure_state",
    "sample_weights",
    "maximally_entangled",
    "partial_trace",
    "pure_density",
    "complex_to_json",
    "complex_from_json",
]

STATE_NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
NEGATIVE_CLIP = 1e-9
SPECTRUM_SUM_TOL = 1e-6
VON_NEUMANN_BAND = 1e-6
WEIGHT_SUM_TOL = 1e-12

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream.

    A stream is identified by ``master_seed`` and its position in a tree of
    child indices, so ``RngStream(7).child(3).child(1)`` always produces the
    same numbers no matter which other streams were consumed before it.
    """

    master_seed: int
    stream_index: int = 0
    parent: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be non-negative")

    @property
    def key(self) -> tuple[int, ...]:
        return self.parent + (self.stream_index,)

    def child(self, index: int) -> "RngStream":
        return RngStream(self.master_seed, int(index), self.key)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a numpy Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class RenyiOrder:
    p: float
    von_neumann: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p > 0):
            raise ValueError(f"Renyi order must be positive, got {self.p}")
        if not self.von_neumann and abs(self.p - 1.0) < VON_NEUMANN_BAND:
            raise ValueError("orders within 1e-6 of 1 must set von_neumann=True")


def renyi_order(p) -> RenyiOrder:
    """Build a RenyiOrder, routing orders within 1e-6 of one to von Neumann."""
    if isinstance(p, RenyiOrder):
        return p
    p = float(p)
    return RenyiOrder(p, von_neumann=abs(p - 1.0) < VON_NEUMANN_BAND)


def as_pure_state(psi, dim: int | None = None) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("a pure state must be a 1-d vector")
    if dim is not None and psi.shape[0] != dim:
        raise ValueError(f"state has dimension {psi.shape[0]}, expected {dim}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > STATE_NORM_TOL:
        raise ValueError(f"state norm {norm!r} differs from 1")
    return psi


def as_density_matrix(rho, dim: int | None = None) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("a density matrix must be square")
    if dim is not None and rho.shape[0] != dim:
        raise ValueError(f"density matrix has dimension {rho.shape[0]}, expected {dim}")
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise ValueError("trace differs from 1")
    return rho


def as_spectrum(values) -> np.ndarray:
    """Validate a probability spectrum and return it sorted descending."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("a spectrum must be a non-empty 1-d vector")
    if np.any(v < -NEGATIVE_CLIP) or not np.all(np.isfinite(v)):
        raise ValueError("spectrum has negative or non-finite entries")
    v = np.sort(np.clip(v, 0.0, None))[::-1]
    if abs(v.sum() - 1.0) > SPECTRUM_SUM_TOL:
        raise ValueError(f"spectrum sums to {v.sum()!r}, not 1")
    return v


def _entropy_kernel(lam: np.ndarray, p: float, von_neumann: bool) -> np.ndarray:
    # Works along the last axis; exact zeros contribute nothing for any p > 0.
    lam = np.asarray(lam, dtype=float)
    pos = lam > 0
    safe = np.where(pos, lam, 1.0)
    if von_neumann:
        return -np.sum(np.where(pos, safe * np.log(safe), 0.0), axis=-1)
    power_sum = np.sum(np.where(pos, safe**p, 0.0), axis=-1)
    return np.log(power_sum) / (1.0 - p)


def renyi_entropy(spectrum, order) -> float:
    """Renyi entropy ``ln(sum v**p) / (1 - p)`` of a spectrum, in nats.

    Orders flagged as von Neumann use ``-sum v ln v`` instead.
    """
    order = renyi_order(order)
    v = as_spectrum(spectrum)
    if order.von_neumann:
        return von_neumann_entropy(v)
    return max(float(_entropy_kernel(v, order.p, False)), 0.0)


def von_neumann_entropy(spectrum) -> float:
    v = as_spectrum(spectrum)
    return max(float(_entropy_kernel(v, 1.0, True)), 0.0)


def _rank_cutoff(values: np.ndarray, dim: int) -> float:
    return float(np.max(np.abs(values), initial=0.0)) * dim * _EPS


def eigenvalues(rho) -> np.ndarray:
    """Descending eigenvalues of a density matrix.

    Values in ``[-1e-9, 0)`` and values below the rank-detection cutoff
    ``dim * eps * max|lambda|`` are set to zero; anything more negative is
    rejected as a non-PSD input.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("a density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian")
    lam = np.linalg.eigvalsh(rho)[::-1]
    if lam[-1] < -NEGATIVE_CLIP:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {lam[-1]!r})")
    lam = np.where(lam < _rank_cutoff(lam, rho.shape[0]), 0.0, lam)
    trace = float(np.real(np.trace(rho)))
    if abs(lam.sum() - trace) > TRACE_TOL:
        raise ValueError("clipped spectrum no longer matches the trace")
    return lam


def _complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)


def haar_unitary(n: int, rng=None, size: int | None = None) -> np.ndarray:
    """Haar-distributed unitary from the QR factorization of a Ginibre matrix.

    The columns of Q are rotated by the phases of R's diagonal; without that
    correction the result is not Haar distributed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = as_generator(rng)
    shape = (n, n) if size is None else (size, n, n)
    q, r = np.linalg.qr(_complex_normal(gen, shape))
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def random_pure_state(n: int, rng=None, size: int | None = None) -> np.ndarray:
    """Uniformly random unit vector(s) in C^n (last axis)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = as_generator(rng)
    shape = (n,) if size is None else (size, n)
    z = _complex_normal(gen, shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def sample_weights(D: int, N: int, rng=None, size: int | None = None) -> np.ndarray:
    """Weights ``L_i**2 / sum L_j**2`` from D complex Gaussian vectors in C^N.

    The result is Dirichlet(N, ..., N) distributed.
    """
    if D < 1 or N < 1:
        raise ValueError("D and N must be >= 1")
    gen = as_generator(rng)
    shape = (D, N) if size is None else (size, D, N)
    sq_len = np.sum(np.abs(_complex_normal(gen, shape)) ** 2, axis=-1)
    return sq_len / sq_len.sum(axis=-1, keepdims=True)


def maximally_entangled(n: int) -> np.ndarray:
    """``sum_i |i>|i> / sqrt(n)`` with product index ``i*n + j``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    phi = np.zeros(n * n, dtype=complex)
    phi[np.arange(n) * (n + 1)] = 1.0 / np.sqrt(n)
    return phi


def pure_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def partial_trace(rho, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Reduced state of a bipartite ``rho``; ``keep`` is 0 or 1."""
    a, b = dims
    r = np.asarray(rho).reshape(a, b, a, b)
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    if keep == 1:
        return np.einsum("ijil->jl", r)
    raise ValueError("keep must be 0 or 1")


def complex_to_json(arr) -> list:
    """Nested lists with every complex entry written as ``[re, im]``."""
    arr = np.asarray(arr, dtype=complex)
    pairs = np.stack([arr.real, arr.imag], axis=-1)
    return pairs.tolist()


def complex_from_json(data) -> np.ndarray:
    pairs = np.asarray(data, dtype=float)
    if pairs.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    return pairs[..., 0] + 1j * pairs[..., 1]
