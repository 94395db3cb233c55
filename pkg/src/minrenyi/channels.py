"""Random unitary channels ``rho -> sum_i w_i U_i^dag rho U_i``.

Besides direct application there are the complex-conjugate channel
(entrywise conjugated unitaries, same weights) and the conjugate channel,
which maps a pure input to a D x D matrix with the same nonzero spectrum as
the direct output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .quantum import (
    WEIGHT_SUM_TOL,
    as_generator,
    as_pure_state,
    complex_from_json,
    complex_to_json,
    haar_unitary,
    sample_weights,
)

__all__ = [
    "RandomUnitaryChannel",
    "sample_channel",
    "apply",
    "complex_conjugate",
    "conjugate_apply",
    "kraus_columns",
    "tensor_apply",
    "load_channel",
    "save_channel",
]

UNITARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RandomUnitaryChannel:
    """D unitaries of size N x N with probability weights.

    Arrays are copied and frozen on construction.
    """

    unitaries: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        u = np.array(self.unitaries, dtype=complex)
        w = np.array(self.weights, dtype=float)
        if u.ndim == 2:
            u = u[None]
        if u.ndim != 3 or u.shape[1] != u.shape[2]:
            raise ValueError("unitaries must have shape (D, N, N)")
        if w.shape != (u.shape[0],):
            raise ValueError("need exactly one weight per unitary")
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("weights must be a probability vector")
        eye = np.eye(u.shape[1])
        gram = np.conj(np.swapaxes(u, 1, 2)) @ u
        err = np.max(np.abs(gram - eye))
        if err > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {err:.3g})")
        u.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "unitaries", u)
        object.__setattr__(self, "weights", w)

    @property
    def D(self) -> int:
        return self.unitaries.shape[0]

    @property
    def N(self) -> int:
        return self.unitaries.shape[1]

    @property
    def adjoints(self) -> np.ndarray:
        return np.conj(np.swapaxes(self.unitaries, 1, 2))

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "D": self.D,
            "weights": self.weights.tolist(),
            "unitaries": complex_to_json(self.unitaries),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RandomUnitaryChannel":
        ch = cls(complex_from_json(data["unitaries"]), data["weights"])
        if ch.N != data["N"] or ch.D != data["D"]:
            raise ValueError("declared N/D do not match the stored matrices")
        return ch


def sample_channel(D: int, N: int, rng=None) -> RandomUnitaryChannel:
    """D independent Haar unitaries plus Dirichlet(N) weights.

    The unitaries are drawn first, then the weights, from a single generator.
    """
    gen = as_generator(rng)
    unitaries = haar_unitary(N, gen, size=D)
    weights = sample_weights(D, N, gen)
    return RandomUnitaryChannel(unitaries, weights)


def apply(ch: RandomUnitaryChannel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.N, ch.N):
        raise ValueError(f"input has shape {rho.shape}, channel acts on dimension {ch.N}")
    terms = ch.adjoints @ rho @ ch.unitaries
    return np.tensordot(ch.weights, terms, axes=1)


def complex_conjugate(ch: RandomUnitaryChannel) -> RandomUnitaryChannel:
    return RandomUnitaryChannel(np.conj(ch.unitaries), ch.weights)


def kraus_columns(ch: RandomUnitaryChannel, psi) -> np.ndarray:
    """N x D matrix whose i-th column is ``sqrt(w_i) U_i^dag psi``.

    For a pure input the direct output is ``A A^dag`` and the conjugate
    output is ``(A^dag A)^T``.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (ch.N,):
        raise ValueError(f"state has dimension {psi.shape}, channel acts on dimension {ch.N}")
    return (ch.adjoints @ psi).T * np.sqrt(ch.weights)


def conjugate_apply(ch: RandomUnitaryChannel, psi) -> np.ndarray:
    """D x D output with entries ``sqrt(w_i w_j) <psi| U_j U_i^dag |psi>``.

    Only D matrix-vector products are formed, never an N x N intermediate.
    """
    psi = as_pure_state(psi, ch.N)
    a = kraus_columns(ch, psi)
    return a.T @ np.conj(a)


def tensor_apply(ch_a: RandomUnitaryChannel, ch_b: RandomUnitaryChannel, rho) -> np.ndarray:
    """Apply ``ch_a (x) ch_b`` to a state on ``N_a * N_b`` dimensions.

    The weights factorize, so the product map is the composition of
    ``ch_a (x) id`` and ``id (x) ch_b``; each factor acts on one index pair
    of the reshaped four-index tensor.
    """
    na, nb = ch_a.N, ch_b.N
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (na * nb, na * nb):
        raise ValueError(f"input has shape {rho.shape}, expected {(na * nb, na * nb)}")
    r = rho.reshape(na, nb, na, nb)
    vd = ch_b.adjoints
    r = np.einsum("k,kxb,abcd,kyd->axcy", ch_b.weights, vd, r, np.conj(vd), optimize=True)
    ud = ch_a.adjoints
    r = np.einsum("k,kxa,abcd,kyc->xbyd", ch_a.weights, ud, r, np.conj(ud), optimize=True)
    return r.reshape(na * nb, na * nb)


def save_channel(ch: RandomUnitaryChannel, path) -> None:
    with open(path, "w") as fh:
        json.dump(ch.to_dict(), fh)
        fh.write("\n")


def load_channel(path) -> RandomUnitaryChannel:
    with open(path) as fh:
        return RandomUnitaryChannel.from_dict(json.load(fh))
