"""Exact state-vector simulation of small qubit registers.

States are complex arrays of shape ``(*batch, 2**n)``. Qubit 0 is the most
significant bit of the amplitude index, so ``|1000>`` sits at index 8 for n=4.
Every gate broadcasts over leading batch dimensions; angles may carry their
own batch shape as long as it broadcasts against the state's.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, NonFiniteAngle, QubitOutOfRange, SameQubit, UnnormalizedState


@dataclass(frozen=True)
class CircuitParams:
    """Strongly-entangling-layer angles ``theta[layer, qubit, (alpha, beta, gamma)]``."""

    theta: np.ndarray
    entangle_range: int = 1

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 3 or theta.shape[2] != 3 or theta.shape[0] < 1:
            raise DimensionMismatch(f"theta must have shape (L, n, 3) with L >= 1, got {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise NonFiniteAngle("circuit angles must be finite")
        n = theta.shape[1]
        if n > 1 and not 1 <= self.entangle_range < n:
            raise DimensionMismatch(f"entangle_range must lie in [1, {n - 1}]")
        object.__setattr__(self, "theta", theta)

    @property
    def n_layers(self) -> int:
        return self.theta.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.theta.shape[1]

    @property
    def size(self) -> int:
        return self.theta.size

    @classmethod
    def random(cls, n_layers: int, n_qubits: int, rng, entangle_range: int = 1):
        return cls(rng.uniform(-np.pi, np.pi, size=(n_layers, n_qubits, 3)), entangle_range)

    @classmethod
    def zeros(cls, n_layers: int, n_qubits: int, entangle_range: int = 1):
        return cls(np.zeros((n_layers, n_qubits, 3)), entangle_range)


def n_qubits_of(state) -> int:
    dim = state.shape[-1]
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise DimensionMismatch(f"state dimension {dim} is not a power of two")
    return n


def zero_state(n: int, batch_shape=()) -> np.ndarray:
    state = np.zeros((*batch_shape, 1 << n), dtype=np.complex128)
    state[..., 0] = 1.0
    return state


def ry_matrix(angle) -> np.ndarray:
    half = np.asarray(angle, dtype=np.float64) / 2
    c, s = np.cos(half), np.sin(half)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2).astype(np.complex128)


def rz_matrix(angle) -> np.ndarray:
    half = np.asarray(angle, dtype=np.float64) / 2
    zero = np.zeros_like(half)
    return np.stack(
        [np.stack([np.exp(-1j * half), zero], -1), np.stack([zero, np.exp(1j * half)], -1)], -2
    )


def _check_qubit(qubit: int, n: int):
    if not 0 <= qubit < n:
        raise QubitOutOfRange(f"qubit {qubit} outside register of {n}")


def apply_gate(state, qubit: int, matrix) -> np.ndarray:
    """Apply a 2x2 unitary (shape ``(*mbatch, 2, 2)``) to one qubit."""
    n = n_qubits_of(state)
    _check_qubit(qubit, n)
    matrix = np.asarray(matrix)
    view = state.reshape(*state.shape[:-1], 1 << qubit, 2, 1 << (n - qubit - 1))
    a0, a1 = view[..., 0, :], view[..., 1, :]
    m = matrix[..., None, None]  # broadcast over the high/low index blocks
    out0 = m[..., 0, 0, :, :] * a0 + m[..., 0, 1, :, :] * a1
    out1 = m[..., 1, 0, :, :] * a0 + m[..., 1, 1, :, :] * a1
    out = np.stack([out0, out1], axis=-2)
    return out.reshape(*out.shape[:-3], 1 << n)


def apply_single_qubit_rotation(state, qubit: int, kind: str, angle) -> np.ndarray:
    angle = np.asarray(angle, dtype=np.float64)
    if not np.all(np.isfinite(angle)):
        raise NonFiniteAngle(f"{kind} angle is not finite")
    if kind == "RY":
        return apply_gate(state, qubit, ry_matrix(angle))
    if kind == "RZ":
        return apply_gate(state, qubit, rz_matrix(angle))
    raise ValueError(f"unknown rotation kind {kind!r}")


@lru_cache(maxsize=None)
def _cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n)
    cbit = 1 << (n - 1 - control)
    tbit = 1 << (n - 1 - target)
    perm = np.where(idx & cbit, idx ^ tbit, idx)
    perm.flags.writeable = False
    return perm


def apply_cnot(state, control: int, target: int) -> np.ndarray:
    n = n_qubits_of(state)
    _check_qubit(control, n)
    _check_qubit(target, n)
    if control == target:
        raise SameQubit("control and target must differ")
    return state[..., _cnot_permutation(n, control, target)]


def angle_embed(x) -> np.ndarray:
    """RY(x_i) on qubit i of |0...0>; ``x`` has shape ``(*batch, n)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        raise DimensionMismatch("embedding needs a feature vector")
    if not np.all(np.isfinite(x)):
        raise NonFiniteAngle("embedding angles must be finite")
    n = x.shape[-1]
    state = zero_state(n, x.shape[:-1])
    for q in range(n):
        state = apply_gate(state, q, ry_matrix(x[..., q]))
    return state


def rot_matrix(alpha, beta, gamma) -> np.ndarray:
    """RZ(gamma) @ RY(beta) @ RZ(alpha): RZ(alpha) acts first."""
    return rz_matrix(gamma) @ ry_matrix(beta) @ rz_matrix(alpha)


def entangling_layers(state, theta, entangle_range: int = 1) -> np.ndarray:
    """Apply V(theta) for a raw angle array of shape ``(*pbatch, L, n, 3)``.

    ``pbatch`` broadcasts against the state's batch shape, which is how shifted
    parameter copies are evaluated in one pass.
    """
    theta = np.asarray(theta, dtype=np.float64)
    n = n_qubits_of(state)
    if theta.shape[-2:] != (n, 3):
        raise DimensionMismatch(f"theta trailing shape {theta.shape[-2:]} does not match {n} qubits")
    for layer in range(theta.shape[-3]):
        rots = rot_matrix(theta[..., layer, :, 0], theta[..., layer, :, 1], theta[..., layer, :, 2])
        for q in range(n):
            state = apply_gate(state, q, rots[..., q, :, :])
        if n > 1:
            for q in range(n):
                state = apply_cnot(state, q, (q + entangle_range) % n)
    return state


def transfer_matrix(theta, entangle_range: int = 1) -> np.ndarray:
    """Rows are V(theta)|j> for each basis state j, shape ``(*pbatch, 2**n, 2**n)``.

    Built by pushing the computational basis through the gate-by-gate path, so
    ``state @ M`` equals ``entangling_layers(state, theta)``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.shape[-2]
    basis = np.eye(1 << n, dtype=np.complex128)
    return entangling_layers(basis, theta[..., None, :, :, :], entangle_range)


def apply_entangling_layers(state, params: CircuitParams) -> np.ndarray:
    if n_qubits_of(state) != params.n_qubits:
        raise DimensionMismatch(f"state has {n_qubits_of(state)} qubits, params expect {params.n_qubits}")
    return entangling_layers(state, params.theta, params.entangle_range)


@lru_cache(maxsize=None)
def _z_signs(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    signs = np.array([1.0 - 2.0 * ((idx >> (n - 1 - q)) & 1) for q in range(n)]).T  # (2**n, n)
    signs.flags.writeable = False
    return signs


def measure_z(state, check_norm: bool = True) -> np.ndarray:
    """Exact <Z_i> for every qubit; returns shape ``(*batch, n)``."""
    n = n_qubits_of(state)
    probs = np.abs(state) ** 2
    if check_norm:
        norms = probs.sum(axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise UnnormalizedState(f"state norm deviates from 1 by {np.max(np.abs(norms - 1.0)):.3g}")
    return probs @ _z_signs(n)


def run_circuit(x, theta, entangle_range: int = 1) -> np.ndarray:
    """forward() over raw arrays: ``x`` (*xb, n), ``theta`` (*tb, L, n, 3).

    ``xb`` and ``tb`` broadcast against each other.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim == 3 and np.ndim(x) <= 1:
        state = entangling_layers(angle_embed(x), theta, entangle_range)
    else:
        M = transfer_matrix(theta, entangle_range)
        state = (angle_embed(x)[..., None, :] @ M)[..., 0, :]
    return measure_z(state, check_norm=False)


def forward(x, params: CircuitParams) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.n_qubits:
        raise DimensionMismatch(f"{x.shape[-1]} features for {params.n_qubits} qubits")
    return run_circuit(x, params.theta, params.entangle_range)
