"""Parameter-shift gradients of the circuit expectations.

Coordinates are flat indices: ``0 .. P-1`` address ``theta.ravel()`` (C order,
i.e. layer, qubit, rotation slot) and ``P .. P+k-1`` address the embedding
angles ``x``. Every coordinate enters exactly one RY or RZ gate, whose
generator is a Pauli matrix over two, so the two-term rule with shifts of
+-pi/2 is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadCoordinate
from .qsim import CircuitParams, forward, run_circuit

SHIFT = np.pi / 2


@dataclass(frozen=True)
class Jacobian:
    d_theta: np.ndarray  # (*batch, P, n): d<Z_j>/d theta_p
    d_input: np.ndarray  # (*batch, k, n): d<Z_j>/d x_i


def _shifted_difference(x, params: CircuitParams, coords, step, scale):
    """(f(+step) - f(-step)) / scale for each coordinate, shape ``(m, *batch, n)``."""
    x = np.asarray(x, dtype=np.float64)
    theta = params.theta
    P = theta.size
    m = len(coords)
    shifts = np.zeros((2 * m, P + x.shape[-1]))
    for j, c in enumerate(coords):
        shifts[j, c] = step
        shifts[m + j, c] = -step
    thetas = (theta.ravel() + shifts[:, :P]).reshape(2 * m, *([1] * (x.ndim - 1)), *theta.shape)
    if np.any(shifts[:, P:]):
        xs = x + shifts[:, P:].reshape(2 * m, *([1] * (x.ndim - 1)), x.shape[-1])
    else:
        xs = x  # unshifted inputs broadcast against the theta stack
    out = run_circuit(xs, thetas, params.entangle_range)  # (2m, *batch, n)
    return (out[:m] - out[m:]) / scale


def _check_coords(coords, P, k):
    for c in coords:
        if not 0 <= c < P + k:
            raise BadCoordinate(f"coordinate {c} outside [0, {P + k})")


def param_shift(x, params: CircuitParams, which: int) -> np.ndarray:
    """d forward / d coordinate ``which`` via (f(+pi/2) - f(-pi/2)) / 2."""
    x = np.asarray(x, dtype=np.float64)
    _check_coords([which], params.size, x.shape[-1])
    return _shifted_difference(x, params, [which], SHIFT, 2.0)[0]


def _as_jacobian(diffs, P, batch_ndim):
    # diffs: (P + k, *batch, n) -> move coordinate axis behind the batch axes
    moved = np.moveaxis(diffs, 0, batch_ndim)
    return Jacobian(d_theta=moved[..., :P, :], d_input=moved[..., P:, :])


def full_jacobian(x, params: CircuitParams) -> Jacobian:
    """All 2*(P + k) shifted evaluations in one batched circuit run.

    ``x`` may carry leading batch dimensions; the result then does too.
    """
    x = np.asarray(x, dtype=np.float64)
    P, k = params.size, x.shape[-1]
    diffs = _shifted_difference(x, params, range(P + k), SHIFT, 2.0)
    return _as_jacobian(diffs, P, x.ndim - 1)


def theta_jacobian(x, params: CircuitParams) -> np.ndarray:
    """Only the circuit-parameter block, shape ``(*batch, P, n)``."""
    x = np.asarray(x, dtype=np.float64)
    diffs = _shifted_difference(x, params, range(params.size), SHIFT, 2.0)
    return np.moveaxis(diffs, 0, x.ndim - 1)


def input_jacobian(x, params: CircuitParams) -> np.ndarray:
    """Only the embedding-angle block, shape ``(*batch, k, n)``."""
    x = np.asarray(x, dtype=np.float64)
    P, k = params.size, x.shape[-1]
    diffs = _shifted_difference(x, params, range(P, P + k), SHIFT, 2.0)
    return np.moveaxis(diffs, 0, x.ndim - 1)


def finite_difference(x, params: CircuitParams, h: float = 1e-5) -> Jacobian:
    """Central differences of forward, one coordinate at a time.

    Deliberately avoids the batched shift machinery so it can serve as an
    independent oracle for it.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=np.float64)
    theta = params.theta
    n = params.n_qubits
    d_theta = np.empty((*x.shape[:-1], theta.size, n))
    for p in range(theta.size):
        plus, minus = theta.copy().ravel(), theta.copy().ravel()
        plus[p] += h
        minus[p] -= h
        f_plus = forward(x, CircuitParams(plus.reshape(theta.shape), params.entangle_range))
        f_minus = forward(x, CircuitParams(minus.reshape(theta.shape), params.entangle_range))
        d_theta[..., p, :] = (f_plus - f_minus) / (2 * h)
    d_input = np.empty((*x.shape[:-1], x.shape[-1], n))
    for i in range(x.shape[-1]):
        plus, minus = x.copy(), x.copy()
        plus[..., i] += h
        minus[..., i] -= h
        d_input[..., i, :] = (forward(plus, params) - forward(minus, params)) / (2 * h)
    return Jacobian(d_theta=d_theta, d_input=d_input)
