"""Dense statevector kernels for the QAOA gate set.

Only three kinds of operation are needed: preparing ``|+>^n``, diagonal
phases driven by an integer cut table (edge gates, the full cost operator
and the appended ZZ line all reduce to this), and single-qubit X rotations
``exp(-i beta X_j)``.

Public functions follow a functional contract and return a new
:class:`Statevector`.  The underscored kernels work in place on raw arrays and
are what the ansatz evaluator uses in its inner loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import CapacityError, InputError
from .graphs import MAX_QUBITS


@dataclass
class Statevector:
    n: int
    amps: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise CapacityError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.n}")
        if self.amps.shape != (1 << self.n,):
            raise InputError(f"expected {1 << self.n} amplitudes, got shape {self.amps.shape}")

    @classmethod
    def basis(cls, n: int, x: int) -> "Statevector":
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[x] = 1.0
        return cls(n, amps)

    def copy(self) -> "Statevector":
        return Statevector(self.n, self.amps.copy())

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


def _check_qubit(s: Statevector, j: int) -> None:
    if not 0 <= j < s.n:
        raise InputError(f"qubit index {j} out of range for n={s.n}")


def _check_table(s: Statevector, table: np.ndarray) -> None:
    if len(table) != len(s.amps):
        raise InputError(f"cut table has {len(table)} entries, state has {len(s.amps)}")


def uniform_superposition(n: int) -> Statevector:
    if not 1 <= n <= MAX_QUBITS:
        raise CapacityError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    return Statevector(n, np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128))


@njit(cache=True)
def _rx_kernel(rows, j, beta):
    """``exp(-i beta X_j)`` in place on every row of a 2-D amplitude array."""
    c = math.cos(beta)
    s = -1j * math.sin(beta)
    bit = 1 << j
    low = bit - 1
    half = rows.shape[1] // 2
    for r in range(rows.shape[0]):
        for k in range(half):
            i0 = ((k & ~low) << 1) | (k & low)
            i1 = i0 | bit
            a = rows[r, i0]
            b = rows[r, i1]
            rows[r, i0] = c * a + s * b
            rows[r, i1] = s * a + c * b


@njit(cache=True)
def _mixer_kernel(rows, betas):
    for j in range(betas.shape[0]):
        _rx_kernel(rows, j, betas[j])


@njit(cache=True)
def _phase_kernel(rows, theta, tables):
    """Multiply amplitude ``x`` by ``exp(-i sum_g theta[g] * tables[g, x])``."""
    for x in range(rows.shape[1]):
        phi = 0.0
        for g in range(theta.shape[0]):
            phi += theta[g] * tables[g, x]
        w = math.cos(phi) - 1j * math.sin(phi)
        for r in range(rows.shape[0]):
            rows[r, x] *= w


@njit(cache=True)
def _x_overlaps(psi, lam, n):
    """``2 Im <lam|X_j|psi>`` for every qubit ``j``."""
    out = np.zeros(n)
    for j in range(n):
        bit = 1 << j
        acc = 0.0
        for x in range(psi.shape[0]):
            a = lam[x]
            b = psi[x ^ bit]
            acc += a.real * b.imag - a.imag * b.real
        out[j] = 2.0 * acc
    return out


@njit(cache=True)
def _diag_overlaps(psi, lam, tables):
    """``2 Im <lam|T_g|psi>`` for every row ``T_g`` of ``tables``."""
    out = np.zeros(tables.shape[0])
    for x in range(psi.shape[0]):
        a = lam[x]
        b = psi[x]
        im = a.real * b.imag - a.imag * b.real
        for g in range(tables.shape[0]):
            out[g] += tables[g, x] * im
    return 2.0 * out


def _rx_inplace(amps: np.ndarray, n: int, j: int, beta: float) -> None:
    _rx_kernel(amps.reshape(-1, 1 << n), j, float(beta))


def apply_edge_phase(s: Statevector, j: int, k: int, angle: float) -> Statevector:
    """Phase ``exp(-i angle)`` on basis states where bits ``j`` and ``k`` differ."""
    _check_qubit(s, j)
    _check_qubit(s, k)
    if j == k:
        raise InputError("edge phase needs two distinct qubits")
    x = np.arange(1 << s.n)
    cut = (((x >> j) ^ (x >> k)) & 1).astype(bool)
    out = s.amps.copy()
    out[cut] *= np.exp(-1j * angle)
    return Statevector(s.n, out)


def apply_cost_phase(s: Statevector, table: np.ndarray, gamma: float) -> Statevector:
    _check_table(s, table)
    return Statevector(s.n, s.amps * np.exp(-1j * gamma * np.asarray(table, dtype=float)))


def apply_rx(s: Statevector, j: int, beta: float) -> Statevector:
    _check_qubit(s, j)
    out = s.amps.copy()
    _rx_inplace(out, s.n, j, beta)
    return Statevector(s.n, out)


def apply_mixer_layer(s: Statevector, betas: Sequence[float]) -> Statevector:
    if len(betas) != s.n:
        raise InputError(f"mixer needs {s.n} angles, got {len(betas)}")
    out = s.amps.copy()
    for j, beta in enumerate(betas):
        _rx_inplace(out, s.n, j, float(beta))
    return Statevector(s.n, out)


def expectation_cut(s: Statevector, table: np.ndarray) -> float:
    _check_table(s, table)
    probs = s.amps.real**2 + s.amps.imag**2
    # np.dot has a fixed reduction order for a given length
    return float(np.dot(probs, np.asarray(table, dtype=float)))
