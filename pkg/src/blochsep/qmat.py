"""Exact small-matrix kernels for two-qubit states.

Everything here works on single 2x2 or 4x4 ``numpy`` arrays and is written
for clarity rather than throughput; the batched hot path lives in
:mod:`blochsep.kernels`.  Index convention for a 4x4 state: row/column
``2*a + b`` with ``a`` the qubit-A index and ``b`` the qubit-B index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
REAL_TOL = 1e-14


class NonHermitianInput(ValueError):
    """Raised when a routine that needs a Hermitian matrix gets something else."""


class InvalidState(ValueError):
    """Raised when a matrix fails the density-matrix invariants."""


@dataclass(frozen=True)
class Qubit2:
    """Single-qubit density matrix together with its Bloch vector."""

    matrix: np.ndarray
    bloch: tuple[float, float, float]

    @classmethod
    def from_matrix(cls, q: np.ndarray) -> "Qubit2":
        q = np.asarray(q, dtype=complex)
        return cls(q, bloch_vector(q))

    @classmethod
    def from_bloch(cls, bx: float, by: float, bz: float) -> "Qubit2":
        q = 0.5 * (np.eye(2) + bx * SIGMA_X + by * SIGMA_Y + bz * SIGMA_Z)
        return cls(q, (float(bx), float(by), float(bz)))

    @property
    def radius(self) -> float:
        return bloch_radius(self.matrix)


# ---------------------------------------------------------------------------
# validation


def check_density(rho: np.ndarray, real_only: bool = False) -> np.ndarray:
    """Return ``rho`` as a complex array, raising :class:`InvalidState` if it
    is not Hermitian, unit-trace and positive semidefinite."""
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    if rho.shape != (n, n) or n not in (2, 4):
        raise InvalidState(f"expected a 2x2 or 4x4 matrix, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidState("non-finite entries")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITIAN_TOL:
        raise InvalidState(f"not Hermitian (max asymmetry {herm:.3e})")
    tr = np.trace(rho)
    if abs(tr.real - 1.0) > TRACE_TOL or abs(tr.imag) > TRACE_TOL:
        raise InvalidState(f"trace {tr} is not 1")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -PSD_TOL:
        raise InvalidState(f"negative eigenvalue {lo:.3e}")
    if real_only and np.max(np.abs(rho.imag)) > REAL_TOL:
        raise InvalidState("imaginary part in a real-only state")
    return rho


# ---------------------------------------------------------------------------
# reductions and Bloch geometry


def partial_trace(rho: np.ndarray, keep: str = "A") -> np.ndarray:
    """Reduced 2x2 state of the kept qubit (``"A"`` or ``"B"``)."""
    t = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if keep == "A":
        return np.einsum("abcb->ac", t)
    if keep == "B":
        return np.einsum("abad->bd", t)
    raise ValueError(f"keep must be 'A' or 'B', not {keep!r}")


def bloch_vector(q: np.ndarray) -> tuple[float, float, float]:
    q = np.asarray(q)
    return (2.0 * q[0, 1].real, -2.0 * q[0, 1].imag, float((q[0, 0] - q[1, 1]).real))


def bloch_radius(q: np.ndarray) -> float:
    """Bloch radius ``sqrt(2 tr(q^2) - 1)`` clamped to ``[0, 1]``.

    Going through the purity avoids the pole singularities of the angular
    parametrization.
    """
    q = np.asarray(q)
    purity = float(np.sum(np.abs(q) ** 2))  # tr(q^2) for Hermitian q
    return math.sqrt(min(max(2.0 * purity - 1.0, 0.0), 1.0))


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose on qubit B: ``out[2a+b, 2c+d] = rho[2a+d, 2c+b]``."""
    t = np.asarray(rho).reshape(2, 2, 2, 2)
    return t.transpose(0, 3, 2, 1).reshape(4, 4).copy()


def fano_mzz(rho: np.ndarray) -> float:
    """zz correlation coefficient ``tr(rho sigma_z x sigma_z)``."""
    d = np.diagonal(np.asarray(rho)).real
    return float(d[0] - d[1] - d[2] + d[3])


def product_distance(rho: np.ndarray) -> float:
    """Hilbert-Schmidt distance from ``rho`` to the product of its reductions."""
    rho = np.asarray(rho, dtype=complex)
    diff = rho - np.kron(partial_trace(rho, "A"), partial_trace(rho, "B"))
    return float(np.sqrt(np.sum(np.abs(diff) ** 2)))


# ---------------------------------------------------------------------------
# determinants


def det4(m: np.ndarray) -> complex:
    """Determinant by LU factorization with partial pivoting."""
    a = [[complex(x) for x in row] for row in np.asarray(m)]
    n = len(a)
    det = 1.0 + 0.0j
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(a[i][k]))
        piv = a[p][k]
        if piv == 0:
            return 0j
        if p != k:
            a[k], a[p] = a[p], a[k]
            det = -det
        det *= piv
        for i in range(k + 1, n):
            f = a[i][k] / piv
            if f:
                row_i, row_k = a[i], a[k]
                for j in range(k + 1, n):
                    row_i[j] -= f * row_k[j]
    return det


def det_cofactor(m: np.ndarray) -> complex:
    """Determinant by Laplace expansion along the first row (cross-check path)."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    if n == 1:
        return complex(m[0, 0])
    if n == 2:
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    total = 0j
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * m[0, j] * det_cofactor(minor)
    return total


# ---------------------------------------------------------------------------
# eigenvalues


def eig_hermitian(m: np.ndarray, tol: float = 1e-10, max_sweeps: int = 50) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.

    The complex matrix ``H = X + iY`` is embedded as the real symmetric
    ``[[X, -Y], [Y, X]]``, whose spectrum is that of ``H`` with every value
    doubled; after diagonalizing, every second sorted value is kept.
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    if m.shape != (n, n):
        raise NonHermitianInput(f"not square: {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
        raise NonHermitianInput("matrix is not Hermitian within tolerance")
    x, y = m.real, m.imag
    a = np.block([[x, -y], [y, x]])
    a = 0.5 * (a + a.T)
    size = 2 * n
    for _ in range(max_sweeps):
        off = np.sum(np.triu(a, 1) ** 2)
        if off < 1e-34 * max(np.sum(a * a), 1e-300):
            break
        for p in range(size - 1):
            for q in range(p + 1, size):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta  # theta^2 would overflow
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
    return np.sort(np.diagonal(a))[::2].copy()


# ---------------------------------------------------------------------------
# reference states


def ket_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def bell_phi_plus() -> np.ndarray:
    return ket_density([1, 0, 0, 1])


def werner_state(w: float) -> np.ndarray:
    """``w |Phi+><Phi+| + (1 - w) I/4``."""
    return w * bell_phi_plus() + (1.0 - w) * np.eye(4) / 4.0
