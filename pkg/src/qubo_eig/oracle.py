"""Classical reference eigensolvers (cyclic Jacobi) used to score QUBO runs."""

from __future__ import annotations

import math

import numba
import numpy as np

MAX_ORACLE_N = 2000


class OracleError(RuntimeError):
    """Raised when the reference eigensolver does not converge."""


class DefinitenessError(ValueError):
    """Raised when a matrix required to be positive definite is not."""


@numba.njit(cache=True)
def _off_norm(A):
    n = A.shape[0]
    s = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                s += A[i, j] * A[i, j]
    return math.sqrt(s)


@numba.njit(cache=True)
def _jacobi_sweeps(A, V, tol, max_sweeps):
    n = A.shape[0]
    for sweep in range(max_sweeps):
        if _off_norm(A) <= tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    if _off_norm(A) <= tol:
        return max_sweeps
    return -1


def jacobi_oracle(A: np.ndarray, max_sweeps: int = 100):
    """Full eigendecomposition by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as columns.  Iterates until the off-diagonal Frobenius norm
    is at most ``1e-13 * ||A||_F``.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if n > MAX_ORACLE_N:
        raise ValueError(f"jacobi_oracle supports n <= {MAX_ORACLE_N}, got {n}")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    tol = 1e-13 * np.linalg.norm(A)
    if _jacobi_sweeps(A, V, tol, max_sweeps) < 0:
        raise OracleError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def generalized_oracle(A: np.ndarray, B: np.ndarray):
    """Eigenpairs of ``A v = lam B v`` for symmetric ``A`` and SPD ``B``.

    Reduces to ``B^{-1/2} A B^{-1/2}`` using Jacobi on ``B``.  Eigenvectors are
    returned with unit Euclidean norm.
    """
    wb, Vb = jacobi_oracle(B)
    if wb[0] <= 0:
        raise DefinitenessError(f"B is not positive definite (smallest eigenvalue {wb[0]:.3e})")
    B_inv_half = (Vb / np.sqrt(wb)) @ Vb.T
    C = B_inv_half @ A @ B_inv_half
    w, Y = jacobi_oracle(0.5 * (C + C.T))
    X = B_inv_half @ Y
    X /= np.linalg.norm(X, axis=0)
    return w, X


def eigvec_error(v: np.ndarray, v_true: np.ndarray) -> float:
    """Distance between unit vectors up to sign."""
    v = np.asarray(v, dtype=float)
    v_true = np.asarray(v_true, dtype=float)
    return float(min(np.linalg.norm(v - v_true), np.linalg.norm(v + v_true)))
