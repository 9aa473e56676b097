"""Fixed-point binary encoding of box-constrained quadratic programs.

A real variable in ``[-t, t)`` is written with ``b`` bits as ``p . x_b`` where
``p = t * (-1, 1/2, 1/4, ..., 1/2**(b-1))``.  Stacking ``n`` such variables
turns ``min r.x + x'Qx`` over the discretized cube into a QUBO with ``n*b``
binary variables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-12


class DimensionError(ValueError):
    """Raised when a vector or matrix has the wrong shape."""


def _check_symmetric(M: np.ndarray, tol: float, name: str) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > tol * scale:
        raise ValueError(f"{name} is not symmetric (max asymmetry {asym:.3e})")


@dataclass(frozen=True)
class Encoding:
    """Number of bits per real variable and the half-width of the cube."""

    bits: int
    scale: float = 1.0

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 1:
            raise ValueError(f"bits must be a positive integer, got {self.bits}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def rescaled(self, scale: float) -> "Encoding":
        return Encoding(self.bits, scale)


@dataclass(frozen=True)
class QuadraticProgram:
    """``min r.x + x'Qx`` over a (scaled) cube."""

    linear: np.ndarray
    quadratic: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.linear, dtype=float).reshape(-1)
        Q = np.asarray(self.quadratic, dtype=float)
        if Q.shape != (r.size, r.size):
            raise DimensionError(
                f"quadratic has shape {Q.shape}, expected {(r.size, r.size)}")
        _check_symmetric(Q, SYMMETRY_TOL, "quadratic")
        object.__setattr__(self, "linear", r)
        object.__setattr__(self, "quadratic", Q)

    @property
    def n(self) -> int:
        return self.linear.size

    def objective(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.linear @ x + x @ self.quadratic @ x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * self.quadratic @ np.asarray(x, dtype=float) + self.linear


@dataclass(frozen=True)
class QuboModel:
    """Energy ``x' C x + offset`` over binary ``x`` with symmetric ``C``."""

    coeffs: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        C = np.asarray(self.coeffs, dtype=float)
        if C.ndim == 0:
            C = C.reshape(1, 1)
        _check_symmetric(C, 1e-10, "coeffs")
        object.__setattr__(self, "coeffs", C)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def num_variables(self) -> int:
        return self.coeffs.shape[0]

    def energy(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.coeffs @ x) + self.offset

    def energies(self, X: np.ndarray) -> np.ndarray:
        """Energies of the rows of ``X``."""
        X = np.asarray(X, dtype=float)
        return np.einsum("ij,jk,ik->i", X, self.coeffs, X) + self.offset


@dataclass(frozen=True)
class IsingModel:
    """Energy ``h.s + s' J s + offset`` over spins ``s`` in {-1, +1}.

    ``J`` is symmetric with zero diagonal.
    """

    h: np.ndarray
    J: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(-1)
        J = np.asarray(self.J, dtype=float)
        if J.shape != (h.size, h.size):
            raise DimensionError(f"J has shape {J.shape}, expected {(h.size, h.size)}")
        _check_symmetric(J, 1e-10, "J")
        if h.size and np.any(np.diag(J) != 0):
            J = J - np.diag(np.diag(J))
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def num_variables(self) -> int:
        return self.h.size

    def energy(self, s: np.ndarray) -> float:
        s = np.asarray(s, dtype=float)
        return float(self.h @ s + s @ self.J @ s) + self.offset

    def energies(self, S: np.ndarray) -> np.ndarray:
        S = np.asarray(S, dtype=float)
        return S @ self.h + np.einsum("ij,jk,ik->i", S, self.J, S) + self.offset


def precision_vector(enc: Encoding) -> np.ndarray:
    """``enc.scale * (-1, 1/2, ..., 1/2**(bits-1))``."""
    p = 0.5 ** np.arange(enc.bits, dtype=float)
    p[0] = -1.0
    return enc.scale * p


def _expansion(enc: Encoding, n: int) -> np.ndarray:
    # (I_n kron p), shape (n, n*b)
    return np.kron(np.eye(n), precision_vector(enc))


def decode(x_b: np.ndarray, enc: Encoding, n: int) -> np.ndarray:
    """Map a binary vector of length ``n*bits`` to its point in the scaled cube."""
    x_b = np.asarray(x_b, dtype=float)
    if x_b.shape[-1] != n * enc.bits:
        raise DimensionError(
            f"binary vector has length {x_b.shape[-1]}, expected {n * enc.bits}")
    p = precision_vector(enc)
    return (x_b.reshape(*x_b.shape[:-1], n, enc.bits) * p).sum(axis=-1)


def build_qubo(qp: QuadraticProgram, enc: Encoding) -> QuboModel:
    """QUBO ``Diag(r'(I_n kron p)) + Q kron P`` with ``P = p'p``.

    The linear term goes on the diagonal because ``x_b**2 == x_b``.
    """
    p = precision_vector(enc)
    P = np.outer(p, p)
    coeffs = np.kron(qp.quadratic, P)
    coeffs[np.diag_indices_from(coeffs)] += np.kron(qp.linear, p)
    return QuboModel(coeffs, 0.0)


def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Rewrite a QUBO over spins via ``x = (s + 1) / 2``."""
    C = q.coeffs
    h = 0.5 * C.sum(axis=1)
    J = 0.25 * (C - np.diag(np.diag(C)))
    offset = q.offset + 0.25 * (C.sum() + np.trace(C))
    return IsingModel(h, J, offset)


def ising_to_qubo(model: IsingModel) -> QuboModel:
    """Inverse of :func:`qubo_to_ising`, via ``s = 2x - 1``."""
    J, h = model.J, model.h
    C = 4.0 * J
    C[np.diag_indices_from(C)] += 2.0 * h - 4.0 * J.sum(axis=1)
    offset = model.offset + J.sum() - h.sum()
    return QuboModel(C, offset)


def cube_points(enc: Encoding, n: int) -> np.ndarray:
    """All ``2**(n*bits)`` points of the scaled discretized cube, one per row.

    Row ``k`` is ``decode`` of the binary expansion of ``k`` (most significant
    bit first).  Only meant for small ``n*bits``.
    """
    m = n * enc.bits
    X = np.array(list(itertools.product((0.0, 1.0), repeat=m)))
    return decode(X, enc, n)


def gradient_sup(qp: QuadraticProgram, scale: float = 1.0) -> float:
    """``sup ||2Qx + r||`` over ``[-scale, scale]^n``.

    A convex function of ``x`` on a box peaks at a vertex, so the vertices
    are enumerated (fine for the small ``n`` this is used with).
    """
    V = scale * np.array(list(itertools.product((-1.0, 1.0), repeat=qp.n)))
    G = 2.0 * V @ qp.quadratic + qp.linear
    return float(np.max(np.linalg.norm(G, axis=1)))


def lipschitz_gap_bound(qp: QuadraticProgram, enc: Encoding) -> float:
    """Bound on the objective gap between the cube minimum and the best grid point."""
    return enc.scale * np.sqrt(qp.n / 2.0 ** enc.bits) * gradient_sup(qp, enc.scale)
