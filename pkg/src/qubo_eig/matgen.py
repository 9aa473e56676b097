"""Random test matrices and a small Matrix Market reader.

All generators draw from ``numpy.random.default_rng(seed)`` (PCG64 bit
generator, ziggurat normals), so outputs are fixed for a given numpy major
version and seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np


class MatrixFormatError(ValueError):
    """Malformed or unsupported Matrix Market input."""


@dataclass(frozen=True)
class EnsembleSpec:
    """Which matrix to build.

    ``kind`` is one of ``"mp"`` (Marchenko-Pastur, uses ``ratio``), ``"gap"``
    (uses ``gap``), ``"degenerate"`` (gap matrix with ``gap = 0``), ``"spd"``
    or ``"explicit"`` (Matrix Market file at ``path``).
    """

    kind: str
    n: int = 10
    seed: int = 0
    ratio: float = 0.3
    gap: float = 0.0
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("mp", "gap", "degenerate", "spd", "explicit"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.kind == "explicit":
            if self.path is None:
                raise ValueError("explicit ensemble needs a path")
            return
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.kind == "mp" and not 0 < self.ratio <= 1:
            raise ValueError(f"ratio must lie in (0, 1], got {self.ratio}")
        if self.kind == "gap" and self.gap < 0:
            raise ValueError(f"gap must be >= 0, got {self.gap}")

    def build(self) -> np.ndarray:
        if self.kind == "mp":
            return marchenko_pastur(self.n, self.ratio, self.seed)
        if self.kind == "gap":
            return gap_matrix(self.n, self.gap, self.seed)
        if self.kind == "degenerate":
            return gap_matrix(self.n, 0.0, self.seed)
        if self.kind == "spd":
            return random_spd(self.n, self.seed)
        return load_matrix_market(self.path)


def marchenko_pastur(n: int, ratio: float, seed: int) -> np.ndarray:
    """Wishart matrix ``X X' / m`` with ``X`` an ``n x m`` Gaussian, ``m = round(n / ratio)``."""
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    m = int(round(n / ratio))
    X = np.random.default_rng(seed).standard_normal((n, m))
    W = X @ X.T / m
    return 0.5 * (W + W.T)


def haar_orthogonal(n: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian with the R-diagonal sign fix)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    Z = np.random.default_rng(seed).standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def gap_matrix(n: int, g: float, seed: int) -> np.ndarray:
    """``U' Diag(0, g, 1, 2, ..., n-2) U`` with Haar-random ``U``."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if g < 0:
        raise ValueError(f"gap must be >= 0, got {g}")
    U = haar_orthogonal(n, seed)
    d = np.concatenate(([0.0, g], np.arange(1, n - 1, dtype=float)))
    M = U.T @ (d[:, None] * U)
    return 0.5 * (M + M.T)


def random_spd(n: int, seed: int, cond: float = 10.0) -> np.ndarray:
    """SPD matrix with Haar eigenvectors and eigenvalues spread log-uniformly over ``[1, cond]``."""
    rng = np.random.default_rng(seed)
    U = haar_orthogonal(n, int(rng.integers(2**63 - 1)))
    d = np.exp(rng.uniform(0.0, np.log(cond), size=n))
    M = U.T @ (d[:, None] * U)
    return 0.5 * (M + M.T)


def random_symmetric(n: int, seed: int) -> np.ndarray:
    X = np.random.default_rng(seed).standard_normal((n, n))
    return 0.5 * (X + X.T)


def mesh_pair(nx: int, ny: int) -> Tuple[np.ndarray, np.ndarray]:
    """Stiffness/mass pair of bilinear finite elements on an ``nx x ny`` node grid.

    Square elements of side ``1 / (nx - 1)``, homogeneous Neumann boundary.  The stiffness matrix is
    positive semidefinite (constant null vector) and the mass matrix SPD.
    """
    h = 1.0 / max(nx - 1, 1)
    Ke = np.array([[4, -1, -2, -1], [-1, 4, -1, -2], [-2, -1, 4, -1], [-1, -2, -1, 4]]) / 6.0
    Me = np.array([[4, 2, 1, 2], [2, 4, 2, 1], [1, 2, 4, 2], [2, 1, 2, 4]]) * h * h / 36.0
    N = nx * ny
    K = np.zeros((N, N))
    M = np.zeros((N, N))
    for j in range(ny - 1):
        for i in range(nx - 1):
            nodes = [j * nx + i, j * nx + i + 1, (j + 1) * nx + i + 1, (j + 1) * nx + i]
            K[np.ix_(nodes, nodes)] += Ke
            M[np.ix_(nodes, nodes)] += Me
    return K, M


_SUPPORTED_SYMMETRY = ("general", "symmetric")


def load_matrix_market(path: Union[str, Path]) -> np.ndarray:
    """Read a real coordinate- or array-format ``.mtx`` file as a dense symmetric matrix.

    Symmetric files store the lower triangle and are mirrored.  General files
    must already be symmetric to within ``1e-10`` of the largest entry.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    return parse_matrix_market(lines, str(path))


def parse_matrix_market(lines, source: str = "<string>") -> np.ndarray:
    if isinstance(lines, str):
        lines = lines.splitlines()
    if not lines:
        raise MatrixFormatError(f"{source}: empty file")

    def fail(lineno, msg):
        raise MatrixFormatError(f"{source}:{lineno}: {msg}")

    banner = lines[0].split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket" or banner[1].lower() != "matrix":
        fail(1, "missing '%%MatrixMarket matrix <format> <field> <symmetry>' banner")
    fmt, fld, sym = (b.lower() for b in banner[2:])
    if fmt not in ("coordinate", "array"):
        fail(1, f"unsupported format {fmt!r}")
    if fld not in ("real", "integer", "double"):
        fail(1, f"unsupported field {fld!r}; only real matrices are read")
    if sym not in _SUPPORTED_SYMMETRY:
        fail(1, f"unsupported symmetry {sym!r}")

    body = [(k + 1, ln.split()) for k, ln in enumerate(lines)
            if k > 0 and ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        fail(len(lines), "missing size line")
    size_lineno, size = body[0]
    try:
        dims = [int(t) for t in size]
    except ValueError:
        fail(size_lineno, f"bad size line {' '.join(size)!r}")
    entries = body[1:]

    if fmt == "coordinate":
        if len(dims) != 3:
            fail(size_lineno, "coordinate size line needs 'rows cols nnz'")
        rows, cols, nnz = dims
    else:
        if len(dims) != 2:
            fail(size_lineno, "array size line needs 'rows cols'")
        rows, cols = dims
    if rows != cols:
        fail(size_lineno, f"matrix is not square ({rows} x {cols})")
    n = rows
    A = np.zeros((n, n))

    if fmt == "coordinate":
        if len(entries) != nnz:
            fail(size_lineno, f"declared {nnz} entries, found {len(entries)}")
        for lineno, tok in entries:
            if len(tok) != 3:
                fail(lineno, "expected 'row col value'")
            try:
                i, j, val = int(tok[0]) - 1, int(tok[1]) - 1, float(tok[2])
            except ValueError:
                fail(lineno, f"cannot parse entry {' '.join(tok)!r}")
            if not (0 <= i < n and 0 <= j < n):
                fail(lineno, f"index ({i + 1}, {j + 1}) out of range")
            if sym == "symmetric" and j > i:
                fail(lineno, "symmetric storage must list the lower triangle only")
            A[i, j] += val
            if sym == "symmetric" and i != j:
                A[j, i] += val
    else:
        # column-major; symmetric stores the lower triangle column by column
        if sym == "symmetric":
            idx = [(i, j) for j in range(n) for i in range(j, n)]
        else:
            idx = [(i, j) for j in range(n) for i in range(n)]
        if len(entries) != len(idx):
            fail(size_lineno, f"expected {len(idx)} values, found {len(entries)}")
        for (lineno, tok), (i, j) in zip(entries, idx):
            if len(tok) != 1:
                fail(lineno, "expected one value per line")
            try:
                A[i, j] = float(tok[0])
            except ValueError:
                fail(lineno, f"cannot parse value {tok[0]!r}")
            if sym == "symmetric":
                A[j, i] = A[i, j]

    if sym == "general":
        scale = max(float(np.abs(A).max()), 1e-300)
        asym = np.abs(A - A.T)
        if asym.max() > 1e-10 * scale:
            i, j = np.unravel_index(np.argmax(asym), asym.shape)
            raise MatrixFormatError(
                f"{source}: general matrix is not symmetric: "
                f"A[{i + 1},{j + 1}]={float(A[i, j])!r} vs A[{j + 1},{i + 1}]={float(A[j, i])!r} "
                f"(max asymmetry {asym.max():.3e})")
    return 0.5 * (A + A.T)


def write_matrix_market(path: Union[str, Path], A: np.ndarray, symmetric: bool = True) -> None:
    """Write ``A`` in coordinate format (lower triangle when ``symmetric``)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if symmetric:
        ij = [(i, j) for j in range(n) for i in range(j, n) if A[i, j] != 0]
    else:
        ij = [(i, j) for j in range(n) for i in range(n) if A[i, j] != 0]
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {'symmetric' if symmetric else 'general'}\n")
        fh.write(f"{n} {n} {len(ij)}\n")
        for i, j in ij:
            fh.write(f"{i + 1} {j + 1} {float(A[i, j])!r}\n")
