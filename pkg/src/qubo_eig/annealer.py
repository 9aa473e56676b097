"""Seeded simulated annealing for QUBO / Ising models, plus an exhaustive oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numba
import numpy as np

from .encoding import Encoding, IsingModel, QuboModel, decode, ising_to_qubo

Model = Union[QuboModel, IsingModel]

BRUTE_FORCE_MAX_VARIABLES = 24
BETA_CLAMP = (1e-3, 1e6)


class CapacityError(ValueError):
    """Raised when exhaustive enumeration would be too large."""


@dataclass(frozen=True)
class SamplerConfig:
    num_reads: int = 32
    sweeps: int = 1000
    beta_schedule: Optional[Tuple[float, float]] = None
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1 or self.sweeps < 1:
            raise ValueError("num_reads and sweeps must be >= 1")
        if self.beta_schedule is not None:
            lo, hi = self.beta_schedule
            if not 0 < lo < hi:
                raise ValueError(f"need 0 < beta_min < beta_max, got {self.beta_schedule}")


@dataclass(frozen=True)
class SampleSet:
    """Distinct samples sorted by ascending energy.

    ``samples`` holds binary vectors for QUBO models and spin vectors for
    Ising models.  ``work`` counts attempted single-variable flips.
    """

    samples: np.ndarray
    energies: np.ndarray
    work: int = 0

    def __len__(self):
        return len(self.energies)

    @property
    def first(self) -> Tuple[np.ndarray, float]:
        return self.samples[0], float(self.energies[0])

    def __iter__(self):
        return zip(self.samples, self.energies)


def _sorted_unique(model: Model, X: np.ndarray, work: int = 0) -> SampleSet:
    # First occurrence wins on duplicate rows; stable sort keeps that order on ties.
    X = np.ascontiguousarray(X, dtype=np.int8)
    _, first_idx = np.unique(X, axis=0, return_index=True)
    X = X[np.sort(first_idx)]
    E = model.energies(X)
    order = np.argsort(E, kind="stable")
    return SampleSet(X[order], E[order], work)


def auto_beta_range(coeffs: np.ndarray) -> Tuple[float, float]:
    """Geometric schedule end points derived from the coefficient magnitudes.

    ``beta_min = ln 2 / max|c|`` and ``beta_max = ln(100 m) / min|c|`` over the
    non-negligible coefficients.  The clamp is applied to ``beta * max|c|`` so
    that the schedule is invariant under rescaling of the model.
    """
    a = np.abs(coeffs)
    cmax = float(a.max())
    if cmax == 0.0:
        return 1.0, 2.0
    nz = a[a > 1e-12 * cmax]
    cmin = float(nz.min())
    m = coeffs.shape[0]
    lo = min(max(math.log(2.0), BETA_CLAMP[0]), BETA_CLAMP[1])
    hi = min(max(math.log(100.0 * m) * cmax / cmin, BETA_CLAMP[0]), BETA_CLAMP[1])
    if hi <= lo:
        hi = 2.0 * lo
    return lo / cmax, hi / cmax


@numba.njit(cache=True)
def _anneal_read(C, x, betas, u, tol):
    m = C.shape[0]
    fld = np.zeros(m)
    for i in range(m):
        if x[i]:
            for j in range(m):
                fld[j] += C[i, j]
    for s in range(betas.shape[0]):
        beta = betas[s]
        for i in range(m):
            xi = x[i]
            sgn = 1.0 - 2.0 * xi
            d = sgn * (C[i, i] + 2.0 * (fld[i] - C[i, i] * xi))
            if d <= 0.0 or u[s, i] < math.exp(-beta * d):
                x[i] = 1 - xi
                for j in range(m):
                    fld[j] += sgn * C[i, j]
    # zero-temperature polish so every read ends in a local minimum
    improved = True
    while improved:
        improved = False
        for i in range(m):
            xi = x[i]
            sgn = 1.0 - 2.0 * xi
            d = sgn * (C[i, i] + 2.0 * (fld[i] - C[i, i] * xi))
            if d < -tol:
                x[i] = 1 - xi
                for j in range(m):
                    fld[j] += sgn * C[i, j]
                improved = True
    return x


def anneal(model: Model, cfg: SamplerConfig = SamplerConfig()) -> SampleSet:
    """Single-flip Metropolis annealing with ``cfg.num_reads`` independent restarts.

    Read ``k`` draws from ``numpy.random.default_rng(cfg.seed + k)``, so the
    result does not depend on read order.
    """
    if model.num_variables < 1:
        raise ValueError("model has no variables")
    qubo = ising_to_qubo(model) if isinstance(model, IsingModel) else model
    C = np.ascontiguousarray(qubo.coeffs)
    m = C.shape[0]
    lo, hi = cfg.beta_schedule or auto_beta_range(C)
    betas = np.geomspace(lo, hi, cfg.sweeps)
    tol = 1e-13 * float(np.abs(C).max())

    reads = np.empty((cfg.num_reads, m), dtype=np.int8)
    for k in range(cfg.num_reads):
        rng = np.random.default_rng(cfg.seed + k)
        x = rng.integers(0, 2, size=m).astype(np.int8)
        u = rng.random((cfg.sweeps, m))
        reads[k] = _anneal_read(C, x, betas, u, tol)

    if isinstance(model, IsingModel):
        reads = 2 * reads - 1
    return _sorted_unique(model, reads, work=cfg.num_reads * cfg.sweeps * m)


def brute_force(model: Model, top_k: Optional[int] = None) -> SampleSet:
    """Exact enumeration of every assignment, lowest ``top_k`` energies kept."""
    m = model.num_variables
    if m > BRUTE_FORCE_MAX_VARIABLES:
        raise CapacityError(
            f"brute_force supports at most {BRUTE_FORCE_MAX_VARIABLES} variables, got {m}")
    keep = 2 ** m if top_k is None else max(1, min(top_k, 2 ** m))
    weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    chunk = 1 << min(m, 16)

    best_X, best_E = [], []
    for start in range(0, 2 ** m, chunk):
        idx = np.arange(start, min(start + chunk, 2 ** m), dtype=np.int64)
        X = ((idx[:, None] & weights) != 0).astype(np.int8)
        if isinstance(model, IsingModel):
            X = 2 * X - 1
        E = model.energies(X)
        if len(E) > keep:
            sel = np.argpartition(E, keep - 1)[:keep]
            sel.sort()
            X, E = X[sel], E[sel]
        best_X.append(X)
        best_E.append(E)
    X = np.concatenate(best_X)
    E = np.concatenate(best_E)
    order = np.argsort(E, kind="stable")[:keep]
    return SampleSet(X[order], E[order], work=2 ** m)


def combine_weighted(vectors: np.ndarray, energies: Sequence[float], beta: float) -> np.ndarray:
    """``(1/l) * sum_i exp(-beta (E_i - E_0)) v_i`` with ``E_0`` the lowest energy."""
    vectors = np.asarray(vectors, dtype=float)
    E = np.asarray(energies, dtype=float)
    if E.size == 0:
        raise ValueError("cannot combine an empty sample set")
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    w = np.exp(-beta * (E - E.min()))
    return w @ vectors / E.size


def full_response_combine(s: SampleSet, enc: Encoding, n: int, beta: float) -> np.ndarray:
    """Energy-weighted average of every decoded sample in ``s``."""
    if len(s) == 0:
        raise ValueError("cannot combine an empty sample set")
    return combine_weighted(decode(s.samples, enc, n), s.energies, beta)
