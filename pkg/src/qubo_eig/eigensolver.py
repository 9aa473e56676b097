"""Controlled-precision QUBO eigensolver.

The smallest eigenpair of a symmetric ``A`` minimizes the Rayleigh quotient.
The solver works in two phases:

1. Initial guess.  Shift ``H = A - lam I`` so that it is indefinite, minimize
   ``x'Hx`` over the discretized unit cube, normalize, update ``lam`` to the
   Rayleigh quotient and repeat while the quotient keeps dropping.
2. Descent.  Minimize the local model ``2 v'H d + d'H d`` over a cube of
   half-width ``precision``, project ``d`` onto the tangent space at ``v``,
   take the exact line-search step (never shorter than ``d`` itself) and keep
   the candidate only if the quotient improves.  Otherwise shrink
   ``precision``.

Every cube minimization is a fixed-size QUBO (``n * bits`` variables) solved
by the annealer, or an Ising problem with ``n`` spins for the one-bit variant.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple, Union

import numpy as np

from .annealer import SamplerConfig, anneal, brute_force, combine_weighted
from .encoding import Encoding, IsingModel, QuadraticProgram, build_qubo, decode
from .oracle import DefinitenessError, OracleError, eigvec_error, generalized_oracle, jacobi_oracle

log = logging.getLogger(__name__)

__all__ = [
    "ConvergenceError", "DefinitenessError", "DegenerateSampleError", "EigenResult",
    "IterationRecord", "OracleError", "SolveOptions", "as_symmetric", "deflate", "descend",
    "descent_program", "line_search_step",
    "eigvec_error", "generalized_oracle", "generalized_rayleigh", "gershgorin_upper",
    "initial_guess", "jacobi_oracle", "rayleigh", "solve_degenerate_pair", "solve_generalized",
    "solve_largest", "solve_smallest", "solve_smallest_ising",
]

# Relative margin a quotient must beat to count as an improvement.
IMPROVEMENT_RTOL = 1e-15


class DegenerateSampleError(RuntimeError):
    """The annealer produced no nonzero vector to normalize."""


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted; ``result`` holds the best pair found so far."""

    def __init__(self, message: str, result: "EigenResult"):
        super().__init__(message)
        self.result = result


def as_symmetric(A, name: str = "A", tol: float = 1e-12) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    scale = max(float(np.max(np.abs(A))), 1e-300) if A.size else 1.0
    if A.size and float(np.max(np.abs(A - A.T))) > tol * scale:
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class SolveOptions:
    """Knobs of the QUBO eigensolver.

    ``initial_lambda`` is ``"trace"`` (average eigenvalue), ``"gershgorin"``
    (upper Gershgorin bound) or an explicit float.  ``full_response_beta`` of
    ``None`` means the lowest-energy sample is used as is.  ``stop`` is
    ``"precision"`` (exit once the cube scale reaches ``tolerance``) or
    ``"oracle"`` (additionally exit once ``|lam - target_eigenvalue|`` is within
    ``oracle_tol``).  ``exact_sampler`` swaps the annealer for brute-force
    enumeration, which is only feasible for tiny problems.
    """

    bits: int = 4
    tolerance: float = 1e-8
    bias_alpha: float = 0.0
    full_response_beta: Optional[float] = None
    precision_shrink: float = 0.1
    initial_lambda: Union[str, float] = "trace"
    initial_precision: float = 0.1
    max_iterations: int = 10000
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    stop: str = "precision"
    target_eigenvalue: Optional[float] = None
    oracle_tol: float = 1e-8
    exact_sampler: bool = False

    def __post_init__(self):
        if not 0 < self.precision_shrink < 1:
            raise ValueError(f"precision_shrink must lie in (0, 1), got {self.precision_shrink}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.bias_alpha < 0:
            raise ValueError(f"bias_alpha must be >= 0, got {self.bias_alpha}")
        if self.full_response_beta is not None and self.full_response_beta < 0:
            raise ValueError("full_response_beta must be >= 0")
        if self.stop not in ("precision", "oracle"):
            raise ValueError(f"stop must be 'precision' or 'oracle', got {self.stop!r}")
        if self.stop == "oracle" and self.target_eigenvalue is None:
            raise ValueError("stop='oracle' needs target_eigenvalue")
        if isinstance(self.initial_lambda, str) and self.initial_lambda not in ("trace", "gershgorin"):
            raise ValueError(f"unknown initial_lambda {self.initial_lambda!r}")
        if self.bits < 1 or self.max_iterations < 1:
            raise ValueError("bits and max_iterations must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    phase: str  # "guess" or "descent"
    eigenvalue: float
    precision: float
    accepted: bool
    anneal_seconds: float
    anneal_work: int
    vector: np.ndarray = field(repr=False)
    direction: Optional[np.ndarray] = field(default=None, repr=False)  # projected step, descent only


@dataclass
class EigenResult:
    eigenvalue: float
    eigenvector: np.ndarray
    trace: List[IterationRecord] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def accepted_steps(self) -> int:
        return sum(r.accepted for r in self.trace)

    @property
    def anneal_seconds(self) -> float:
        return self.trace[-1].anneal_seconds if self.trace else 0.0

    @property
    def anneal_work(self) -> int:
        return self.trace[-1].anneal_work if self.trace else 0

    @property
    def guess_vector(self) -> Optional[np.ndarray]:
        """Eigenvector estimate at the end of the initial-guess phase."""
        guess = [r for r in self.trace if r.phase == "guess" and r.accepted]
        return guess[-1].vector if guess else None

    def negated(self) -> "EigenResult":
        trace = [replace(r, eigenvalue=-r.eigenvalue) for r in self.trace]
        return EigenResult(-self.eigenvalue, self.eigenvector, trace)


def rayleigh(A: np.ndarray, x: np.ndarray) -> float:
    """``x'Ax / x'x``."""
    x = np.asarray(x, dtype=float)
    xx = float(x @ x)
    if xx == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector")
    return float(x @ A @ x) / xx


def generalized_rayleigh(A: np.ndarray, B: np.ndarray, x: np.ndarray) -> float:
    """``x'Ax / x'Bx``; raises :class:`DefinitenessError` if ``x'Bx <= 0``."""
    x = np.asarray(x, dtype=float)
    xBx = float(x @ B @ x)
    if xBx <= 0.0:
        raise DefinitenessError(f"B is not positive definite (x'Bx = {xBx:.3e})")
    return float(x @ A @ x) / xBx


def gershgorin_upper(A: np.ndarray) -> float:
    """``max_i (A_ii + sum_{j != i} |A_ij|)``, an upper bound on the top eigenvalue."""
    A = np.asarray(A, dtype=float)
    d = np.diag(A)
    radii = np.abs(A).sum(axis=1) - np.abs(d)
    return float(np.max(d + radii))


def descent_program(H: np.ndarray, v: np.ndarray) -> QuadraticProgram:
    """Local model ``2 v'H d + d'H d = f(v + d) - f(v)`` for ``f(x) = x'Hx``."""
    return QuadraticProgram(2.0 * H @ v, H)


def line_search_step(H: np.ndarray, v: np.ndarray, delta: np.ndarray) -> float:
    """Minimizer of ``(v + t d)'H(v + t d)`` floored at 1 (1 when the curvature is not positive)."""
    curv = float(delta @ H @ delta)
    if curv <= 0:
        return 1.0
    return max(-float(v @ H @ delta) / curv, 1.0)


def deflate(A: np.ndarray, v1: np.ndarray, alpha: float) -> np.ndarray:
    """``A + alpha v1 v1'``: lifts the eigenvalue along ``v1`` by ``alpha``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    v1 = np.asarray(v1, dtype=float)
    if abs(np.linalg.norm(v1) - 1.0) > 1e-10:
        raise ValueError("v1 must be a unit vector")
    D = np.asarray(A, dtype=float) + alpha * np.outer(v1, v1)
    return 0.5 * (D + D.T)


class _Run:
    """State shared by both phases of one solve: counters, timing, trace."""

    def __init__(self, A, B, opts: SolveOptions, ising: bool = False):
        self.A = A
        self.B = B
        self.opts = opts
        self.ising = ising
        self.n = A.shape[0]
        self.trace: List[IterationRecord] = []
        self.calls = 0
        self.seconds = 0.0
        self.work = 0

    def quotient(self, x) -> float:
        if self.B is None:
            return rayleigh(self.A, x)
        return generalized_rayleigh(self.A, self.B, x)

    def shifted(self, lam: float) -> np.ndarray:
        if self.B is None:
            H = self.A - lam * np.eye(self.n)
        else:
            H = self.A - lam * self.B
        return 0.5 * (H + H.T)

    def improves(self, q: float, lam: float) -> bool:
        return q < lam - IMPROVEMENT_RTOL * abs(lam)

    def sample(self, Q: np.ndarray, r: np.ndarray, scale: float) -> Tuple[np.ndarray, np.ndarray]:
        """Minimize ``r.x + x'Qx`` over the scaled cube.

        Returns the decoded candidates (rows) and their energies, best first.
        """
        cfg = self.opts.sampler
        # Each call gets its own block of read seeds.
        cfg = replace(cfg, seed=cfg.seed + self.calls * cfg.num_reads)
        self.calls += 1
        t0 = time.perf_counter()
        if self.ising:
            # x = scale * s; the diagonal of Q contributes a constant since s_i**2 = 1.
            model = IsingModel(scale * r, scale ** 2 * (Q - np.diag(np.diag(Q))),
                               scale ** 2 * float(np.trace(Q)))
            ss = brute_force(model) if self.opts.exact_sampler else anneal(model, cfg)
            X = scale * ss.samples.astype(float)
        else:
            enc = Encoding(self.opts.bits, scale)
            model = build_qubo(QuadraticProgram(r, Q), enc)
            ss = brute_force(model) if self.opts.exact_sampler else anneal(model, cfg)
            X = decode(ss.samples, enc, self.n)
        self.seconds += time.perf_counter() - t0
        self.work += ss.work
        return X, ss.energies

    def record(self, phase, lam, precision, accepted, v, direction=None):
        self.trace.append(IterationRecord(
            len(self.trace), phase, float(lam), float(precision), bool(accepted),
            self.seconds, self.work, np.array(v, dtype=float), direction))

    def check_budget(self, v, lam):
        if len(self.trace) >= self.opts.max_iterations:
            raise ConvergenceError(
                f"no convergence within {self.opts.max_iterations} iterations",
                EigenResult(lam, v, self.trace))

    def reached_target(self, lam) -> bool:
        o = self.opts
        return o.stop == "oracle" and abs(lam - o.target_eigenvalue) <= o.oracle_tol

    def guess_candidate(self, X, E) -> Optional[np.ndarray]:
        beta = self.opts.full_response_beta
        if beta is not None:
            x = combine_weighted(X, E, beta)
            if np.linalg.norm(x) > 0:
                return x
        nonzero = np.flatnonzero(np.linalg.norm(X, axis=1) > 0)
        return X[nonzero[0]] if nonzero.size else None

    def guess_phase(self, lam0: float) -> Tuple[np.ndarray, float]:
        lam = lam0
        v = None
        while True:
            H = self.shifted(lam)
            r = np.zeros(self.n)
            if v is not None and self.opts.bias_alpha > 0:
                r = -self.opts.bias_alpha * v
            X, E = self.sample(H, r, 1.0)
            x = self.guess_candidate(X, E)
            if x is None:
                if v is None:
                    raise DegenerateSampleError(
                        "annealer returned only the zero vector in the initial guess")
                self.record("guess", lam, 1.0, False, v)
                return v, lam
            cand = x / np.linalg.norm(x)
            q = self.quotient(cand)
            if v is None:
                if not self.improves(q, lam0):
                    log.info("first guess quotient %.6g does not improve on %.6g", q, lam0)
                v, lam = cand, q
                self.record("guess", lam, 1.0, True, v)
            elif self.improves(q, lam):
                v, lam = cand, q
                self.record("guess", lam, 1.0, True, v)
            else:
                self.record("guess", lam, 1.0, False, v)
                return v, lam
            if self.reached_target(lam):
                return v, lam
            self.check_budget(v, lam)

    def descent(self, v: np.ndarray, lam: float) -> EigenResult:
        o = self.opts
        precision = o.initial_precision
        floor = o.tolerance * (1.0 + 1e-9)
        while precision > floor and not self.reached_target(lam):
            self.check_budget(v, lam)
            H = self.shifted(lam)
            qp = descent_program(H, v)
            X, _ = self.sample(qp.quadratic, qp.linear, precision)
            delta = X[0] - (v @ X[0]) * v
            accepted = False
            if np.any(delta != 0):
                w = v + line_search_step(H, v, delta) * delta
                cand = w / np.linalg.norm(w)
                q = self.quotient(cand)
                if self.improves(q, lam):
                    v, lam, accepted = cand, q, True
            self.record("descent", lam, precision, accepted, v, delta)
            if not accepted:
                precision *= o.precision_shrink
        return EigenResult(lam, v, self.trace)


def _initial_lambda(A: np.ndarray, opts: SolveOptions) -> float:
    if opts.initial_lambda == "trace":
        return float(np.trace(A)) / A.shape[0]
    if opts.initial_lambda == "gershgorin":
        return gershgorin_upper(A)
    return float(opts.initial_lambda)


def _check_size(A):
    if A.shape[0] < 2:
        raise ValueError(f"need n >= 2, got n = {A.shape[0]}")


def initial_guess(A, opts: SolveOptions = SolveOptions()):
    """Fixed-point phase only.  Returns ``(v, lam, trace)``."""
    A = as_symmetric(A)
    _check_size(A)
    run = _Run(A, None, opts)
    v, lam = run.guess_phase(_initial_lambda(A, opts))
    return v, lam, run.trace


def descend(A, v, lam, opts: SolveOptions = SolveOptions()) -> EigenResult:
    """Descent phase only, starting from the unit vector ``v``."""
    A = as_symmetric(A)
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    return _Run(A, None, opts).descent(v, rayleigh(A, v))


def solve_smallest(A, opts: SolveOptions = SolveOptions()) -> EigenResult:
    """Smallest eigenvalue of ``A`` and a unit eigenvector."""
    A = as_symmetric(A)
    _check_size(A)
    run = _Run(A, None, opts)
    v, lam = run.guess_phase(_initial_lambda(A, opts))
    return run.descent(v, lam)


def solve_largest(A, opts: SolveOptions = SolveOptions()) -> EigenResult:
    """Largest eigenpair, as the smallest eigenpair of ``-A``."""
    A = as_symmetric(A)
    if opts.target_eigenvalue is not None:
        opts = replace(opts, target_eigenvalue=-opts.target_eigenvalue)
    if not isinstance(opts.initial_lambda, str):
        opts = replace(opts, initial_lambda=-float(opts.initial_lambda))
    return solve_smallest(-A, opts).negated()


def solve_generalized(A, B, opts: SolveOptions = SolveOptions(), w0=None) -> EigenResult:
    """Smallest ``lam`` with ``A v = lam B v`` for SPD ``B``.

    ``lam`` starts at the generalized quotient of ``w0`` (a seeded random unit
    vector when omitted) and every shift is ``A - lam B``.
    """
    A = as_symmetric(A)
    B = as_symmetric(B, "B")
    _check_size(A)
    if B.shape != A.shape:
        raise ValueError(f"A and B shapes differ: {A.shape} vs {B.shape}")
    try:
        np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        raise DefinitenessError("B is not positive definite") from None
    if w0 is None:
        w0 = np.random.default_rng(opts.sampler.seed).standard_normal(A.shape[0])
    w0 = np.asarray(w0, dtype=float)
    w0 = w0 / np.linalg.norm(w0)
    run = _Run(A, B, opts)
    if isinstance(opts.initial_lambda, str):
        lam0 = generalized_rayleigh(A, B, w0)
    else:
        lam0 = float(opts.initial_lambda)
    v, lam = run.guess_phase(lam0)
    return run.descent(v, lam)


def solve_smallest_ising(A, opts: SolveOptions = SolveOptions()) -> EigenResult:
    """One-bit variant: every cube is ``scale * {-1, +1}^n``, solved as an Ising model."""
    A = as_symmetric(A)
    _check_size(A)
    run = _Run(A, None, opts, ising=True)
    v, lam = run.guess_phase(_initial_lambda(A, opts))
    return run.descent(v, lam)


def solve_degenerate_pair(A, opts: SolveOptions = SolveOptions(), shift: float = 1.0,
                          alpha: Optional[float] = None):
    """Two orthogonal eigenvectors of a repeated smallest eigenvalue.

    Solves once, deflates with ``alpha`` (default ``tr(A)/n - lam1``) and solves
    again from ``lam = lam1 + shift``.  The second run uses a fresh block of
    sampler seeds.  Returns both results; the second one's eigenvalue is the
    quotient of its vector on the original ``A``.
    """
    A = as_symmetric(A)
    first = solve_smallest(A, opts)
    if alpha is None:
        alpha = float(np.trace(A)) / A.shape[0] - first.eigenvalue
    deflated = deflate(A, first.eigenvector, alpha)
    cfg = opts.sampler
    opts2 = replace(opts, initial_lambda=first.eigenvalue + shift,
                    sampler=replace(cfg, seed=cfg.seed + 1_000_003 * cfg.num_reads))
    second = solve_smallest(deflated, opts2)
    second.eigenvalue = rayleigh(A, second.eigenvector)
    return first, second
