"""Extremal eigenpairs of symmetric matrices from a sequence of small QUBOs."""

from .annealer import SampleSet, SamplerConfig, anneal, brute_force, full_response_combine
from .eigensolver import (
    ConvergenceError, DefinitenessError, DegenerateSampleError, EigenResult, SolveOptions,
    deflate, descend, generalized_rayleigh, gershgorin_upper, initial_guess, rayleigh,
    solve_degenerate_pair, solve_generalized, solve_largest, solve_smallest, solve_smallest_ising,
)
from .encoding import (
    Encoding, IsingModel, QuadraticProgram, QuboModel, build_qubo, decode, precision_vector,
    qubo_to_ising,
)
from .oracle import eigvec_error, generalized_oracle, jacobi_oracle

__version__ = "0.1.0"
