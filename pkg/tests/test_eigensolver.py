import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qubo_eig.annealer import SamplerConfig
from qubo_eig.eigensolver import (
    ConvergenceError, DefinitenessError, DegenerateSampleError, SolveOptions, deflate, descend,
    descent_program, generalized_rayleigh, gershgorin_upper, initial_guess, line_search_step,
    rayleigh, solve_degenerate_pair, solve_generalized, solve_largest, solve_smallest,
    solve_smallest_ising,
)
from qubo_eig.matgen import gap_matrix, marchenko_pastur, mesh_pair, random_spd, random_symmetric
from qubo_eig.oracle import eigvec_error, generalized_oracle, jacobi_oracle

EXACT = SolveOptions(bits=2, exact_sampler=True)
FAST = SamplerConfig(num_reads=16, sweeps=300)


def residual(A, res, B=None):
    v = res.eigenvector
    Bv = v if B is None else B @ v
    return np.linalg.norm(A @ v - res.eigenvalue * Bv)


# --- quotients and bounds ----------------------------------------------------

@pytest.mark.parametrize("A,x,expected", [
    (np.eye(3), [0.3, -2.0, 1.0], 1.0),
    (np.diag([1.0, 2.0, 3.0]), [1.0, 0.0, 0.0], 1.0),
    (np.array([[0.0, 1.0], [1.0, 0.0]]), [1.0, -1.0], -1.0),
])
def test_rayleigh(A, x, expected):
    assert rayleigh(A, x) == pytest.approx(expected)


def test_rayleigh_zero_vector():
    with pytest.raises(ValueError):
        rayleigh(np.eye(2), [0.0, 0.0])


def test_generalized_rayleigh():
    A = random_symmetric(4, 0)
    x = np.arange(1.0, 5.0)
    assert generalized_rayleigh(A, np.eye(4), x) == pytest.approx(rayleigh(A, x))
    B = random_spd(4, 1)
    assert generalized_rayleigh(2 * B, B, x) == pytest.approx(2.0)
    assert generalized_rayleigh(np.diag([1.0, 4.0]), np.diag([1.0, 2.0]), [0.0, 1.0]) == 2.0
    with pytest.raises(DefinitenessError):
        generalized_rayleigh(np.eye(2), np.diag([1.0, -1.0]), [0.0, 1.0])


@pytest.mark.parametrize("A,expected", [
    (np.diag([1.0, 2.0, 3.0]), 3.0),
    (np.array([[0.0, 1.0], [1.0, 0.0]]), 1.0),
    (np.array([[2.0, -1.0], [-1.0, 2.0]]), 3.0),
])
def test_gershgorin(A, expected):
    assert gershgorin_upper(A) == expected
    assert gershgorin_upper(A) >= jacobi_oracle(A)[0][-1] - 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 12))
def test_gershgorin_bounds_top_eigenvalue(seed, n):
    A = random_symmetric(n, seed)
    assert gershgorin_upper(A) >= np.linalg.eigvalsh(A)[-1] - 1e-12


# --- local model, line search, derivatives ----------------------------------

@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8))
def test_descent_program_is_exact_increment(seed, n):
    rng = np.random.default_rng(seed)
    H = random_symmetric(n, seed)
    v, d = rng.normal(size=n), rng.normal(size=n)
    f = lambda x: x @ H @ x  # noqa: E731
    assert descent_program(H, v).objective(d) == pytest.approx(f(v + d) - f(v), rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_and_hessian_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n = 6
    H = random_symmetric(n, seed)
    x = rng.normal(size=n)
    f = lambda y: y @ H @ y  # noqa: E731
    h = 1e-2  # f is quadratic so central differences are exact up to rounding
    E = np.eye(n)
    grad_fd = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in E])
    hess_fd = np.array([[(f(x + h * (a + b)) - f(x + h * (a - b)) - f(x - h * (a - b))
                          + f(x - h * (a + b))) / (4 * h * h) for b in E] for a in E])
    qp = descent_program(H, x)
    grad = qp.linear  # = gradient of f at x
    hess = 2 * qp.quadratic
    assert np.linalg.norm(grad - grad_fd) <= 1e-6 * np.linalg.norm(grad)
    assert np.linalg.norm(hess - hess_fd) <= 1e-6 * np.linalg.norm(hess)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_line_search_minimizes_quadratic(seed):
    rng = np.random.default_rng(seed)
    n = 5
    H = random_symmetric(n, seed)
    v, d = rng.normal(size=n), rng.normal(size=n)
    curv = d @ H @ d
    q = lambda s: (v + s * d) @ H @ (v + s * d)  # noqa: E731
    t = line_search_step(H, v, d)
    assert t >= 1.0
    if curv > 0:
        t_star = -(v @ H @ d) / curv
        grid = np.linspace(t_star - 5, t_star + 5, 201)
        assert all(q(t_star) <= q(s) + 1e-9 * (1 + abs(q(s))) for s in grid)
        assert t == max(t_star, 1.0)
    else:
        assert t == 1.0


# --- initial guess ---------------------------------------------------------------

def test_initial_guess_diag_exact_sampler():
    v, lam, trace = initial_guess(np.diag([-1.0, 1.0]), EXACT)
    assert lam == -1.0
    assert eigvec_error(v, [1.0, 0.0]) == 0.0
    assert [r.phase for r in trace] == ["guess"] * len(trace)


def test_initial_guess_identity_exits_immediately():
    v, lam, trace = initial_guess(np.eye(3), SolveOptions(sampler=FAST))
    assert lam == pytest.approx(1.0)
    assert len(trace) <= 2 and not trace[-1].accepted


def test_initial_guess_mp10_error_order_tenth():
    errs = []
    for s in range(10):
        A = marchenko_pastur(10, 0.3, s)
        v, _, _ = initial_guess(A, SolveOptions(bits=4, sampler=SamplerConfig(seed=s)))
        errs.append(eigvec_error(v, jacobi_oracle(A)[1][:, 0]))
    assert np.median(errs) <= 0.2


def test_degenerate_sample_error():
    # H = A + 10 I is positive definite and with one bit per entry zero is the only local minimum
    opts = SolveOptions(bits=1, initial_lambda=-10.0, sampler=SamplerConfig(num_reads=2, sweeps=50))
    with pytest.raises(DegenerateSampleError):
        initial_guess(np.diag([1.0, 2.0]), opts)


def test_zero_best_sample_falls_back_to_next_nonzero():
    # at lam = 2 the best cube point is 0 and ties with points along e1
    v, lam, _ = initial_guess(np.diag([2.0, 3.0]), SolveOptions(bits=2, exact_sampler=True,
                                                                 initial_lambda=2.0))
    assert lam == 2.0 and eigvec_error(v, [1.0, 0.0]) == 0.0


# --- descent --------------------------------------------------------------------------

def test_descend_from_exact_eigenvector_only_shrinks():
    res = descend(np.diag([1.0, 2.0]), [1.0, 0.0], 1.0, SolveOptions(sampler=FAST))
    assert not any(r.accepted for r in res.trace)
    np.testing.assert_array_equal(res.eigenvector, [1.0, 0.0])
    precisions = [r.precision for r in res.trace]
    np.testing.assert_allclose(precisions, 0.1 ** np.arange(1, 8))


def test_descend_2x2_closed_form():
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    res = descend(A, [1.0, 0.0], 2.0, SolveOptions(sampler=FAST))
    assert res.eigenvalue == pytest.approx(1.0, abs=1e-8)
    assert eigvec_error(res.eigenvector, np.array([1.0, -1.0]) / np.sqrt(2)) <= 1e-6


def test_max_iterations_raises_with_best_so_far():
    A = marchenko_pastur(6, 0.3, 0)
    with pytest.raises(ConvergenceError) as info:
        solve_smallest(A, SolveOptions(max_iterations=4, sampler=FAST))
    best = info.value.result
    assert len(best.trace) == 4
    assert best.eigenvalue == pytest.approx(rayleigh(A, best.eigenvector), abs=1e-12)


# --- invariants on full runs -----------------------------------------------------------

@pytest.fixture(scope="module")
def mp_runs():
    runs = []
    for s in range(4):
        A = marchenko_pastur(8, 0.3, s)
        runs.append((A, solve_smallest(A, SolveOptions(bits=2, sampler=replace_seed(FAST, s)))))
    return runs


def replace_seed(cfg, seed):
    return SamplerConfig(cfg.num_reads, cfg.sweeps, cfg.beta_schedule, seed)


def test_accepted_lambdas_strictly_decrease(mp_runs):
    for _, res in mp_runs:
        accepted = [r.eigenvalue for r in res.trace if r.accepted]
        assert all(b < a for a, b in zip(accepted, accepted[1:]))


def test_steps_orthogonal_to_current_vector(mp_runs):
    for _, res in mp_runs:
        for prev, rec in zip(res.trace, res.trace[1:]):
            if rec.phase == "descent" and rec.direction is not None:
                assert abs(prev.vector @ rec.direction) <= 1e-12 * max(np.linalg.norm(rec.direction), 1e-300)


def test_result_invariants(mp_runs):
    for A, res in mp_runs:
        assert abs(np.linalg.norm(res.eigenvector) - 1) <= 1e-12
        assert res.eigenvalue == pytest.approx(rayleigh(A, res.eigenvector), abs=1e-12)
        w, V = jacobi_oracle(A)
        assert abs(res.eigenvalue - w[0]) <= 1e-8
        assert eigvec_error(res.eigenvector, V[:, 0]) <= 1e-4
        iters = [r.iteration for r in res.trace]
        assert iters == list(range(len(iters)))


def test_deterministic_given_seed():
    A = marchenko_pastur(6, 0.3, 3)
    a = solve_smallest(A, SolveOptions(sampler=FAST))
    b = solve_smallest(A, SolveOptions(sampler=FAST))
    assert a.eigenvalue == b.eigenvalue
    np.testing.assert_array_equal(a.eigenvector, b.eigenvector)
    assert [r.eigenvalue for r in a.trace] == [r.eigenvalue for r in b.trace]


# --- drivers ---------------------------------------------------------------------------

def test_solve_smallest_needs_n_at_least_2():
    with pytest.raises(ValueError):
        solve_smallest(np.diag([5.0]))


def test_solve_smallest_diag():
    res = solve_smallest(np.diag([1.0, 2.0, 3.0]), SolveOptions(sampler=FAST))
    assert res.eigenvalue == pytest.approx(1.0, abs=1e-8)
    assert eigvec_error(res.eigenvector, [1.0, 0.0, 0.0]) <= 1e-8


def test_solve_smallest_mp10_matches_oracle():
    A = marchenko_pastur(10, 0.3, 5)
    w, V = jacobi_oracle(A)
    res = solve_smallest(A)
    assert abs(res.eigenvalue - w[0]) <= 1e-8
    assert residual(A, res) <= 1e-6


def test_solve_largest():
    res = solve_largest(np.diag([1.0, 2.0, 3.0]), SolveOptions(sampler=FAST))
    assert res.eigenvalue == pytest.approx(3.0, abs=1e-8)
    assert eigvec_error(res.eigenvector, [0.0, 0.0, 1.0]) <= 1e-8
    res = solve_largest(np.array([[0.0, 1.0], [1.0, 0.0]]), SolveOptions(sampler=FAST))
    assert res.eigenvalue == pytest.approx(1.0, abs=1e-8)
    assert eigvec_error(res.eigenvector, np.array([1.0, 1.0]) / np.sqrt(2)) <= 1e-6
    A = marchenko_pastur(10, 0.3, 2)
    res = solve_largest(A)
    assert abs(res.eigenvalue - jacobi_oracle(A)[0][-1]) <= 1e-8
    assert all(r.eigenvalue <= res.eigenvalue + 1e-12 for r in res.trace)


def test_shift_invariance_through_oracle():
    A = marchenko_pastur(8, 0.3, 9)
    c = 3.7
    V1 = jacobi_oracle(A)[1][:, 0]
    V2 = jacobi_oracle(A + c * np.eye(8))[1][:, 0]
    assert eigvec_error(V1, V2) <= 1e-10
    r1 = solve_smallest(A, SolveOptions(sampler=FAST))
    r2 = solve_smallest(A + c * np.eye(8), SolveOptions(sampler=FAST))
    assert residual(A, r1) <= 1e-6
    assert residual(A + c * np.eye(8), r2) <= 1e-6


# --- generalized ------------------------------------------------------------------------

def test_generalized_identity_b_agrees():
    A = marchenko_pastur(6, 0.3, 1)
    g = solve_generalized(A, np.eye(6), SolveOptions(sampler=FAST))
    s = solve_smallest(A, SolveOptions(sampler=FAST))
    assert g.eigenvalue == pytest.approx(s.eigenvalue, abs=1e-8)
    assert residual(A, g) <= 1e-6 and residual(A, s) <= 1e-6


def test_generalized_diag_pair():
    res = solve_generalized(np.diag([2.0, 6.0]), np.diag([1.0, 2.0]), SolveOptions(sampler=FAST))
    assert res.eigenvalue == pytest.approx(2.0, abs=1e-8)
    assert eigvec_error(res.eigenvector, [1.0, 0.0]) <= 1e-6


def test_generalized_rejects_indefinite_b():
    with pytest.raises(DefinitenessError):
        solve_generalized(np.eye(2), np.diag([1.0, -1.0]))


def test_generalized_given_start_vector():
    A, B = np.diag([2.0, 6.0]), np.diag([1.0, 2.0])
    res = solve_generalized(A, B, SolveOptions(sampler=FAST), w0=[0.0, 1.0])
    assert res.trace[0].eigenvalue <= 3.0
    assert res.eigenvalue == pytest.approx(2.0, abs=1e-8)


def test_generalized_mesh_48():
    A, B = mesh_pair(6, 8)
    w, X = generalized_oracle(A, B)
    res = solve_generalized(A, B, SolveOptions(bits=4))
    assert abs(res.eigenvalue - w[0]) <= 1e-8
    assert residual(A, res, B) <= 1e-6 * np.linalg.norm(A)


# --- Ising variant ---------------------------------------------------------------------

def test_ising_exact_spin_direction():
    res = solve_smallest_ising(np.array([[0.0, 1.0], [1.0, 0.0]]), SolveOptions(sampler=FAST))
    assert res.eigenvalue == pytest.approx(-1.0, abs=1e-12)
    assert eigvec_error(res.eigenvector, np.array([1.0, -1.0]) / np.sqrt(2)) <= 1e-8


def test_ising_diag_converges_with_shrinking_steps():
    A = np.diag([1.0, 2.0])
    res = solve_smallest_ising(A, SolveOptions(sampler=FAST))
    assert residual(A, res) <= 1e-6
    assert res.eigenvalue == pytest.approx(1.0, abs=1e-8)


def test_ising_mp_matches_oracle():
    A = marchenko_pastur(6, 0.3, 4)
    res = solve_smallest_ising(A, SolveOptions(sampler=FAST))
    assert abs(res.eigenvalue - jacobi_oracle(A)[0][0]) <= 1e-8


# --- deflation ----------------------------------------------------------------------------

def test_deflate_examples():
    np.testing.assert_array_equal(deflate(np.eye(3), [1.0, 0.0, 0.0], 1.0), np.diag([2.0, 1.0, 1.0]))
    A = marchenko_pastur(5, 0.3, 0)
    w, V = jacobi_oracle(A)
    D = deflate(A, V[:, 0], 0.7)
    assert rayleigh(D, V[:, 0]) == pytest.approx(w[0] + 0.7)
    with pytest.raises(ValueError):
        deflate(A, V[:, 0], 0.0)
    with pytest.raises(ValueError):
        deflate(A, 2 * V[:, 0], 1.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 20), k=st.integers(0, 19),
       alpha=st.floats(0.1, 10.0))
def test_deflation_shifts_one_eigenvalue(seed, n, k, alpha):
    k = k % n
    A = random_symmetric(n, seed)
    w, V = jacobi_oracle(A)
    expected = w.copy()
    expected[k] += alpha
    got, _ = jacobi_oracle(deflate(A, V[:, k], alpha))
    np.testing.assert_allclose(got, np.sort(expected), atol=1e-10 * max(1, np.abs(expected).max()))


def test_degenerate_pair_orthogonal():
    A = gap_matrix(10, 0.0, 3)
    first, second = solve_degenerate_pair(A, SolveOptions(bits=4))
    assert abs(first.eigenvector @ second.eigenvector) <= 1e-6
    assert abs(first.eigenvalue) <= 1e-8 and abs(rayleigh(A, second.eigenvector)) <= 1e-8
