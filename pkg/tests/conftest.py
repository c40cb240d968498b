"""Shared builders and independent oracles for the test suite.

Oracles here use plain numpy (dense solves, slogdet) and never call into
the package's incremental code paths, so a defect cannot hide on both
sides of a comparison.
"""

import numpy as np

import senselect as ss


def maxabs(a) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a)))


def random_spd(rng, n, cond=30.0):
    # deliberately not the package generator: orthogonal factor from QR,
    # log-uniform spectrum, explicit symmetrization
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.exp(rng.uniform(0.0, np.log(cond), size=n))
    a = (q * lam) @ q.T
    return 0.5 * (a + a.T)


def random_space(rng, n, cond=30.0) -> ss.WeightedSpace:
    return ss.WeightedSpace(random_spd(rng, n, cond))


def random_problem(rng, n, n_s, cond=20.0, weighted=True) -> ss.InverseProblem:
    """Dense random instance fed straight through build_problem."""
    m = random_spd(rng, n, cond) if weighted else np.eye(n)
    space = ss.WeightedSpace(m)
    # M^-1 * SPD is selfadjoint and positive definite in the M inner product
    gpr = np.linalg.solve(m, random_spd(rng, n, cond))
    f = rng.standard_normal((n_s, n))
    sigma = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=n_s))
    m_pr = rng.standard_normal(n)
    return ss.build_problem(space, f, sigma, m_pr, gpr)


def identity_problem(n=3) -> ss.InverseProblem:
    """Unit weight, unit prior, F = I: every sensor vector is a basis vector."""
    space = ss.WeightedSpace.euclidean(n)
    return ss.build_problem(space, np.eye(n), np.ones(n), np.zeros(n), np.eye(n))


def three_sensor_problem() -> ss.InverseProblem:
    """Two parameters, three sensors with rows (2,0), (0,1), (1,1).

    With unit weight and unit prior the preconditioned sensor vectors
    equal the rows, so closed-form values are easy to trace by hand:
    the value of design {0, 2} is log 11 and the best pair is {0, 2}.
    """
    space = ss.WeightedSpace.euclidean(2)
    f = np.array([[2.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    return ss.build_problem(space, f, np.ones(3), np.zeros(2), np.eye(2))


def scalar_problem() -> ss.InverseProblem:
    space = ss.WeightedSpace.euclidean(1)
    return ss.build_problem(
        space, np.array([[1.0]]), np.array([1.0]), np.zeros(1), np.array([[1.0]])
    )


def misfit_rep(p, subset):
    """F(S)* Gamma_n(S)^-1 F(S) assembled directly from the raw fields."""
    subset = list(subset)
    n = p.space.n
    if not subset:
        return np.zeros((n, n))
    fs = p.F[subset, :]
    w = 1.0 / p.sigma[subset] ** 2
    return np.linalg.solve(p.space.M, fs.T @ (fs * w[:, None]))


def logdet_oracle(p, subset) -> float:
    """log det(I + Gamma_pr H(S)) by one slogdet.

    Similarity-invariant, so it checks the objective without sharing the
    square-root construction with the code under test.
    """
    a = np.eye(p.space.n) + p.gamma_pr.rep @ misfit_rep(p, subset)
    sign, val = np.linalg.slogdet(a)
    assert sign > 0
    return float(val)


def report_fields(r: ss.SelectionReport):
    """Comparable view of a selection report, excluding runtime metadata."""
    return (
        r.method,
        r.chosen.indices,
        r.per_step,
        r.phi_final,
        r.eig_final,
        r.k,
        r.problem_hash,
        r.seed,
        r.bound_certificate,
    )
