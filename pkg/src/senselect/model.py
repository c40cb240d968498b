"""Linear Gaussian inverse problem with uncorrelated sensor noise.

Observation model y = F m + eta, eta ~ N(0, diag(sigma_i^2)), with a
Gaussian prior N(m_pr, Gamma_pr) on a weighted space.  The posterior is
Gaussian with

    Gamma_post = (H + Gamma_pr^-1)^-1
    m_post     = Gamma_post (F* Gn^-1 y + Gamma_pr^-1 m_pr)

where F* = M^-1 F' is the adjoint of the forward map and H = F* Gn^-1 F
is the data-misfit Hessian.  Because the noise is uncorrelated, H splits
into rank-one contributions, one per sensor:

    H(S)  = sum_{i in S} s_i (x) s_i,    s_i  = sigma_i^-1 F* e_i
    Ht(S) = sum_{i in S} st_i (x) st_i,  st_i = Gamma_pr^1/2 s_i

Ht(S) is the prior-preconditioned misfit Hessian of the design S; the
package's set objective is log det(I + Ht(S)).  Sensors whose forward-map
row is identically zero carry no information (s_i = 0) and are flagged
inactive at construction.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .wspace import Operator, WeightedSpace, adjoint_forward, is_selfadjoint

SQRT_CONSISTENCY_TOL = 1e-9


class InverseProblem:
    """Immutable bundle of the problem data and derived per-sensor vectors.

    Use build_problem to construct; the constructor validates every
    invariant (noise levels positive, prior selfadjoint in the weighted
    inner product and positive definite, square root consistent).
    """

    def __init__(self, space: WeightedSpace, F, sigma, m_pr, gamma_pr):
        self.space = space
        n = space.n

        F = np.asarray(F, dtype=float)
        if F.ndim != 2 or F.shape[1] != n:
            raise ValueError(f"forward map must have {n} columns, got shape {F.shape}")
        q = F.shape[0]

        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != (q,):
            raise ValueError(f"expected {q} noise levels, got shape {sigma.shape}")
        if not np.all(sigma > 0):
            raise ValueError("noise levels must be strictly positive")

        m_pr = space.check_vector(m_pr)

        if isinstance(gamma_pr, Operator):
            if gamma_pr.space is not space:
                raise ValueError("prior covariance lives on a different space")
        else:
            gamma_pr = Operator(space, gamma_pr)
        if not is_selfadjoint(gamma_pr):
            raise ValueError("prior covariance is not selfadjoint in the weighted inner product")
        G = gamma_pr.rep
        MG = space.M @ G
        MG = 0.5 * (MG + MG.T)
        try:
            self._mg_chol = cho_factor(MG, lower=True)
        except np.linalg.LinAlgError as exc:
            raise ValueError("prior covariance is not positive definite") from exc
        except ValueError as exc:
            raise ValueError("prior covariance is not positive definite") from exc

        self.F = F
        self.sigma = sigma
        self.m_pr = m_pr
        self.gamma_pr = gamma_pr
        self.gamma_pr_sqrt = _selfadjoint_sqrt(space, G)

        R = self.gamma_pr_sqrt.rep
        err = np.abs(R @ R - G).max()
        if err > SQRT_CONSISTENCY_TOL * max(1.0, np.abs(G).max()):
            raise ValueError(f"prior square root inconsistent with covariance (err {err:.3e})")

        # per-sensor representers; columns i give s_i and st_i
        self.sensor_vecs = adjoint_forward(space, F) / sigma[None, :]
        self.precond_vecs = R @ self.sensor_vecs
        # weighted copies M s_i, M st_i cached for inner products
        self.sensor_vecs_w = space.M @ self.sensor_vecs
        self.precond_vecs_w = space.M @ self.precond_vecs

        nonzero = np.any(F != 0.0, axis=1)
        self.active = tuple(int(i) for i in np.flatnonzero(nonzero))
        self.inactive = tuple(int(i) for i in np.flatnonzero(~nonzero))

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def n_s(self) -> int:
        return int(self.F.shape[0])

    @cached_property
    def gamma_pr_inv(self) -> Operator:
        # Gamma_pr^-1 = (M Gamma_pr)^-1 M, solved through the SPD factor
        return Operator(self.space, cho_solve(self._mg_chol, self.space.M))

    @cached_property
    def gamma_pr_logdet(self) -> float:
        sign, val = np.linalg.slogdet(self.gamma_pr.rep)
        if sign <= 0:
            raise ValueError("prior covariance has nonpositive determinant")
        return float(val)

    def content_hash(self) -> str:
        """Stable hex digest of the mathematical content of the problem."""
        h = hashlib.sha256()
        h.update(b"senselect-problem-v1")
        for tag, arr in (
            (b"M", self.space.M),
            (b"F", self.F),
            (b"sigma", self.sigma),
            (b"m_pr", self.m_pr),
            (b"Gamma_pr", self.gamma_pr.rep),
        ):
            a = np.ascontiguousarray(arr, dtype=float)
            h.update(tag)
            h.update(str(a.shape).encode())
            h.update(a.tobytes())
        return h.hexdigest()


def build_problem(space: WeightedSpace, F, sigma, m_pr, gamma_pr) -> InverseProblem:
    return InverseProblem(space, F, sigma, m_pr, gamma_pr)


def _selfadjoint_sqrt(space: WeightedSpace, G: np.ndarray) -> Operator:
    """Principal square root of a covariance, selfadjoint in the weighted space.

    Mapping to orthonormal coordinates z = L' x (with M = L L') turns the
    covariance into the symmetric matrix C = L' G L^-T; its eigenvalue
    square root mapped back, R = L^-T sqrt(C) L', is the unique positive
    selfadjoint square root of G.
    """
    L = space.whitening_factor
    X = solve_triangular(L, G.T, lower=True).T  # G L^-T
    C = L.T @ X
    C = 0.5 * (C + C.T)
    w, V = np.linalg.eigh(C)
    if w[0] <= 0:
        raise ValueError("prior covariance is not positive definite")
    S = (V * np.sqrt(w)) @ V.T
    R = solve_triangular(L, S, lower=True, trans=1)  # L^-T sqrt(C)
    return Operator(space, R @ L.T)


def validate_design(p: InverseProblem, S) -> tuple[int, ...]:
    """Normalize a candidate subset to a sorted tuple of active indices."""
    idx = tuple(int(i) for i in S)
    if len(set(idx)) != len(idx):
        raise ValueError(f"design contains duplicate indices: {idx}")
    idx = tuple(sorted(idx))
    active = set(p.active)
    for i in idx:
        if not 0 <= i < p.n_s:
            raise ValueError(f"candidate index {i} out of range [0, {p.n_s})")
        if i not in active:
            raise ValueError(f"candidate index {i} is inactive (zero forward-map row)")
    return idx


@dataclass(eq=False)
class Posterior:
    """Gaussian posterior: mean vector and covariance operator."""

    mean: np.ndarray
    cov: Operator


def hessian_misfit(p: InverseProblem, S) -> Operator:
    """Data-misfit Hessian H(S) = sum_{i in S} s_i (x) s_i."""
    idx = validate_design(p, S)
    cols = list(idx)
    rep = p.sensor_vecs[:, cols] @ p.sensor_vecs_w[:, cols].T
    return Operator(p.space, rep)


def hessian_preconditioned(p: InverseProblem, S) -> Operator:
    """Prior-preconditioned misfit Hessian Ht(S) = sum_{i in S} st_i (x) st_i."""
    idx = validate_design(p, S)
    cols = list(idx)
    rep = p.precond_vecs[:, cols] @ p.precond_vecs_w[:, cols].T
    return Operator(p.space, rep)


def posterior(p: InverseProblem, S, y) -> Posterior:
    """Posterior mean and covariance for data y observed at the sensors in S.

    y must hold one entry per selected sensor, ordered by ascending sensor
    index.  An empty design returns the prior unchanged.
    """
    idx = validate_design(p, S)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (len(idx),):
        raise ValueError(f"expected {len(idx)} data values, got {y.shape[0]}")
    if not idx:
        return Posterior(p.m_pr.copy(), Operator(p.space, p.gamma_pr.rep.copy()))
    cols = list(idx)
    F_S = p.F[cols, :]
    sig2 = p.sigma[cols] ** 2
    H_rep = p.sensor_vecs[:, cols] @ p.sensor_vecs_w[:, cols].T
    cov_rep = np.linalg.inv(H_rep + p.gamma_pr_inv.rep)
    rhs = p.space.solve(F_S.T @ (y / sig2)) + p.gamma_pr_inv.rep @ p.m_pr
    return Posterior(cov_rep @ rhs, Operator(p.space, cov_rep))
