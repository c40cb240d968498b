"""Information-gain set objective and its discrete derivatives.

For a design S the objective is phi(S) = log det(I + Ht(S)), twice the
expected information gain of the corresponding experiment.  With
A = I + Ht(S), the marginal gain of adding sensor v is

    phi(S + v) - phi(S) = log(1 + a_vv),    a_ij = <A^-1 st_i, st_j>

and the gain of v after first adding w has the closed form

    log(1 + a_vv - a_vw^2 / (1 + a_ww))

evaluated with the coefficients of the unextended design, which is what
makes one-step submodularity checks cheap.  DesignState tracks A^-1
incrementally through rank-one updates, with a periodic dense refactor
that bounds the accumulated drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import InverseProblem, validate_design
from .wspace import Operator, rank1_inverse_update

REFACTOR_PERIOD = 50
REFACTOR_RESIDUAL_TOL = 1e-8
REFACTOR_PHI_TOL = 1e-8


@dataclass(frozen=True)
class Design:
    """Sorted tuple of distinct 0-based candidate indices."""

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValueError(f"design contains duplicate indices: {idx}")
        if any(i < 0 for i in idx):
            raise ValueError(f"design contains negative indices: {idx}")
        object.__setattr__(self, "indices", tuple(sorted(idx)))

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, i) -> bool:
        return i in self.indices


def as_design(S) -> Design:
    return S if isinstance(S, Design) else Design(tuple(S))


def phi_eig(p: InverseProblem, S) -> float:
    """log det(I + Ht(S)), evaluated by a dense symmetric factorization.

    The representation of I + Ht(S) is mapped by the similarity transform
    L' (.) L^-T (with M = L L') to a symmetric positive definite matrix
    whose Cholesky factor gives the log determinant.  The empty design
    returns exactly 0.  Log terms are summed in sorted order so designs
    with identical spectra evaluate to identical floats.
    """
    idx = validate_design(p, S)
    if not idx:
        return 0.0
    L = p.space.whitening_factor
    W = L.T @ p.precond_vecs[:, list(idx)]
    B = np.eye(p.n) + W @ W.T
    B = 0.5 * (B + B.T)
    c = np.linalg.cholesky(B)
    return 2.0 * float(np.sum(np.sort(np.log(np.diag(c)))))


def eig_nats(p: InverseProblem, S) -> float:
    """Expected information gain of the design, in nats: half of phi_eig."""
    return 0.5 * phi_eig(p, S)


@dataclass(eq=False)
class DesignState:
    """A design together with the inverse of its shifted information operator.

    info_inv holds (I + Ht(S))^-1; phi holds phi_eig(S).  Both are carried
    incrementally across extend calls and refreshed by a dense refactor
    every REFACTOR_PERIOD updates, where the incremental values are checked
    against the dense ones before being replaced.
    """

    problem: InverseProblem
    design: Design
    info_inv: Operator
    phi: float
    updates_since_refactor: int = 0


def design_state(p: InverseProblem, S=()) -> DesignState:
    idx = validate_design(p, S)
    if idx:
        cols = list(idx)
        A = np.eye(p.n) + p.precond_vecs[:, cols] @ p.precond_vecs_w[:, cols].T
        inv = np.linalg.inv(A)
    else:
        inv = np.eye(p.n)
    return DesignState(p, Design(idx), Operator(p.space, inv), phi_eig(p, idx))


def _check_candidate(p: InverseProblem, i: int) -> int:
    i = int(i)
    if not 0 <= i < p.n_s:
        raise ValueError(f"candidate index {i} out of range [0, {p.n_s})")
    return i


def overlap(state: DesignState, i, j) -> float:
    """Coefficient a_ij = <A^-1 st_i, st_j> of the current design.

    Drives both the marginal gain (diagonal) and the conditioned gain
    (off-diagonal).  Only active candidates have these vectors; inactive
    indices are rejected.
    """
    p = state.problem
    i = _check_candidate(p, i)
    j = _check_candidate(p, j)
    active = set(p.active)
    if i not in active or j not in active:
        raise ValueError("overlap is undefined for inactive candidates")
    x = state.info_inv.rep @ p.precond_vecs[:, i]
    return float(x @ p.precond_vecs_w[:, j])


def marginal_gain(state: DesignState, v) -> float:
    """phi(S + v) - phi(S) = log(1 + a_vv).

    Inactive candidates gain exactly 0 by convention (their sensor vector
    is zero); search loops exclude them up front.
    """
    p = state.problem
    v = _check_candidate(p, v)
    if v in state.design:
        raise ValueError(f"candidate {v} is already in the design")
    if v not in set(p.active):
        return 0.0
    return math.log1p(overlap(state, v, v))


def marginal_gain_conditioned(state: DesignState, v, w) -> float:
    """Gain of v after first adding w, from the coefficients at S alone.

    Equals log(1 + a_vv - a_vw^2 / (1 + a_ww)).  Pure: the state is not
    extended.  A zero-sensor w changes nothing, so the plain gain of v is
    returned in that case.
    """
    p = state.problem
    v = _check_candidate(p, v)
    w = _check_candidate(p, w)
    if v == w:
        raise ValueError("conditioned gain requires two distinct candidates")
    if v in state.design or w in state.design:
        raise ValueError("candidates must lie outside the current design")
    active = set(p.active)
    if v not in active:
        return 0.0
    if w not in active:
        return marginal_gain(state, v)
    a_vv = overlap(state, v, v)
    a_vw = overlap(state, v, w)
    a_ww = overlap(state, w, w)
    return math.log1p(a_vv - a_vw * a_vw / (1.0 + a_ww))


def extend(state: DesignState, v) -> DesignState:
    """New state with v added, via a rank-one update of the inverse.

    The determinant lemma gives the phi increment log(1 + a_vv); the
    Sherman-Morrison update gives the new inverse.  In this positive
    semidefinite setting the update denominator 1 + a_vv is at least 1,
    so the update never degenerates.
    """
    p = state.problem
    v = _check_candidate(p, v)
    if v not in set(p.active):
        raise ValueError(f"candidate {v} is inactive and cannot be selected")
    if v in state.design:
        raise ValueError(f"candidate {v} is already in the design")
    a_vv = overlap(state, v, v)
    st_v = p.precond_vecs[:, v]
    new_inv = rank1_inverse_update(state.info_inv, st_v, st_v)
    new_phi = state.phi + math.log1p(a_vv)
    new_design = Design(state.design.indices + (v,))
    count = state.updates_since_refactor + 1
    if count >= REFACTOR_PERIOD:
        return _refactor(p, new_design, new_inv, new_phi)
    return DesignState(p, new_design, new_inv, new_phi, count)


def _refactor(p: InverseProblem, design: Design, inv: Operator, phi: float) -> DesignState:
    """Dense rebuild of the inverse and phi, verifying the drifted values."""
    cols = list(design.indices)
    A = np.eye(p.n) + p.precond_vecs[:, cols] @ p.precond_vecs_w[:, cols].T
    resid = float(np.abs(inv.rep @ A - np.eye(p.n)).max())
    if resid > REFACTOR_RESIDUAL_TOL:
        raise RuntimeError(f"incremental inverse drifted: residual {resid:.3e}")
    fresh = design_state(p, design)
    if abs(phi - fresh.phi) > REFACTOR_PHI_TOL * max(1.0, abs(fresh.phi)):
        raise RuntimeError(
            f"incremental objective drifted: {phi!r} vs dense {fresh.phi!r}"
        )
    return fresh
