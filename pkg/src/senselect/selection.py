"""Subset solvers for cardinality-constrained information-gain maximization.

greedy picks the largest marginal gain k times; lazy_greedy reproduces the
same selections while skipping most gain evaluations by keeping stale
upper bounds in a heap (valid because gains only shrink as the design
grows).  exhaustive enumerates every size-k subset under a configurable
cap, and certify_bound attaches the (1 - 1/e) optimality certificate that
monotonicity plus submodularity guarantee for the greedy value.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import objective
from .model import InverseProblem
from .objective import Design

EXHAUSTIVE_CAP = 2_000_000
GAIN_MONOTONE_TOL = 1e-9
CERTIFICATE_SLACK = 1e-12
GUARANTEE_FLOOR = 1.0 - 1.0 / math.e


class CapExceededError(RuntimeError):
    """Exhaustive enumeration would exceed the subset cap."""


class BoundViolationError(RuntimeError):
    """Greedy value fell below the (1 - 1/e) share of the optimum.

    With a correct implementation this cannot happen; raising loudly makes
    any numerical or logic defect impossible to miss.
    """


@dataclass(frozen=True)
class Certificate:
    opt_phi: float
    ratio: float
    floor: float = GUARANTEE_FLOOR


@dataclass(eq=False)
class SelectionReport:
    """Outcome of one solver run.

    per_step records (candidate index, gain, phi after the step) in
    selection order; phi_final is the densely recomputed objective of the
    chosen design and eig_final = phi_final / 2 is the expected
    information gain in nats.  wall_time is runtime metadata and is not
    part of the serialized report.
    """

    method: str
    chosen: Design
    per_step: tuple[tuple[int, float, float], ...]
    phi_final: float
    eig_final: float
    k: int
    problem_hash: str
    seed: int | None = None
    bound_certificate: Certificate | None = None
    wall_time: float | None = None


def _check_budget(p: InverseProblem, k: int) -> int:
    k = int(k)
    if k < 0 or k > len(p.active):
        raise ValueError(f"budget {k} outside [0, {len(p.active)}] active candidates")
    return k


def _gains(state, candidates, threads: int):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(lambda v: objective.marginal_gain(state, v), candidates))
    return [objective.marginal_gain(state, v) for v in candidates]


def _step_checks(gain: float, prev_gain: float) -> None:
    if gain <= 0.0:
        raise RuntimeError(f"greedy gain {gain!r} not strictly positive")
    if gain > prev_gain + GAIN_MONOTONE_TOL:
        raise RuntimeError(
            f"greedy gains increased: {prev_gain!r} -> {gain!r}"
        )


def greedy(p: InverseProblem, k: int, threads: int = 1) -> SelectionReport:
    """Plain greedy: evaluate every remaining candidate at every step."""
    t0 = time.perf_counter()
    k = _check_budget(p, k)
    state = objective.design_state(p)
    steps = []
    prev_gain = math.inf
    for _ in range(k):
        candidates = [i for i in p.active if i not in state.design]
        gains = _gains(state, candidates, threads)
        pos = int(np.argmax(gains))  # first maximum, so ties pick the lowest index
        best, gain = candidates[pos], gains[pos]
        _step_checks(gain, prev_gain)
        prev_gain = gain
        state = objective.extend(state, best)
        steps.append((best, gain, state.phi))
    return _finish("greedy", p, state.design, steps, k, t0)


def lazy_greedy(p: InverseProblem, k: int, threads: int = 1) -> SelectionReport:
    """Greedy with stale upper bounds; selections identical to greedy.

    Heap entries carry the design size at which the bound was computed.
    An entry popped with a stale bound is re-evaluated and pushed back; a
    fresh entry at the top of the heap is the true argmax because every
    other bound only overestimates, and index order breaks exact ties the
    same way plain greedy does.
    """
    t0 = time.perf_counter()
    k = _check_budget(p, k)
    state = objective.design_state(p)
    candidates = list(p.active)
    heap = [
        (-g, v, 0)
        for v, g in zip(candidates, _gains(state, candidates, threads))
    ]
    heapq.heapify(heap)
    steps = []
    prev_gain = math.inf
    for _ in range(k):
        size = len(state.design)
        while True:
            neg_gain, v, version = heapq.heappop(heap)
            if version == size:
                break
            heapq.heappush(heap, (-objective.marginal_gain(state, v), v, size))
        gain = -neg_gain
        _step_checks(gain, prev_gain)
        prev_gain = gain
        state = objective.extend(state, v)
        steps.append((v, gain, state.phi))
    return _finish("lazy_greedy", p, state.design, steps, k, t0)


def exhaustive(p: InverseProblem, k: int, cap: int = EXHAUSTIVE_CAP) -> SelectionReport:
    """Exact optimum over all size-k subsets of the active candidates.

    Strict monotonicity means nothing smaller than size k can win, so only
    size-k subsets are enumerated, in lexicographic order; keeping strict
    improvements makes the reported optimum the lexicographically smallest
    maximizer.
    """
    t0 = time.perf_counter()
    k = _check_budget(p, k)
    total = math.comb(len(p.active), k)
    if total > cap:
        raise CapExceededError(
            f"{total} subsets of size {k} exceed the cap of {cap}"
        )
    best, best_phi = None, -math.inf
    for combo in itertools.combinations(p.active, k):
        val = objective.phi_eig(p, combo)
        if val > best_phi:
            best, best_phi = combo, val
    steps, _ = _ascending_trace(p, best)
    return _finish("exhaustive", p, Design(best), steps, k, t0)


def random_baseline(p: InverseProblem, k: int, seed: int) -> SelectionReport:
    """Uniformly random size-k design, deterministic for a given seed."""
    t0 = time.perf_counter()
    k = _check_budget(p, k)
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(np.asarray(p.active), size=k, replace=False))
    steps, _ = _ascending_trace(p, tuple(int(i) for i in pick))
    return _finish("random", p, Design(pick), steps, k, t0, seed=int(seed))


def certify_bound(
    greedy_report: SelectionReport, exhaustive_report: SelectionReport
) -> SelectionReport:
    """Attach the greedy optimality certificate from an exhaustive run.

    Both reports must describe the same problem (matching content hash)
    and the same budget.  The ratio phi_greedy / phi_opt must clear
    1 - 1/e up to a tiny slack; anything below would falsify the
    submodular guarantee and raises.
    """
    if greedy_report.problem_hash != exhaustive_report.problem_hash:
        raise ValueError("reports describe different problems (hash mismatch)")
    if greedy_report.k != exhaustive_report.k:
        raise ValueError(
            f"budget mismatch: {greedy_report.k} vs {exhaustive_report.k}"
        )
    opt = exhaustive_report.phi_final
    val = greedy_report.phi_final
    ratio = 1.0 if val == opt else val / opt
    if ratio < GUARANTEE_FLOOR - CERTIFICATE_SLACK:
        raise BoundViolationError(
            f"greedy ratio {ratio!r} fell below 1 - 1/e = {GUARANTEE_FLOOR!r}"
        )
    cert = Certificate(opt_phi=opt, ratio=ratio)
    return replace(greedy_report, bound_certificate=cert)


def _ascending_trace(p: InverseProblem, chosen):
    """Per-step trace of a fixed design, added in ascending index order."""
    steps = []
    prev = 0.0
    idx = tuple(sorted(int(i) for i in chosen))
    for t in range(len(idx)):
        val = objective.phi_eig(p, idx[: t + 1])
        steps.append((idx[t], val - prev, val))
        prev = val
    return steps, prev


def _finish(method, p, design, steps, k, t0, seed=None) -> SelectionReport:
    phi_final = objective.phi_eig(p, design)
    return SelectionReport(
        method=method,
        chosen=design,
        per_step=tuple(steps),
        phi_final=phi_final,
        eig_final=0.5 * phi_final,
        k=k,
        problem_hash=p.content_hash(),
        seed=seed,
        wall_time=time.perf_counter() - t0,
    )
