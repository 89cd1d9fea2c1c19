"""Centralized comparison methods.

``ggv_select`` is a reconstruction of two-stage greedy grid voting,
``greedy_raster_select`` the classic raster-order greedy, and
``exhaustive_select`` / ``hillclimb_select`` give the exact optimum on
tiny instances and a reproducible stand-in for a hand-tuned optimum.

All selections carry plan positions within each PlanSet.
"""
from __future__ import annotations

import itertools
import math
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .coordination import aggregate_counts, sum_sq_counts
from .errors import BudgetExceededError
from .evaluation import Selection
from .plangen import PlanSet
from .scenario import Scenario

DEFAULT_BUDGET = 10 ** 7


def _target_counts(scenario: Scenario, plan_sets: Sequence[PlanSet]) -> tuple[np.ndarray, int]:
    s = plan_sets[0].plans[0].samples if plan_sets else scenario.samples
    return scenario.target.values.astype(np.int64) * s * s, s


def _dense_plans(ps: PlanSet, n_cells: int) -> np.ndarray:
    out = np.zeros((len(ps), n_cells), dtype=np.int64)
    for k, plan in enumerate(ps.plans):
        out[k, plan.cells] = plan.counts
    return out


def _row_sums(terms: np.ndarray, indptr: np.ndarray) -> np.ndarray:
    out = np.zeros(len(indptr) - 1, dtype=np.int64)
    nonempty = np.diff(indptr) > 0
    if nonempty.any():
        out[nonempty] = np.add.reduceat(terms, indptr[:-1][nonempty])
    return out


def ggv_select(scenario: Scenario, plan_sets: Sequence[PlanSet], privacy_aware: bool = False) -> Selection:
    """Greedy grid voting.

    Cells vote with preference ``1 - min(G, 1)``; private cells vote 0 when
    ``privacy_aware``. Each round commits the highest-scoring plan of any
    unassigned camera (ties: lowest camera, then lowest plan) and
    rescores.
    """
    n = scenario.grid.n_cells
    _, s = _target_counts(scenario, plan_sets)
    unit = s * s
    eligible = ~scenario.grid.obstacles
    if privacy_aware:
        eligible = eligible & ~scenario.grid.private_mask
    G = np.zeros(n, dtype=np.int64)
    choices: list[Optional[int]] = [None] * len(plan_sets)
    csrs = [ps.csr for ps in plan_sets]
    while any(c is None for c in choices):
        pref = np.where(eligible, np.maximum(unit - G, 0), 0)
        best = None
        for u, (indptr, indices, values) in enumerate(csrs):
            if choices[u] is not None:
                continue
            scores = _row_sums(values * pref[indices], indptr)
            k = int(np.argmax(scores))
            if best is None or scores[k] > best[0]:
                best = (int(scores[k]), u, k)
        _, u, k = best
        choices[u] = k
        indptr, indices, values = csrs[u]
        G[indices[indptr[k]:indptr[k + 1]]] += values[indptr[k]:indptr[k + 1]]
    return Selection(tuple(choices), "ggv-private" if privacy_aware else "ggv")


def raster_order(scenario: Scenario) -> list[int]:
    """Camera positions sorted top-left to bottom-right (descending y, ascending x)."""
    cams = scenario.cameras
    return sorted(range(len(cams)), key=lambda u: (-cams[u].location[1], cams[u].location[0], u))


def greedy_raster_select(scenario: Scenario, plan_sets: Sequence[PlanSet]) -> Selection:
    T, s = _target_counts(scenario, plan_sets)
    G = np.zeros(scenario.grid.n_cells, dtype=np.int64)
    choices = [0] * len(plan_sets)
    for u in raster_order(scenario):
        indptr, indices, values = plan_sets[u].csr
        need = np.maximum(T - G, 0)
        gains = _row_sums(np.minimum(values, need[indices]), indptr)
        k = int(np.argmax(gains))
        choices[u] = k
        G[indices[indptr[k]:indptr[k + 1]]] += values[indptr[k]:indptr[k + 1]]
    return Selection(tuple(choices), "greedy")


def exhaustive_select(scenario: Scenario, plan_sets: Sequence[PlanSet],
                      budget: int = DEFAULT_BUDGET) -> Selection:
    """Exact minimizer of the squared error over every plan combination.

    Ties go to the lexicographically smallest choice vector.
    """
    combos = math.prod(len(ps) for ps in plan_sets)
    if combos > budget:
        raise BudgetExceededError(combos, budget)
    T, _ = _target_counts(scenario, plan_sets)
    n = scenario.grid.n_cells
    dense = [_dense_plans(ps, n) for ps in plan_sets]
    last = dense[-1]
    best = None
    heads = itertools.product(*(range(len(ps)) for ps in plan_sets[:-1]))
    for head in heads:
        resid = -T.copy()
        for u, k in enumerate(head):
            resid += dense[u][k]
        errs = ((resid[None, :] + last) ** 2).sum(axis=1)
        k = int(np.argmin(errs))
        cand = (int(errs[k]), head + (k,))
        if best is None or cand[0] < best[0]:
            best = cand
    return Selection(best[1], "exhaustive")


def hillclimb_select(scenario: Scenario, plan_sets: Sequence[PlanSet], restarts: int = 20,
                     seed: int = 0, return_trace: bool = False):
    """Steepest single-camera descent from random starts, best of ``restarts``."""
    T, _ = _target_counts(scenario, plan_sets)
    n = scenario.grid.n_cells
    rng = np.random.default_rng(seed)
    best = None
    traces = []
    for _ in range(restarts):
        choices = [int(rng.integers(len(ps))) for ps in plan_sets]
        G = aggregate_counts(plan_sets, choices, n)
        cost = sum_sq_counts(G, T)
        trace = [cost]
        while True:
            resid = G - T
            move = None
            for u, ps in enumerate(plan_sets):
                indptr, indices, values = ps.csr
                k_old = choices[u]
                oi, ov = indices[indptr[k_old]:indptr[k_old + 1]], values[indptr[k_old]:indptr[k_old + 1]]
                r0 = resid[oi]
                resid[oi] = r0 - ov
                without = cost + int(np.dot(r0 - ov, r0 - ov) - np.dot(r0, r0))
                totals = without + _kernels.plan_deltas(resid, indptr, indices, values)
                resid[oi] = r0
                k = int(np.argmin(totals))
                if totals[k] < cost and (move is None or totals[k] < move[0]):
                    move = (int(totals[k]), u, k)
            if move is None:
                break
            cost, u, k = move
            indptr, indices, values = plan_sets[u].csr
            k_old = choices[u]
            G[indices[indptr[k_old]:indptr[k_old + 1]]] -= values[indptr[k_old]:indptr[k_old + 1]]
            G[indices[indptr[k]:indptr[k + 1]]] += values[indptr[k]:indptr[k + 1]]
            choices[u] = k
            trace.append(cost)
        traces.append(trace)
        if best is None or cost < best[0]:
            best = (cost, tuple(choices))
    sel = Selection(best[1], "hillclimb")
    return (sel, traces) if return_trace else sel
