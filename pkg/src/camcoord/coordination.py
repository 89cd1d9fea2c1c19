"""Tree-structured collective learning over camera plan sets.

Agents sit on a balanced tree. Each iteration runs a bottom-up pass, in
which every agent picks its plan against the previous global aggregate
corrected by its own subtree's fresh choices, and a top-down pass that
broadcasts the new aggregate together with each parent's decision to
accept or roll back its children's changes.

All vectors are kept in integer sample counts (coverage ratio times s^2),
so aggregates and squared errors are exact.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, InvariantViolation
from .plangen import PlanSet

INIT_MODES = ("greedy", "first", "random")
INDEX_BYTES = 4
VALUE_BYTES = 8


def rmse_cost(G, T) -> float:
    """Root mean square error between an aggregate and the target."""
    G = np.asarray(G, dtype=float)
    T = np.asarray(getattr(T, "values", T), dtype=float)
    if G.shape != T.shape:
        raise DomainError(f"length mismatch: {G.shape} vs {T.shape}")
    if G.size == 0:
        return 0.0
    return math.sqrt(float(np.sum((G - T) ** 2)) / G.size)


def sum_sq_counts(G_counts: np.ndarray, T_counts: np.ndarray) -> int:
    d = G_counts - T_counts
    return int(np.dot(d, d))


def rmse_from_sum_sq(sum_sq: int, n_cells: int, samples: int) -> float:
    return math.sqrt(sum_sq / float(samples ** 4) / n_cells)


@dataclass
class TreeTopology:
    """Balanced c-ary tree in heap layout; node i hosts agent ``permutation[i]``."""

    arity: int
    permutation: np.ndarray
    seed: Optional[int] = None

    @property
    def size(self) -> int:
        return len(self.permutation)

    def parent(self, node: int) -> Optional[int]:
        return None if node == 0 else (node - 1) // self.arity

    def children(self, node: int) -> list[int]:
        first = self.arity * node + 1
        return list(range(first, min(first + self.arity, self.size)))

    def depth(self) -> int:
        d, node = 1, self.size - 1
        while node > 0:
            node = (node - 1) // self.arity
            d += 1
        return d

    def levels(self) -> list[list[int]]:
        out: list[list[int]] = []
        frontier = [0] if self.size else []
        while frontier:
            out.append(frontier)
            frontier = [c for n in frontier for c in self.children(n)]
        return out

    def agent_at(self, node: int) -> int:
        return int(self.permutation[node])


def build_tree(agent_count: int, arity: int = 2, seed: Optional[int] = None) -> TreeTopology:
    if agent_count < 1 or arity < 1:
        raise DomainError("need at least one agent and arity >= 1")
    perm = np.random.default_rng(seed).permutation(agent_count)
    return TreeTopology(arity, perm, seed)


@dataclass
class IterationRecord:
    iteration: int
    sum_sq: int
    rmse: float
    messages: int
    bytes: int


@dataclass
class RunResult:
    traces: list[list[IterationRecord]]
    best_repetition: int
    selections: list[int]
    plan_indices: list[int]
    aggregate_counts: np.ndarray
    samples: int
    duration: float
    topologies: list[TreeTopology] = field(default_factory=list)

    @property
    def aggregate(self) -> np.ndarray:
        return self.aggregate_counts / float(self.samples ** 2)

    @property
    def final_rmse(self) -> float:
        return self.traces[self.best_repetition][-1].rmse

    @property
    def final_sum_sq(self) -> int:
        return self.traces[self.best_repetition][-1].sum_sq

    def trace_rows(self) -> list[tuple]:
        return [(r, rec.iteration, rec.rmse, rec.sum_sq, rec.messages, rec.bytes)
                for r, trace in enumerate(self.traces) for rec in trace]


def _coalesce(idx: np.ndarray, val: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(idx) == 0:
        return idx, val
    uniq, inv = np.unique(idx, return_inverse=True)
    summed = np.bincount(inv, weights=val, minlength=len(uniq)).astype(np.int64)
    keep = summed != 0
    return uniq[keep], summed[keep]


def _plan_vec(ps: PlanSet, k: int) -> tuple[np.ndarray, np.ndarray]:
    indptr, indices, values = ps.csr
    return indices[indptr[k]:indptr[k + 1]], values[indptr[k]:indptr[k + 1]]


def aggregate_counts(plan_sets: Sequence[PlanSet], selections: Sequence[int], n_cells: int) -> np.ndarray:
    G = np.zeros(n_cells, dtype=np.int64)
    for ps, k in zip(plan_sets, selections):
        idx, val = _plan_vec(ps, k)
        np.add.at(G, idx, val)
    return G


def _samples_of(plan_sets: Sequence[PlanSet]) -> int:
    samples = {p.samples for ps in plan_sets for p in ps.plans}
    if len(samples) > 1:
        raise DomainError(f"plan sets mix sample densities {sorted(samples)}")
    return samples.pop() if samples else 1


def run_iteration(plan_sets: Sequence[PlanSet], topology: TreeTopology,
                  selections: Sequence[int], G_prev: np.ndarray,
                  T_counts: np.ndarray) -> tuple[list[int], np.ndarray, int, int]:
    """One bottom-up plus top-down pass.

    ``G_prev`` and ``T_counts`` are dense integer sample counts and
    ``G_prev`` must equal the aggregate of ``selections``. Returns the new
    selections, the new aggregate, and the message and byte counts.

    An agent chooses jointly its plan and which children's changes to
    accept; keeping its own previous plan with every child accepted is the
    incumbent, and only a strictly better option replaces it (lowest plan
    index first). Rolled-back children revert their whole subtree in the
    top-down pass. Since the root may roll back everything, the global
    squared error never increases.
    """
    U = topology.size
    resid = (G_prev - T_counts).astype(np.int64)
    base0 = int(np.dot(resid, resid))
    deltas: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    candidate = list(selections)
    accepted = [True] * U          # per node: did the parent take this subtree's change
    messages = 0
    nbytes = 0
    root_total = base0

    for node in range(U - 1, -1, -1):
        agent = topology.agent_at(node)
        ps = plan_sets[agent]
        kids = topology.children(node)
        kid_deltas = [deltas.pop(c) for c in kids]
        prev = selections[agent]
        old_idx, old_val = _plan_vec(ps, prev)
        indptr, indices, values = ps.csr

        n_subsets = 1 << len(kids)
        best_total = None
        best = (n_subsets - 1, prev)
        for subset in range(n_subsets - 1, -1, -1):
            parts_i = [old_idx]
            parts_v = [-old_val]
            for j, (di, dv) in enumerate(kid_deltas):
                if subset >> j & 1:
                    parts_i.append(di)
                    parts_v.append(dv)
            idx, val = _coalesce(np.concatenate(parts_i), np.concatenate(parts_v))
            old = resid[idx]
            new = old + val
            base = base0 + int(np.dot(new, new) - np.dot(old, old))
            resid[idx] = new
            totals = base + _kernels.plan_deltas(resid, indptr, indices, values)
            resid[idx] = old
            if best_total is None:
                best_total = int(totals[prev])
            k = int(np.argmin(totals))
            if totals[k] < best_total:
                best_total = int(totals[k])
                best = (subset, k)

        subset, k = best
        candidate[agent] = k
        new_idx, new_val = _plan_vec(ps, k)
        parts_i = [new_idx, old_idx]
        parts_v = [new_val, -old_val]
        for j, (c, (di, dv)) in enumerate(zip(kids, kid_deltas)):
            accepted[c] = bool(subset >> j & 1)
            if accepted[c]:
                parts_i.append(di)
                parts_v.append(dv)
        deltas[node] = _coalesce(np.concatenate(parts_i), np.concatenate(parts_v))
        if node != 0:
            messages += 1
            nbytes += len(deltas[node][0]) * (INDEX_BYTES + VALUE_BYTES)
        else:
            root_total = best_total

    d_idx, d_val = deltas.pop(0)
    G_new = G_prev.copy()
    G_new[d_idx] += d_val

    approved = [False] * U
    approved[0] = True
    final = list(selections)
    g_nnz = int(np.count_nonzero(G_new))
    for node in range(U):
        if approved[node]:
            final[topology.agent_at(node)] = candidate[topology.agent_at(node)]
        for c in topology.children(node):
            approved[c] = approved[node] and accepted[c]
            messages += 1
            nbytes += g_nnz * (INDEX_BYTES + VALUE_BYTES) + 1

    check = aggregate_counts(plan_sets, final, len(G_prev))
    if not np.array_equal(check, G_new):
        raise InvariantViolation("root aggregate differs from the recomputed sum of selected plans")
    new_ss = sum_sq_counts(G_new, T_counts)
    if new_ss != root_total:
        raise InvariantViolation(f"root cost {root_total} differs from recomputed {new_ss}")
    if new_ss > base0:
        raise InvariantViolation(f"cost increased from {base0} to {new_ss}")
    return final, G_new, messages, nbytes


def greedy_initial(plan_sets: Sequence[PlanSet], topology: TreeTopology,
                   T_counts: np.ndarray) -> list[int]:
    """Opening bottom-up pass with no global feedback yet.

    Each agent picks the plan that best completes its own subtree's partial
    aggregate against the target (ties: lowest index).
    """
    resid = -T_counts.astype(np.int64)
    base0 = int(np.dot(resid, resid))
    subtree: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    sel = [0] * topology.size
    for node in range(topology.size - 1, -1, -1):
        agent = topology.agent_at(node)
        ps = plan_sets[agent]
        parts = [subtree.pop(c) for c in topology.children(node)]
        if parts:
            idx, val = _coalesce(np.concatenate([p[0] for p in parts]),
                                 np.concatenate([p[1] for p in parts]))
        else:
            idx = val = np.zeros(0, dtype=np.int64)
        old = resid[idx]
        resid[idx] = old + val
        indptr, indices, values = ps.csr
        k = int(np.argmin(_kernels.plan_deltas(resid, indptr, indices, values)))
        resid[idx] = old
        sel[agent] = k
        pi, pv = _plan_vec(ps, k)
        subtree[node] = _coalesce(np.concatenate([idx, pi]), np.concatenate([val, pv]))
    return sel


def run(plan_sets: Sequence[PlanSet], target, repetitions: int = 40, iterations: int = 40,
        seed: int = 0, arity: int = 2, init: str = "first",
        private_mask: Optional[np.ndarray] = None) -> RunResult:
    """Best-of-``repetitions`` collective learning.

    Repetition r shuffles agents onto the tree with seed ``seed + r``.
    ``init`` is ``"first"`` (plan 0 everywhere), ``"greedy"`` (an opening
    bottom-up pass on partial subtree aggregates) or ``"random"``. When
    ``private_mask`` is given, the aggregate is checked to put zero mass on
    those cells after every iteration.
    """
    if repetitions < 1 or iterations < 1:
        raise DomainError("repetitions and iterations must be >= 1")
    if init not in INIT_MODES:
        raise DomainError(f"unknown init {init!r}")
    plan_sets = list(plan_sets)
    if not plan_sets:
        raise DomainError("no agents")
    for ps in plan_sets:
        if len(ps) == 0:
            raise DomainError(f"camera {ps.camera_id} has an empty plan set")
    samples = _samples_of(plan_sets)
    T = np.asarray(getattr(target, "values", target), dtype=np.int64)
    T_counts = T * samples * samples
    n = len(T)
    U = len(plan_sets)
    start = time.perf_counter()

    traces = []
    topologies = []
    finals: list[tuple[int, list[int], np.ndarray]] = []
    for r in range(repetitions):
        rng = np.random.default_rng(seed + r)
        topo = TreeTopology(arity, rng.permutation(U), seed + r)
        topologies.append(topo)
        if init == "random":
            sel = [int(rng.integers(len(ps))) for ps in plan_sets]
        elif init == "greedy":
            sel = greedy_initial(plan_sets, topo, T_counts)
        else:
            sel = [0] * U
        G = aggregate_counts(plan_sets, sel, n)
        ss = sum_sq_counts(G, T_counts)
        trace = [IterationRecord(0, ss, rmse_from_sum_sq(ss, n, samples), 0, 0)]
        it = 1
        while it <= iterations:
            new_sel, G_new, msgs, nb = run_iteration(plan_sets, topo, sel, G, T_counts)
            ss_new = sum_sq_counts(G_new, T_counts)
            if ss_new > trace[-1].sum_sq:
                raise InvariantViolation("non-monotone cost trace")
            if private_mask is not None and G_new[private_mask].any():
                raise InvariantViolation("aggregate covers private cells")
            rec = IterationRecord(it, ss_new, rmse_from_sum_sq(ss_new, n, samples), msgs, nb)
            trace.append(rec)
            if new_sel == sel:
                # fixed point: every later iteration replays this one
                for j in range(it + 1, iterations + 1):
                    trace.append(IterationRecord(j, rec.sum_sq, rec.rmse, msgs, nb))
                break
            sel, G = new_sel, G_new
            it += 1
        traces.append(trace)
        finals.append((trace[-1].sum_sq, new_sel, G_new))

    best = min(range(repetitions), key=lambda r: (finals[r][0], r))
    _, sel, G = finals[best]
    return RunResult(
        traces=traces,
        best_repetition=best,
        selections=list(sel),
        plan_indices=[plan_sets[u].plans[k].plan_index for u, k in enumerate(sel)],
        aggregate_counts=G,
        samples=samples,
        duration=time.perf_counter() - start,
        topologies=topologies,
    )


def write_trace_csv(result: RunResult, out) -> None:
    out.write("repetition,iteration,rmse,sum_sq_err,messages,bytes\n")
    for r, it, rmse, ss, msgs, nb in result.trace_rows():
        out.write(f"{r},{it},{rmse:.9f},{ss},{msgs},{nb}\n")
