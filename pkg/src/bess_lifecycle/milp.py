"""Best-first branch and bound for linear programs with binary variables.

LP relaxations are solved with HiGHS through :func:`scipy.optimize.linprog`.
The search is deterministic: nodes are expanded in order of their LP bound,
ties go to the node created first, the branching variable is the lowest
index fractional binary and the ``x = 1`` child is created before ``x = 0``.
"""

from __future__ import annotations

import dataclasses
import heapq
import itertools
import logging
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import Infeasible, NodeLimit, SolverFailure, Unbounded

log = logging.getLogger(__name__)

LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-9,
    "dual_feasibility_tolerance": 1e-9,
    "presolve": True,
}


@dataclasses.dataclass
class MilpProgram:
    """``maximize c @ x + constant`` subject to linear rows and bounds.

    ``binary`` lists the indices of 0/1 variables; every other variable is
    continuous. ``names`` is informational.
    """

    c: np.ndarray
    A_ub: sparse.csr_matrix
    b_ub: np.ndarray
    A_eq: sparse.csr_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray
    constant: float = 0.0
    names: list[str] = dataclasses.field(default_factory=list)
    layout: dict = dataclasses.field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_binary(self) -> int:
        return int(self.binary.shape[0])

    @property
    def n_continuous(self) -> int:
        return self.n_vars - self.n_binary

    @property
    def n_rows(self) -> int:
        return self.A_ub.shape[0] + self.A_eq.shape[0]

    def value(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.constant


@dataclasses.dataclass
class MilpResult:
    x: np.ndarray
    objective: float
    bound: float
    nodes: int
    lp_solves: int

    @property
    def gap(self) -> float:
        return abs(self.bound - self.objective) / max(1.0, abs(self.objective))


def solve_lp(prog: MilpProgram, lb: np.ndarray, ub: np.ndarray):
    """Solve the relaxation with the given bounds.

    Returns ``(x, value)`` or ``None`` when infeasible.
    """
    res = linprog(
        -prog.c,
        A_ub=prog.A_ub if prog.A_ub.shape[0] else None,
        b_ub=prog.b_ub if prog.A_ub.shape[0] else None,
        A_eq=prog.A_eq if prog.A_eq.shape[0] else None,
        b_eq=prog.b_eq if prog.A_eq.shape[0] else None,
        bounds=np.column_stack([lb, ub]),
        method="highs",
        options=LP_OPTIONS,
    )
    if res.status == 2:
        return None
    if res.status == 3:
        raise Unbounded("LP relaxation is unbounded")
    if res.status != 0:
        raise SolverFailure(f"LP solver failed: {res.message}")
    x = np.asarray(res.x, dtype=float)
    return x, prog.value(x)


def branch_and_bound(
    prog: MilpProgram,
    *,
    int_tol: float = 1e-9,
    gap_tol: float = 1e-9,
    max_nodes: int = 200_000,
    heuristic: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> MilpResult:
    """Maximize ``prog`` exactly over its binary variables.

    ``heuristic`` maps a relaxation solution to a full 0/1 assignment of the
    binaries; the assignment is evaluated by an LP with those binaries fixed
    and only ever supplies incumbents, so it cannot affect optimality.
    """
    binary = prog.binary
    counter = itertools.count()
    best_x: Optional[np.ndarray] = None
    best_val = -np.inf
    lp_solves = 0
    nodes = 0
    tried: set[bytes] = set()

    def try_assignment(assign, lb, ub):
        nonlocal best_x, best_val, lp_solves
        key = np.asarray(assign, dtype=np.int8).tobytes()
        if key in tried:
            return
        tried.add(key)
        if np.any(assign < lb[binary]) or np.any(assign > ub[binary]):
            return
        flb, fub = lb.copy(), ub.copy()
        flb[binary] = assign
        fub[binary] = assign
        lp_solves += 1
        sol = solve_lp(prog, flb, fub)
        if sol is not None and sol[1] > best_val:
            best_x, best_val = sol

    def tolerance():
        return gap_tol * max(1.0, abs(best_val)) if np.isfinite(best_val) else 0.0

    root = solve_lp(prog, prog.lb, prog.ub)
    lp_solves += 1
    if root is None:
        raise Infeasible("program has no feasible point")
    heap = [(-root[1], next(counter), prog.lb.copy(), prog.ub.copy(), root[0])]
    pruned_max = -np.inf

    while heap:
        neg_bound, _, lb, ub, x = heapq.heappop(heap)
        bound = -neg_bound
        if bound <= best_val + tolerance():
            pruned_max = max(pruned_max, bound)
            heap.clear()
            break
        nodes += 1
        if nodes > max_nodes:
            raise NodeLimit(f"branch and bound exceeded {max_nodes} nodes")
        xb = x[binary]
        frac = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb)
        fractional = np.flatnonzero(frac > int_tol)
        if fractional.size == 0:
            snapped = np.round(xb)
            x = x.copy()
            x[binary] = snapped
            if bound > best_val:
                best_x, best_val = x, prog.value(x)
            continue
        if heuristic is not None:
            try_assignment(np.asarray(heuristic(x), dtype=float), lb, ub)
            if bound <= best_val + tolerance():
                pruned_max = max(pruned_max, bound)
                continue
        j = binary[fractional[0]]
        for val in (1.0, 0.0):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = val
            lp_solves += 1
            child = solve_lp(prog, clb, cub)
            if child is None:
                continue
            if child[1] <= best_val + tolerance():
                pruned_max = max(pruned_max, child[1])
                continue
            heapq.heappush(heap, (-child[1], next(counter), clb, cub, child[0]))

    if best_x is None:
        raise Infeasible("no integer-feasible point")
    log.debug("branch and bound: %d nodes, %d LP solves", nodes, lp_solves)
    return MilpResult(
        x=best_x,
        objective=best_val,
        bound=max(best_val, pruned_max),
        nodes=nodes,
        lp_solves=lp_solves,
    )
