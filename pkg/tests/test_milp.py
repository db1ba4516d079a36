import numpy as np
import pytest
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from bess_lifecycle.errors import Infeasible, Unbounded
from bess_lifecycle.milp import MilpProgram, branch_and_bound


def random_program(rng, n_bin=6, n_cont=6, n_rows=8):
    """Binaries gate continuous variables through big-M rows plus random
    capacity rows, so relaxations are usually fractional."""
    n = n_bin + n_cont
    c = np.concatenate([rng.uniform(-3, 1, n_bin), rng.uniform(0, 5, n_cont)])
    rows, rhs = [], []
    for i in range(n_cont):
        r = np.zeros(n)
        r[n_bin + i] = 1.0
        r[i % n_bin] = -4.0
        rows.append(r)
        rhs.append(0.0)
    for _ in range(n_rows):
        r = np.zeros(n)
        r[:] = rng.uniform(0, 2, n) * (rng.random(n) < 0.6)
        rows.append(r)
        rhs.append(rng.uniform(3, 10))
    lb = np.zeros(n)
    ub = np.concatenate([np.ones(n_bin), np.full(n_cont, 4.0)])
    return MilpProgram(
        c=c,
        A_ub=sparse.csr_matrix(np.array(rows)),
        b_ub=np.array(rhs),
        A_eq=sparse.csr_matrix((0, n)),
        b_eq=np.zeros(0),
        lb=lb,
        ub=ub,
        binary=np.arange(n_bin),
        constant=1.5,
    )


def scipy_reference(prog):
    integrality = np.zeros(prog.n_vars)
    integrality[prog.binary] = 1
    res = milp(
        -prog.c,
        constraints=[LinearConstraint(prog.A_ub.toarray(), -np.inf, prog.b_ub)],
        integrality=integrality,
        bounds=Bounds(prog.lb, prog.ub),
        options={"mip_rel_gap": 1e-12},
    )
    assert res.status == 0
    return -res.fun + prog.constant


@pytest.mark.parametrize("seed", range(25))
def test_matches_scipy_milp(seed):
    prog = random_program(np.random.default_rng(seed))
    got = branch_and_bound(prog)
    assert got.objective == pytest.approx(scipy_reference(prog), abs=1e-6)
    assert np.allclose(got.x[prog.binary], np.round(got.x[prog.binary]))
    assert np.all(prog.A_ub @ got.x <= prog.b_ub + 1e-7)
    assert got.bound >= got.objective - 1e-9
    assert got.gap <= 1e-6


def test_deterministic():
    prog = random_program(np.random.default_rng(3))
    a, b = branch_and_bound(prog), branch_and_bound(prog)
    assert np.array_equal(a.x, b.x)
    assert a.nodes == b.nodes


def test_infeasible():
    prog = MilpProgram(
        c=np.array([1.0, 1.0]),
        A_ub=sparse.csr_matrix(np.array([[1.0, 1.0]])),
        b_ub=np.array([-1.0]),
        A_eq=sparse.csr_matrix((0, 2)),
        b_eq=np.zeros(0),
        lb=np.zeros(2),
        ub=np.ones(2),
        binary=np.array([0]),
    )
    with pytest.raises(Infeasible):
        branch_and_bound(prog)


def test_unbounded():
    prog = MilpProgram(
        c=np.array([0.0, 1.0]),
        A_ub=sparse.csr_matrix((0, 2)),
        b_ub=np.zeros(0),
        A_eq=sparse.csr_matrix((0, 2)),
        b_eq=np.zeros(0),
        lb=np.zeros(2),
        ub=np.array([1.0, np.inf]),
        binary=np.array([0]),
    )
    with pytest.raises(Unbounded):
        branch_and_bound(prog)


def test_integrality_gap_needs_branching():
    # relaxation picks x0 = 0.5, y = 1 (value 2.5); the integer optimum is 2
    prog = MilpProgram(
        c=np.array([-1.0, 3.0]),
        A_ub=sparse.csr_matrix(np.array([[-2.0, 1.0], [0.0, 1.0]])),
        b_ub=np.array([0.0, 1.0]),
        A_eq=sparse.csr_matrix((0, 2)),
        b_eq=np.zeros(0),
        lb=np.zeros(2),
        ub=np.array([1.0, 1.0]),
        binary=np.array([0]),
    )
    res = branch_and_bound(prog)
    assert res.objective == pytest.approx(2.0)
    assert res.x[0] == 1.0
