"""Degradation-aware day-ahead dispatch of a battery across energy,
frequency regulation and spinning reserve markets."""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np
from scipy import sparse

from . import degradation as deg
from .errors import DomainError, InfeasibleParams, ObjectiveMismatch
from .market_data import HOURS, MarketDay
from .milp import MilpProgram, branch_and_bound, solve_lp

DT = 1.0  # hours per market interval

# per-hour continuous variables, in layout order
HOURLY_VARS = ("ch", "dch", "reg", "res", "e", "de", "v")


@dataclasses.dataclass(frozen=True)
class BatteryParams:
    """Ratings, efficiencies and market constants of the storage asset.

    Power in MW, energy in MWh, ``r_self`` is the fraction of stored energy
    lost per hour, ``e_reg`` is MWh moved per MW of regulation per hour,
    ``k_fix`` is $/MW/day, ``k_var`` is $/MWh and ``cost_bat_unit`` is the
    price of one full battery replacement in $.
    """

    P_r: float = 10.0
    E_r: float = 20.0
    E_min: float = 2.0
    E_max: float = 18.0
    eff_ch: float = 0.94
    eff_dch: float = 0.94
    r_self: float = 0.01
    t_res: float = 1.0
    t_reg: float = 0.25
    prob_res: float = 0.05
    e_reg: float = 0.1
    score_perf: float = 0.9
    r_mileage: float = 2.8
    k_fix: float = 10.0
    k_var: float = 0.5
    cost_bat_unit: float = 4_150_000.0 * 4 / 11

    def __post_init__(self):
        checks = [
            (self.P_r >= 0, "P_r must be non-negative"),
            (self.E_r > 0, "E_r must be positive"),
            (0 < self.eff_ch <= 1, "eff_ch must lie in (0, 1]"),
            (0 < self.eff_dch <= 1, "eff_dch must lie in (0, 1]"),
            (0 <= self.r_self < 1, "r_self must lie in [0, 1)"),
            (0 <= self.E_min < self.E_max <= self.E_r, "need 0 <= E_min < E_max <= E_r"),
            (0 <= self.prob_res <= 1, "prob_res must lie in [0, 1]"),
            (0 <= self.score_perf <= 1, "score_perf must lie in [0, 1]"),
            (self.t_res > 0 and self.t_reg > 0, "t_res and t_reg must be positive"),
            (self.e_reg >= 0, "e_reg must be non-negative"),
            (self.r_mileage >= 0, "r_mileage must be non-negative"),
            (self.k_fix >= 0 and self.k_var >= 0, "O&M unit costs must be non-negative"),
            (self.cost_bat_unit >= 0, "cost_bat_unit must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise DomainError(msg)

    def replace(self, **changes) -> "BatteryParams":
        return dataclasses.replace(self, **changes)


CASE_STUDY = BatteryParams()


@dataclasses.dataclass(frozen=True, eq=False)
class DispatchSolution:
    cap_ch: np.ndarray
    cap_dch: np.ndarray
    cap_reg: np.ndarray
    cap_res: np.ndarray
    mode_b: np.ndarray
    soc: np.ndarray  # e_0 .. e_24
    delta_e: np.ndarray
    objective: float
    abs_step: np.ndarray | None = None  # |e_t - e_{t-1}| as priced in the objective
    nodes: int = 0


@dataclasses.dataclass(frozen=True)
class DailyResult:
    income_energy: float
    income_reg: float
    income_res: float
    cost_op_fix: float
    cost_op_var: float
    cap_loss: float
    cost_loss: float
    gross_income: float
    half_cycles: deg.HalfCycleList

    @property
    def cost_op(self) -> float:
        return self.cost_op_fix + self.cost_op_var

    @property
    def objective(self) -> float:
        return self.gross_income - self.cost_op - self.cost_loss

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        out["half_cycles"] = list(self.half_cycles.cycles)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "DailyResult":
        data = dict(data)
        data["half_cycles"] = deg.HalfCycleList(tuple(data["half_cycles"]))
        return cls(**data)


ZERO_RESULT = DailyResult(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, deg.HalfCycleList())


# ----------------------------------------------------------------------------
# Program construction


def _layout(n: int = HOURS) -> dict:
    lay = {name: np.arange(i * n, (i + 1) * n) for i, name in enumerate(HOURLY_VARS)}
    lay["e0"] = len(HOURLY_VARS) * n
    lay["b"] = np.arange(len(HOURLY_VARS) * n + 1, len(HOURLY_VARS) * n + 1 + n)
    lay["n_vars"] = len(HOURLY_VARS) * n + 1 + n
    return lay


def degradation_unit_cost(b: BatteryParams, d: deg.DegradationParams) -> float:
    """$ per MWh of state-of-charge movement under the linear surrogate."""
    return b.cost_bat_unit / (2.0 * b.E_r * d.N_100)


def build_daily_program(day: MarketDay, b: BatteryParams, d: deg.DegradationParams) -> MilpProgram:
    """Assemble the single-day profit-maximization program.

    Per hour: seven continuous variables (charge, discharge, regulation and
    reserve bids, end-of-hour energy, net energy change, absolute energy
    step) and one mode binary; ``e0`` is the start-of-day energy. Twelve rows
    per hour plus the two start/end energy rows.
    """
    if d.alpha_cycle != 1:
        raise DomainError("the dispatch program needs alpha_cycle == 1 (linear degradation)")
    # Idling at E_min must be able to make up self-discharge.
    if b.r_self * b.E_min > b.P_r * b.eff_ch * DT + 1e-12:
        raise InfeasibleParams("charging power cannot compensate self-discharge at E_min")

    n = len(day.price_energy)
    lay = _layout(n)
    nv = lay["n_vars"]
    ch, dch, reg, res = lay["ch"], lay["dch"], lay["reg"], lay["res"]
    e, de, v, e0, bb = lay["e"], lay["de"], lay["v"], lay["e0"], lay["b"]

    pe = day.price_energy
    c = np.zeros(nv)
    c[ch] = -pe * DT - b.k_var * DT
    c[dch] = pe * DT - b.k_var * DT
    c[reg] = b.score_perf * (day.price_reg_cap + day.price_reg_perf * b.r_mileage) - 2 * b.k_var * b.e_reg * DT
    c[res] = day.price_res + pe * b.prob_res - b.k_var * b.prob_res * DT
    c[v] = -degradation_unit_cost(b, d)
    constant = -b.k_fix * b.P_r

    ub_rows, ub_rhs = [], []
    eq_rows, eq_rhs = [], []
    cut_rows = []

    reg_loss = b.e_reg * (1.0 / b.eff_dch - b.eff_ch) * DT
    for t in range(n):
        prev = e0 if t == 0 else e[t - 1]
        ub_rows += [
            {ch[t]: 1.0, bb[t]: -b.P_r},  # charging only when b_t = 1
            {dch[t]: 1.0, bb[t]: b.P_r},  # discharging only when b_t = 0
            {reg[t]: 1.0},
            {res[t]: 1.0},
            {dch[t]: 1.0, reg[t]: 1.0, res[t]: 1.0},
            {ch[t]: 1.0, reg[t]: 1.0},
            {dch[t]: DT / b.eff_dch, res[t]: b.t_res / b.eff_dch, reg[t]: b.t_reg / b.eff_dch, e[t]: -1.0},
            {e[t]: 1.0, ch[t]: DT * b.eff_ch, reg[t]: b.t_reg * b.eff_ch},
            {e[t]: 1.0, prev: -1.0, v[t]: -1.0},
            {e[t]: -1.0, prev: 1.0, v[t]: -1.0},
        ]
        ub_rhs += [0.0, b.P_r, b.P_r, b.P_r, b.P_r, b.P_r, 0.0, b.E_max, 0.0, 0.0]
        eq_rows += [
            {e[t]: 1.0, prev: -(1.0 - b.r_self), de[t]: -1.0},
            {
                de[t]: 1.0,
                ch[t]: -b.eff_ch * DT,
                dch[t]: DT / b.eff_dch,
                res[t]: b.prob_res * DT / b.eff_dch,
                reg[t]: reg_loss,
            },
        ]
        eq_rhs += [0.0, 0.0]
        # Wear-step cuts, valid for every 0/1 mode pattern: the relaxation
        # cannot blend charge and discharge in one hour to dodge wear cost.
        cut_rows += [
            {dch[t]: DT / b.eff_dch, v[t]: -1.0},
            {
                ch[t]: b.eff_ch * DT,
                dch[t]: DT / b.eff_dch,
                res[t]: -b.prob_res * DT / b.eff_dch,
                reg[t]: -max(reg_loss, 0.0),
                prev: -b.r_self,
                v[t]: -1.0,
            },
        ]
    lay["cuts"] = (_to_csr(cut_rows, nv), np.zeros(len(cut_rows)))
    eq_rows += [{e0: 1.0}, {e[n - 1]: 1.0}]
    eq_rhs += [b.E_min, b.E_min]

    lb = np.zeros(nv)
    ub = np.zeros(nv)
    for idx in (ch, dch, reg, res):
        ub[idx] = b.P_r
    lb[e], ub[e] = b.E_min, b.E_max
    lb[e0], ub[e0] = b.E_min, b.E_max
    lb[de], ub[de] = -np.inf, np.inf
    ub[v] = np.inf
    ub[bb] = 1.0

    names = [f"{name}[{t + 1}]" for name in HOURLY_VARS for t in range(n)] + ["e[0]"]
    names += [f"b[{t + 1}]" for t in range(n)]
    return MilpProgram(
        c=c,
        A_ub=_to_csr(ub_rows, nv),
        b_ub=np.array(ub_rhs),
        A_eq=_to_csr(eq_rows, nv),
        b_eq=np.array(eq_rhs),
        lb=lb,
        ub=ub,
        binary=bb.copy(),
        constant=constant,
        names=names,
        layout=lay,
    )


def _to_csr(rows, n_cols) -> sparse.csr_matrix:
    data, indices, indptr = [], [], [0]
    for r in rows:
        for j in sorted(r):
            indices.append(j)
            data.append(r[j])
        indptr.append(len(indices))
    return sparse.csr_matrix((data, indices, indptr), shape=(len(rows), n_cols))


# ----------------------------------------------------------------------------
# Solving


def _mode_heuristic(lay):
    ch, dch = lay["ch"], lay["dch"]

    def assign(x):
        return (x[ch] >= x[dch]).astype(float)

    return assign


def solve_daily(program: MilpProgram, *, gap_tol: float = 1e-9) -> DispatchSolution:
    """Solve the program to proven optimality and return the hourly schedule.

    After branch and bound the winning mode pattern is re-solved with the
    forbidden direction's bound set to zero, so charge and discharge are
    exactly complementary in the returned schedule.
    """
    lay = program.layout
    if "cuts" in lay:
        A_cut, b_cut = lay["cuts"]
        program = dataclasses.replace(
            program,
            A_ub=sparse.vstack([program.A_ub, A_cut], format="csr"),
            b_ub=np.concatenate([program.b_ub, b_cut]),
        )
    result = branch_and_bound(program, gap_tol=gap_tol, heuristic=_mode_heuristic(lay))
    mode = np.round(result.x[lay["b"]])

    lb, ub = program.lb.copy(), program.ub.copy()
    lb[lay["b"]] = ub[lay["b"]] = mode
    ub[lay["ch"][mode == 0]] = 0.0
    ub[lay["dch"][mode == 1]] = 0.0
    x, value = result.x, result.objective
    polished = solve_lp(program, lb, ub)
    if polished is not None and polished[1] >= value - 1e-9 * max(1.0, abs(value)):
        x, value = polished
    x = x.copy()
    x[lay["ch"][mode == 0]] = 0.0
    x[lay["dch"][mode == 1]] = 0.0

    soc = np.concatenate([[x[lay["e0"]]], x[lay["e"]]])
    return DispatchSolution(
        cap_ch=x[lay["ch"]],
        cap_dch=x[lay["dch"]],
        cap_reg=x[lay["reg"]],
        cap_res=x[lay["res"]],
        mode_b=mode.astype(int),
        soc=soc,
        delta_e=x[lay["de"]],
        objective=value,
        abs_step=x[lay["v"]],
        nodes=result.nodes,
    )


# ----------------------------------------------------------------------------
# Evaluation


def income_terms(sol: DispatchSolution, day: MarketDay, b: BatteryParams) -> dict[str, float]:
    """Market incomes and O&M costs recomputed from the payment formulas."""
    pe = day.price_energy
    income_energy = float(np.sum(pe * (sol.cap_dch - sol.cap_ch) * DT))
    reg_cap = float(np.sum(day.price_reg_cap * sol.cap_reg * b.score_perf))
    reg_perf = float(np.sum(day.price_reg_perf * sol.cap_reg * b.r_mileage * b.score_perf))
    income_res = float(np.sum(day.price_res * sol.cap_res + pe * sol.cap_res * b.prob_res))
    cost_op_fix = b.k_fix * b.P_r
    cost_op_var = float(
        np.sum(
            b.k_var
            * (sol.cap_dch + sol.cap_ch + b.prob_res * sol.cap_res + 2 * b.e_reg * sol.cap_reg)
            * DT
        )
    )
    return {
        "income_energy": income_energy,
        "income_reg": reg_cap + reg_perf,
        "income_res": income_res,
        "cost_op_fix": cost_op_fix,
        "cost_op_var": cost_op_var,
    }


def evaluate_solution(
    sol: DispatchSolution,
    day: MarketDay,
    b: BatteryParams,
    d: deg.DegradationParams,
    *,
    rel_tol: float = 1e-6,
) -> DailyResult:
    """Income, O&M and degradation of a schedule, recomputed from scratch.

    Raises ``ObjectiveMismatch`` when the recomputed objective disagrees with
    the solver's value.
    """
    terms = income_terms(sol, day, b)
    cycles = deg.extract_half_cycles(sol.soc, b.E_r)
    cap_loss = deg.capacity_loss(cycles, d)
    result = DailyResult(
        **terms,
        cap_loss=cap_loss,
        cost_loss=b.cost_bat_unit * cap_loss,
        gross_income=terms["income_energy"] + terms["income_reg"] + terms["income_res"],
        half_cycles=cycles,
    )
    if not math.isfinite(sol.objective):
        return result
    if abs(result.objective - sol.objective) > rel_tol * (1.0 + abs(sol.objective)):
        raise ObjectiveMismatch(
            f"recomputed objective {result.objective!r} != solver objective {sol.objective!r}"
        )
    return result


def energy_flows(sol: DispatchSolution, b: BatteryParams) -> tuple[float, float]:
    """(MWh bought for charging, MWh delivered by discharge and reserve calls)."""
    bought = float(np.sum(sol.cap_ch) * DT)
    delivered = float(np.sum(sol.cap_dch + b.prob_res * sol.cap_res) * DT)
    return bought, delivered


def simulate_day(day: MarketDay, b: BatteryParams, d: deg.DegradationParams):
    """Build, solve and evaluate one day. Returns ``(solution, result)``."""
    sol = solve_daily(build_daily_program(day, b, d))
    return sol, evaluate_solution(sol, day, b, d)
