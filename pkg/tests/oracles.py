"""Reference implementations used as test oracles.

Written directly from the model equations in plain Python, sharing no code
with the package under test.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def dtw_sq(a, b):
    """Cheapest cumulative squared-cost warping, textbook recursion."""
    n, m = len(a), len(b)
    inf = float("inf")
    D = [[inf] * (m + 1) for _ in range(n + 1)]
    D[0][0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            D[i][j] = (a[i - 1] - b[j - 1]) ** 2 + min(D[i - 1][j - 1], D[i - 1][j], D[i][j - 1])
    return D[n][m]


def soh(beta, k_T, k_DoD, k_ch, k_dch, b_msoc, alpha, T_ref, msoc_ref, T, DoD, C_ch, C_dch, mSOC, FEC):
    """State of health in percent from the stress-factor fit."""
    expo = k_T * (T - T_ref) / T + k_DoD * DoD + k_ch * C_ch + k_dch * C_dch
    msoc_term = 1 + b_msoc * mSOC * (1 - mSOC / (2 * msoc_ref))
    return 100 - beta * math.exp(expo) * msoc_term * FEC**alpha


def turning_point_depths(e, E_r):
    """Half-cycle depths: swings between successive local extrema."""
    pts = [e[0]]
    for x in e[1:]:
        if x == pts[-1]:
            continue
        if len(pts) >= 2 and (pts[-1] > pts[-2]) == (x > pts[-1]):
            pts[-1] = x  # still moving the same way
        else:
            pts.append(x)
    return [abs(b - a) / E_r for a, b in zip(pts, pts[1:])]


def npv(flows, r):
    return sum(c / (1 + r) ** t for t, c in enumerate(flows))


def irr_two_period(c0, c1, c2):
    """Positive root of c0 (1+r)^2 + c1 (1+r) + c2 = 0 via the quadratic formula."""
    disc = c1 * c1 - 4 * c0 * c2
    roots = [(-c1 + s * math.sqrt(disc)) / (2 * c0) for s in (1, -1)]
    x = max(roots)
    return x - 1


def irr_bisect(flows, lo=-0.99, hi=10.0, iters=200):
    f_lo = npv(flows, lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        f_mid = npv(flows, mid)
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return (lo + hi) / 2


# ----------------------------------------------------------------------------
# Dispatch


def schedule_value(prices, bat, N_100, ch, dch, reg, res, e):
    """Daily profit of a schedule: market income minus O&M and wear.

    ``e`` holds e_0 .. e_n. Wear is priced on the total movement of e.
    """
    pe, cap, perf, pres = prices
    income = 0.0
    for t in range(len(pe)):
        income += pe[t] * (dch[t] - ch[t])
        income += bat["score_perf"] * reg[t] * (cap[t] + perf[t] * bat["r_mileage"])
        income += pres[t] * res[t] + pe[t] * res[t] * bat["prob_res"]
        income -= bat["k_var"] * (ch[t] + dch[t] + bat["prob_res"] * res[t] + 2 * bat["e_reg"] * reg[t])
    income -= bat["k_fix"] * bat["P_r"]
    movement = sum(abs(e[t + 1] - e[t]) for t in range(len(pe)))
    return income - bat["cost_bat_unit"] * movement / (2 * bat["E_r"] * N_100)


def next_energy(bat, e_prev, ch, dch, reg, res):
    de = (
        ch * bat["eff_ch"]
        - (dch + res * bat["prob_res"]) / bat["eff_dch"]
        - (bat["e_reg"] * reg / bat["eff_dch"] - bat["e_reg"] * reg * bat["eff_ch"])
    )
    return (1 - bat["r_self"]) * e_prev + de


def violations(bat, ch, dch, reg, res, e, tol=1e-6):
    """List of violated operating constraints (empty when feasible).

    Tolerances are scaled by the rating of the quantity compared.
    """
    P, out = bat["P_r"], []
    tp, te = tol * max(1.0, P), tol * max(1.0, bat["E_r"])
    n = len(ch)
    if abs(e[0] - bat["E_min"]) > te or abs(e[n] - bat["E_min"]) > te:
        out.append("start/end energy")
    for t in range(n):
        for name, x in (("ch", ch[t]), ("dch", dch[t]), ("reg", reg[t]), ("res", res[t])):
            if x < -tp or x > P + tp:
                out.append(f"{name} bounds at {t}")
        if ch[t] > tp and dch[t] > tp:
            out.append(f"simultaneous charge and discharge at {t}")
        if dch[t] + reg[t] + res[t] > P + tp:
            out.append(f"upward headroom at {t}")
        if ch[t] + reg[t] > P + tp:
            out.append(f"downward headroom at {t}")
        et = e[t + 1]
        if et < bat["E_min"] - te or et > bat["E_max"] + te:
            out.append(f"energy bounds at {t}")
        if (dch[t] + res[t] * bat["t_res"] + reg[t] * bat["t_reg"]) / bat["eff_dch"] > et + te:
            out.append(f"deliverable energy at {t}")
        if et + (ch[t] + reg[t] * bat["t_reg"]) * bat["eff_ch"] > bat["E_max"] + te:
            out.append(f"absorbable energy at {t}")
        if abs(et - next_energy(bat, e[t], ch[t], dch[t], reg[t], res[t])) > te:
            out.append(f"energy balance at {t}")
    for t in range(len(e)):
        if e[t] < bat["E_min"] - te or e[t] > bat["E_max"] + te:
            out.append(f"energy bounds e[{t}]")
    return out


def hour_options(P_r):
    """Bid tuples (ch, dch, reg, res) on the grid {0, P/2, P} that respect
    the power limits and never charge and discharge together."""
    grid = (0.0, P_r / 2, P_r)
    opts = []
    for ch, dch, reg, res in itertools.product(grid, repeat=4):
        if ch > 0 and dch > 0:
            continue
        if dch + reg + res > P_r or ch + reg > P_r:
            continue
        opts.append((ch, dch, reg, res))
    return opts


def brute_force(prices, bat, N_100, tol=1e-9):
    """Best value over every feasible grid schedule (-inf if none)."""
    values = all_grid_values(prices, bat, N_100, tol)
    return float(values.max()) if values.size else -math.inf


def all_grid_values(prices, bat, N_100, tol=1e-9):
    """Values of every feasible grid schedule."""
    n = len(prices[0])
    opts = hour_options(bat["P_r"])
    values = []

    def rec(t, e_hist, chosen):
        if t == n:
            if abs(e_hist[-1] - bat["E_min"]) <= tol:
                cols = list(zip(*chosen))
                if not violations(bat, *cols, e_hist, tol=tol):
                    values.append(schedule_value(prices, bat, N_100, *cols, e_hist))
            return
        for o in opts:
            e_next = next_energy(bat, e_hist[-1], *o)
            if e_next < bat["E_min"] - tol or e_next > bat["E_max"] + tol:
                continue
            chosen.append(o)
            e_hist.append(e_next)
            rec(t + 1, e_hist, chosen)
            chosen.pop()
            e_hist.pop()

    rec(0, [bat["E_min"]], [])
    return np.array(values)


def weighted_sum(values, weights):
    """Cent-exact re-summation using integer cents."""
    total_cents = sum(round(v * 100) * w for v, w in zip(values, weights))
    return total_cents / 100
