"""Exact single-facility uncapacitated lot-sizing (Wagner-Whitin style DP).

O(T^2) over production-block start periods with prefix sums. A setup is
charged only when the selected block actually ships a positive quantity,
so zero-demand horizons cost nothing. Ties between block starts are
broken toward the earliest period, making plans deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class UlsPlan:
    produce: np.ndarray  # quantity produced per period
    setup: np.ndarray    # binary setup indicators
    cost: float


def solve_uls(demand, setup_cost, holding_cost) -> UlsPlan:
    d = np.asarray(demand, dtype=float)
    sc = np.asarray(setup_cost, dtype=float)
    hc = np.asarray(holding_cost, dtype=float)
    T = d.shape[0]
    if sc.shape[0] != T or hc.shape[0] != T:
        raise ValueError("demand, setup_cost and holding_cost must share a length")
    if np.any(d < 0) or np.any(sc < 0) or np.any(hc < 0):
        raise ValueError("inputs must be nonnegative")

    # Hcum[t] = holding cost of carrying one unit from period 0 up to t;
    # serving d[l] from period k costs d[l] * (Hcum[l] - Hcum[k]).
    Hcum = np.concatenate(([0.0], np.cumsum(hc[:-1])))
    Dcum = np.concatenate(([0.0], np.cumsum(d)))          # Dcum[t] = sum d[:t]
    Gcum = np.concatenate(([0.0], np.cumsum(d * Hcum)))   # Gcum[t] = sum d[l]*Hcum[l], l<t

    INF = float("inf")
    best = np.full(T + 1, INF)
    best[0] = 0.0
    choice = np.zeros(T + 1, dtype=np.int64)
    for t in range(1, T + 1):
        for k in range(1, t + 1):
            block = Dcum[t] - Dcum[k - 1]
            hold = (Gcum[t] - Gcum[k - 1]) - Hcum[k - 1] * block
            cost = best[k - 1] + hold + (sc[k - 1] if block > 0 else 0.0)
            if cost < best[t]:
                best[t] = cost
                choice[t] = k

    produce = np.zeros(T)
    setup = np.zeros(T)
    t = T
    while t > 0:
        k = int(choice[t])
        block = Dcum[t] - Dcum[k - 1]
        if block > 0:
            produce[k - 1] = block
            setup[k - 1] = 1.0
        t = k - 1
    return UlsPlan(produce=produce, setup=setup, cost=float(best[T]))
