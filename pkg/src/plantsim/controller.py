"""Online purchasing and pricing controller.

The controller keeps every material queue inside a deterministic band using
only the current queue levels and the current exogenous states; it needs no
statistics of the supply or demand processes.  Each slot it

* buys material m up to its cap while the queue sits below a threshold
  theta[m] discounted by V times the current unit cost, solving an exact
  bounded knapsack when the budget binds, and
* offers product k at the price maximizing V-weighted margin plus queue
  relief, withholding the product when that score is not strictly positive
  or when any feeder queue is too low to serve worst-case demand.

The parameter V >= 0 trades queue size for profit: larger V tracks the best
achievable profit more closely at the cost of proportionally larger buffers.
With thresholds from compute_theta the queues provably stay inside
[mu_max[m], theta[m] + A_max[m]] on every sample path, and every accepted
slot of demand can be served in full.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from plantsim.model import (
    PlantConfig,
    SlotDecision,
    SlotOutcome,
    SupplyState,
    DemandState,
    material_usage,
    nominal_profit,
    purchase_cost,
)
from plantsim.processes import realize_demand


class InvariantViolation(RuntimeError):
    """A queue left its guaranteed band; this indicates a bug, not bad input."""


class InitOutOfRange(ValueError):
    """Requested initial inventory is outside the band the controller maintains."""


class ThetaTooSmall(ValueError):
    """An override threshold is below the safe value and was not forced."""


@dataclass
class ControllerParams:
    """Tuning of the controller: V, per-material thresholds and mode flags."""

    V: float
    theta: list[float]
    demand_blind: bool = False
    placeholder: bool = False


@dataclass
class ControllerState:
    """Per-run controller state: material queues and the fake-unit ledger.

    Q is what the controller steers on.  In place-holder mode fake[m]
    units of it are book entries rather than physical stock, so the real
    inventory is Q[m] - fake[m].
    """

    Q: list[int]
    fake: list[int]
    slot: int = 0

    def actual_inventory(self) -> list[int]:
        return [q - f for q, f in zip(self.Q, self.fake)]


def compute_theta(cfg: PlantConfig, V: float) -> list[float]:
    """Safe queue thresholds for a given V.

    For each material the threshold covers the best margin any consuming
    product could justify at weight V, the worst-case spend of the other
    materials feeding that product, and two slots of worst-case consumption.
    Materials no product consumes get threshold 0; they are never bought.
    """
    mu_max = cfg.mu_max()
    theta = []
    for m in range(cfg.M):
        best = 0.0
        found = False
        for k in range(cfg.K):
            b = cfg.beta[m][k]
            if b == 0:
                continue
            found = True
            others = sum(
                cfg.beta[i][k] * cfg.A_max[i] for i in range(cfg.M) if i != m
            )
            cand = (
                V * (cfg.max_price(k) - cfg.alpha[k]) / b
                + others / b
                + 2 * mu_max[m]
            )
            best = max(best, cand)
        theta.append(best if found else 0.0)
    return theta


def make_params(
    cfg: PlantConfig,
    V: float,
    theta: list[float] | None = None,
    demand_blind: bool = False,
    placeholder: bool = False,
    allow_unsafe_theta: bool = False,
) -> ControllerParams:
    """Build controller parameters, defaulting theta to the safe thresholds.

    Larger overrides are accepted (the queue band just widens); smaller ones
    raise ThetaTooSmall unless allow_unsafe_theta is set, because they void
    the full-fulfillment guarantee.
    """
    if V <= 0:
        raise ValueError("V must be positive")
    safe = compute_theta(cfg, V)
    if theta is None:
        theta = safe
    elif len(theta) != cfg.M:
        raise ValueError("theta must have one entry per material")
    elif not allow_unsafe_theta:
        for m in range(cfg.M):
            if theta[m] < safe[m] - 1e-12:
                raise ThetaTooSmall(
                    f"theta[{m}] = {theta[m]} is below the safe value {safe[m]}"
                )
    return ControllerParams(
        V=V,
        theta=list(theta),
        demand_blind=demand_blind,
        placeholder=placeholder,
    )


def compute_indicators(Q: list[int], cfg: PlantConfig) -> list[int]:
    """Flag products whose feeder queues cannot cover worst-case demand.

    indicator[k] == 1 when some material m with beta[m][k] > 0 holds fewer
    than mu_max[m] units; such products must not be offered this slot.
    """
    mu_max = cfg.mu_max()
    low = [Q[m] < mu_max[m] for m in range(cfg.M)]
    return [
        int(any(low[m] and cfg.beta[m][k] > 0 for m in range(cfg.M)))
        for k in range(cfg.K)
    ]


def decide_purchase(
    Q: list[int], x: SupplyState, params: ControllerParams, cfg: PlantConfig
) -> list[int]:
    """Choose this slot's purchase vector.

    Minimizes V * spend + sum_m A[m] * (Q[m] - theta[m]) over the feasible
    purchases under supply state x.  Only materials with negative linear
    weight w[m] = V * unit_cost[m] + Q[m] - theta[m] are worth buying; they
    are bought at their caps when the budget allows, otherwise an exact
    bounded knapsack over integer cost units decides, returning the
    lexicographically smallest optimal vector.
    """
    M = cfg.M
    w = [params.V * x.unit_cost[m] + Q[m] - params.theta[m] for m in range(M)]
    ub = [min(cfg.A_max[m], x.available[m]) for m in range(M)]
    want = [ub[m] if w[m] < 0 else 0 for m in range(M)]
    if purchase_cost(want, x) <= cfg.c_max:
        return want

    items = [m for m in range(M) if w[m] < 0]
    values = [-w[m] for m in items]
    costs = [x.unit_cost[m] for m in items]
    caps = [ub[m] for m in items]
    picked = _bounded_knapsack_lex_min(values, costs, caps, cfg.c_max)
    A = [0] * M
    for m, a in zip(items, picked):
        A[m] = a
    return A


def _bounded_knapsack_lex_min(
    values: list[float], costs: list[int], caps: list[int], budget: int
) -> list[int]:
    """Maximize sum values[i]*a[i] st sum costs[i]*a[i] <= budget, 0 <= a <= caps.

    Returns the lexicographically smallest maximizer.  best[i][b] holds the
    optimum over items i.. with budget b; the reconstruction pass recomputes
    candidate scores with the identical arithmetic, so exact float equality
    identifies optimal choices.
    """
    n = len(values)
    best = [[0.0] * (budget + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        v, cost, cap = values[i], costs[i], caps[i]
        nxt = best[i + 1]
        row = best[i]
        for b in range(budget + 1):
            top = cap if cost == 0 else min(cap, b // cost)
            m = nxt[b]
            for a in range(1, top + 1):
                cand = v * a + nxt[b - cost * a]
                if cand > m:
                    m = cand
            row[b] = m
    out = [0] * n
    b = budget
    for i in range(n):
        v, cost, cap = values[i], costs[i], caps[i]
        top = cap if cost == 0 else min(cap, b // cost)
        target = best[i][b]
        for a in range(top + 1):
            if v * a + best[i + 1][b - cost * a] == target:
                out[i] = a
                b -= cost * a
                break
    return out


def decide_pricing(
    Q: list[int], y: DemandState, params: ControllerParams, cfg: PlantConfig
) -> tuple[list[int], list[float]]:
    """Choose offer flags Z and prices P for this slot.

    Product k scores each price p by V * (p - alpha[k]) * F + F * relief,
    where relief is the queue headroom sum_m beta[m][k] * (Q[m] - theta[m])
    and F is the mean demand at p.  The best strictly positive score wins
    (ties go to the smaller price); otherwise the product is withheld, as it
    is whenever a feeder queue is below its worst-case one-slot consumption.
    In demand-blind mode the state-independent base table F_hat replaces F,
    which leaves the decision unchanged whenever the true tables are the
    base table scaled by a positive state factor.
    """
    ind = compute_indicators(Q, cfg)
    Z = [0] * cfg.K
    P = [0.0] * cfg.K
    for k in range(cfg.K):
        prices = cfg.price_set[k]
        if ind[k]:
            P[k] = prices[0]
            continue
        relief = sum(
            cfg.beta[m][k] * (Q[m] - params.theta[m]) for m in range(cfg.M)
        )
        if params.demand_blind:
            if y.F_hat is None:
                raise ValueError(
                    f"demand state {y.id!r} has no base table for blind pricing"
                )
            row = y.F_hat[k]
        else:
            row = y.F[k]
        best = -np.inf
        best_j = 0
        for j, p in enumerate(prices):
            f = row[j]
            g = params.V * (p - cfg.alpha[k]) * f + f * relief
            if g > best:
                best = g
                best_j = j
        P[k] = prices[best_j]
        if best > 0:
            Z[k] = 1
    return Z, P


def init_state(
    cfg: PlantConfig, params: ControllerParams, Q0: list[int] | None = None
) -> ControllerState:
    """Start a run with physical inventory Q0 (default: exactly mu_max).

    The initial queues must already lie in the band the controller
    maintains, otherwise InitOutOfRange is raised.
    """
    mu_max = cfg.mu_max()
    if Q0 is None:
        Q0 = list(mu_max)
    if len(Q0) != cfg.M:
        raise InitOutOfRange("Q0 must have one entry per material")
    for m in range(cfg.M):
        hi = params.theta[m] + cfg.A_max[m]
        if not mu_max[m] <= Q0[m] <= hi:
            raise InitOutOfRange(
                f"Q0[{m}] = {Q0[m]} outside [{mu_max[m]}, {hi}]"
            )
    return ControllerState(Q=list(Q0), fake=[0] * cfg.M)


def init_placeholder(
    cfg: PlantConfig, params: ControllerParams, Q_actual_0: list[int]
) -> ControllerState:
    """Start a run that backs an arbitrary small physical stock with fake units.

    mu_max[m] fake units are booked into every queue, so control starts from
    Q[m] = Q_actual_0[m] + mu_max[m] and the plant can open with as little
    as zero physical inventory.  Because the controller never lets Q[m] drop
    below mu_max[m], the fake units are never consumed.
    """
    mu_max = cfg.mu_max()
    if len(Q_actual_0) != cfg.M:
        raise InitOutOfRange("Q_actual_0 must have one entry per material")
    Q = []
    for m in range(cfg.M):
        if Q_actual_0[m] < 0:
            raise InitOutOfRange(f"Q_actual_0[{m}] is negative")
        total = Q_actual_0[m] + mu_max[m]
        hi = params.theta[m] + cfg.A_max[m]
        if total > hi:
            raise InitOutOfRange(
                f"Q_actual_0[{m}] + mu_max[{m}] = {total} exceeds {hi}"
            )
        Q.append(total)
    return ControllerState(Q=Q, fake=list(mu_max))


def controller_step(
    state: ControllerState,
    x: SupplyState,
    y: DemandState,
    rng: np.random.Generator,
    cfg: PlantConfig,
    params: ControllerParams,
) -> tuple[SlotDecision, SlotOutcome, ControllerState]:
    """Run one slot: decide, realize demand, account profit, advance queues.

    Demand is drawn only for offered products, in ascending product order.
    Offered demand is always served in full (the pricing rule guarantees the
    inventory is there), so nominal and realized profit coincide; a shortfall
    would raise InvariantViolation.  The updated queues are checked against
    the guaranteed band.
    """
    Q = state.Q
    A = decide_purchase(Q, x, params, cfg)
    Z, P = decide_pricing(Q, y, params, cfg)
    dec = SlotDecision(A=A, Z=Z, P=P)
    D = [
        realize_demand(k, P[k], y, cfg, rng) if Z[k] else 0
        for k in range(cfg.K)
    ]
    used = material_usage(D, cfg)
    for m in range(cfg.M):
        if used[m] > Q[m]:
            raise InvariantViolation(
                f"slot {state.slot}: accepted demand needs {used[m]} of "
                f"material {m} but only {Q[m]} is stored"
            )
    phi = nominal_profit(dec, D, x, cfg)
    out = SlotOutcome(D=D, D_tilde=list(D), consumption=used, phi=phi, phi_actual=phi)
    mu_max = cfg.mu_max()
    Qn = [Q[m] - used[m] + A[m] for m in range(cfg.M)]
    for m in range(cfg.M):
        if not mu_max[m] <= Qn[m] <= params.theta[m] + cfg.A_max[m]:
            raise InvariantViolation(
                f"slot {state.slot}: queue {m} left its band: {Qn[m]} not in "
                f"[{mu_max[m]}, {params.theta[m] + cfg.A_max[m]}]"
            )
    nxt = ControllerState(Q=Qn, fake=list(state.fake), slot=state.slot + 1)
    return dec, out, nxt
