"""Optimality oracles for the plant control problem.

The central object is a linear program over stationary randomized policies:
a distribution over feasible purchase vectors for every supply state and a
distribution over offer/price options for every product and demand state,
tied together by a per-material balance between mean purchases and mean
consumption.  Its optimum is the best long-run average profit any policy
can achieve, which online controllers are measured against.

Also provided: an exhaustive search over pure and exactly-mixed policies
(an independent cross-check of the LP), extraction of the optimal
policy from the LP solution, a reduction of any per-state price
distribution to at most two support points without losing revenue, and a
finite-horizon lookahead program for arbitrary state traces.
"""

from __future__ import annotations

import itertools
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from plantsim.model import Model, PlantConfig, SupplyState, purchase_cost
from plantsim.simplex import LinearProgram, LpSolution, solve_lp


class ActionSpaceTooLarge(ValueError):
    """A supply state admits more purchase vectors than the enumeration cap."""


class InstanceTooLarge(ValueError):
    """The instance is beyond what the exhaustive search is meant for."""


class TargetOutsideHull(RuntimeError):
    """A mean demand target cannot be expressed by the available price options."""


class NormalizationFailure(RuntimeError):
    """An LP solution block did not form a probability distribution."""


ACTION_CAP = 100_000

# Offer options for one product: withhold, or offer at the j-th menu price.
IDLE = (0, -1)


def product_options(cfg: PlantConfig, k: int) -> list[tuple[int, int]]:
    return [IDLE] + [(1, j) for j in range(len(cfg.price_set[k]))]


def enumerate_actions(x: SupplyState, cfg: PlantConfig) -> list[tuple[int, ...]]:
    """All feasible purchase vectors under supply state x, lexicographically.

    Feasible means 0 <= A[m] <= min(A_max[m], available[m]) per material and
    total spend at most c_max.  Raises ActionSpaceTooLarge past the cap.
    """
    ub = [min(cfg.A_max[m], x.available[m]) for m in range(cfg.M)]
    out: list[tuple[int, ...]] = []
    vec = [0] * cfg.M

    def rec(m: int, budget: int) -> None:
        if m == cfg.M:
            if len(out) >= ACTION_CAP:
                raise ActionSpaceTooLarge(
                    f"supply state {x.id!r} admits more than {ACTION_CAP} "
                    "purchase vectors"
                )
            out.append(tuple(vec))
            return
        cost = x.unit_cost[m]
        top = ub[m] if cost == 0 else min(ub[m], budget // cost)
        for a in range(top + 1):
            vec[m] = a
            rec(m + 1, budget - cost * a)
        vec[m] = 0

    rec(0, cfg.c_max)
    return out


@dataclass
class ProfitLp:
    """The stationary-profit LP plus the layout needed to read its solution."""

    lp: LinearProgram
    model: Model
    pi_x: np.ndarray
    pi_y: np.ndarray
    actions: list[list[tuple[int, ...]]]
    purchase_offset: list[int]
    option_offset: dict[tuple[int, int], int]
    n_vars: int


def build_profit_lp(model: Model, pi_x, pi_y) -> ProfitLp:
    """Assemble the stationary-profit LP for given state distributions.

    Variables are the per-supply-state purchase distributions and the
    per-(product, demand state) offer distributions.  The objective is mean
    revenue net of assembly cost minus mean purchase spend; each block sums
    to one and mean purchases equal mean consumption per material.  Balance
    is written as an equality, which costs no optimality: any slack purchase
    mass can be shifted onto smaller vectors without raising the objective.
    """
    cfg = model.cfg
    pi_x = _check_dist(pi_x, len(model.supply_states), "pi_x")
    pi_y = _check_dist(pi_y, len(model.demand_states), "pi_y")

    actions = [enumerate_actions(x, cfg) for x in model.supply_states]
    purchase_offset = []
    n = 0
    for acts in actions:
        purchase_offset.append(n)
        n += len(acts)
    option_offset: dict[tuple[int, int], int] = {}
    for k in range(cfg.K):
        n_opts = len(product_options(cfg, k))
        for yi in range(len(model.demand_states)):
            option_offset[(k, yi)] = n
            n += n_opts

    c = np.zeros(n)
    for xi, x in enumerate(model.supply_states):
        base = purchase_offset[xi]
        for ai, a in enumerate(actions[xi]):
            c[base + ai] = -pi_x[xi] * purchase_cost(list(a), x)
    for k in range(cfg.K):
        opts = product_options(cfg, k)
        for yi, y in enumerate(model.demand_states):
            base = option_offset[(k, yi)]
            for oi, (z, j) in enumerate(opts):
                if z:
                    c[base + oi] = (
                        pi_y[yi] * (cfg.price_set[k][j] - cfg.alpha[k]) * y.F[k][j]
                    )

    n_eq = len(actions) + cfg.K * len(model.demand_states) + cfg.M
    a_eq = np.zeros((n_eq, n))
    b_eq = np.zeros(n_eq)
    row = 0
    for xi, acts in enumerate(actions):
        a_eq[row, purchase_offset[xi] : purchase_offset[xi] + len(acts)] = 1.0
        b_eq[row] = 1.0
        row += 1
    for k in range(cfg.K):
        n_opts = len(product_options(cfg, k))
        for yi in range(len(model.demand_states)):
            base = option_offset[(k, yi)]
            a_eq[row, base : base + n_opts] = 1.0
            b_eq[row] = 1.0
            row += 1
    for m in range(cfg.M):
        for xi, acts in enumerate(actions):
            base = purchase_offset[xi]
            for ai, a in enumerate(acts):
                a_eq[row, base + ai] = pi_x[xi] * a[m]
        for k in range(cfg.K):
            if cfg.beta[m][k] == 0:
                continue
            opts = product_options(cfg, k)
            for yi, y in enumerate(model.demand_states):
                base = option_offset[(k, yi)]
                for oi, (z, j) in enumerate(opts):
                    if z:
                        a_eq[row, base + oi] -= (
                            pi_y[yi] * cfg.beta[m][k] * y.F[k][j]
                        )
        row += 1

    lp = LinearProgram(c=c, a_eq=a_eq, b_eq=b_eq)
    return ProfitLp(
        lp=lp,
        model=model,
        pi_x=pi_x,
        pi_y=pi_y,
        actions=actions,
        purchase_offset=purchase_offset,
        option_offset=option_offset,
        n_vars=n,
    )


def _check_dist(pi, n: int, name: str) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (n,):
        raise ValueError(f"{name} must have length {n}")
    if (pi < 0).any() or abs(pi.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} must be a probability distribution")
    return pi


def optimal_profit(model: Model, pi_x, pi_y) -> tuple[float, ProfitLp, LpSolution]:
    """Convenience wrapper: build and solve the stationary-profit LP."""
    plp = build_profit_lp(model, pi_x, pi_y)
    sol = solve_lp(plp.lp)
    return sol.value, plp, sol


@dataclass
class OraclePolicy:
    """A stationary randomized policy keyed by the current exogenous states.

    purchase_dist[xi] lists (purchase vector, probability); price_dist[k][yi]
    lists (z, price index, probability) with price index -1 meaning withheld.
    The aggregates are the policy's exact means under (pi_x, pi_y).
    """

    purchase_dist: list[list[tuple[tuple[int, ...], float]]]
    price_dist: list[list[list[tuple[int, int, float]]]]
    c_hat: float
    r_hat: float
    a_hat: list[float]
    mu_hat: list[float]
    phi: float


def extract_xy_policy(plp: ProfitLp, sol: LpSolution) -> OraclePolicy:
    """Read the optimal policy out of a solved stationary-profit LP.

    Each variable block is clipped of solver noise and renormalized; blocks
    whose mass strays from one raise NormalizationFailure.  The recomputed
    aggregates must reproduce the LP value and balance purchases against
    consumption to within 1e-9, which guards the bookkeeping end to end.
    """
    model, cfg = plp.model, plp.model.cfg
    x_vals = sol.x

    purchase_dist = []
    for xi, acts in enumerate(plp.actions):
        base = plp.purchase_offset[xi]
        block = _normalize_block(
            x_vals[base : base + len(acts)], f"purchases of state {xi}"
        )
        purchase_dist.append(
            [(acts[ai], p) for ai, p in enumerate(block) if p > 1e-12]
        )
    price_dist: list[list[list[tuple[int, int, float]]]] = []
    for k in range(cfg.K):
        opts = product_options(cfg, k)
        per_y = []
        for yi in range(len(model.demand_states)):
            base = plp.option_offset[(k, yi)]
            block = _normalize_block(
                x_vals[base : base + len(opts)], f"offers of product {k}"
            )
            per_y.append(
                [
                    (opts[oi][0], opts[oi][1], p)
                    for oi, p in enumerate(block)
                    if p > 1e-12
                ]
            )
        price_dist.append(per_y)

    c_hat = 0.0
    a_hat = [0.0] * cfg.M
    for xi, dist in enumerate(purchase_dist):
        w = plp.pi_x[xi]
        for a, p in dist:
            c_hat += w * p * purchase_cost(list(a), model.supply_states[xi])
            for m in range(cfg.M):
                a_hat[m] += w * p * a[m]
    r_hat = 0.0
    mu_hat = [0.0] * cfg.M
    for k in range(cfg.K):
        for yi, dist in enumerate(price_dist[k]):
            w = plp.pi_y[yi]
            y = model.demand_states[yi]
            for z, j, p in dist:
                if not z:
                    continue
                f = y.F[k][j]
                r_hat += w * p * (cfg.price_set[k][j] - cfg.alpha[k]) * f
                for m in range(cfg.M):
                    mu_hat[m] += w * p * cfg.beta[m][k] * f
    phi = r_hat - c_hat

    scale = 1.0 + abs(sol.value)
    if abs(phi - sol.value) > 1e-9 * scale:
        raise NormalizationFailure(
            f"policy profit {phi} does not reproduce the LP value {sol.value}"
        )
    for m in range(cfg.M):
        if abs(a_hat[m] - mu_hat[m]) > 1e-9 * (1.0 + abs(mu_hat[m])):
            raise NormalizationFailure(
                f"material {m}: mean purchases {a_hat[m]} do not balance "
                f"mean consumption {mu_hat[m]}"
            )
    return OraclePolicy(
        purchase_dist=purchase_dist,
        price_dist=price_dist,
        c_hat=c_hat,
        r_hat=r_hat,
        a_hat=a_hat,
        mu_hat=mu_hat,
        phi=phi,
    )


def _normalize_block(block: np.ndarray, what: str) -> np.ndarray:
    block = np.asarray(block, dtype=float)
    if (block < -1e-7).any():
        raise NormalizationFailure(f"{what}: negative probability mass")
    block = np.clip(block, 0.0, None)
    total = block.sum()
    if abs(total - 1.0) > 1e-6:
        raise NormalizationFailure(f"{what}: mass {total} instead of 1")
    return block / total


@dataclass
class BruteForceResult:
    value: float
    pure_value: float
    is_pure: bool


def brute_force_opt(model: Model, pi_x, pi_y) -> BruteForceResult:
    """Search pure and mixed stationary policies exhaustively.

    Every pure policy (one purchase vector per supply state, one offer
    option per product and demand state) is evaluated exactly.  Mixtures
    are then searched with exact weights rather than on a grid: for every
    pair of pure policies the feasible weight interval is computed in
    closed form and the profit evaluated at its endpoints, and with two
    materials every triple is additionally checked at the point where both
    material balances are tight.  An optimal stationary policy mixes at
    most one extra policy per material balance, so this search attains the
    true optimum and the best value found both lower-bounds and, within
    rounding, matches the LP.  Meant for tiny instances only; raises
    InstanceTooLarge beyond two states per process, two products, two
    materials or three prices.
    """
    cfg = model.cfg
    if (
        len(model.supply_states) > 2
        or len(model.demand_states) > 2
        or cfg.M > 2
        or cfg.K > 2
        or any(len(ps) > 3 for ps in cfg.price_set)
    ):
        raise InstanceTooLarge("exhaustive search is limited to tiny instances")
    pi_x = _check_dist(pi_x, len(model.supply_states), "pi_x")
    pi_y = _check_dist(pi_y, len(model.demand_states), "pi_y")

    # Combined purchase choices across supply states: (mean cost, mean A).
    per_x = []
    for xi, x in enumerate(model.supply_states):
        acts = enumerate_actions(x, cfg)
        per_x.append(
            [
                (
                    pi_x[xi] * purchase_cost(list(a), x),
                    np.asarray(a, dtype=float) * pi_x[xi],
                )
                for a in acts
            ]
        )
    buy_pts = _combine(per_x, cfg.M, cap=2000)

    # Combined offer choices across (product, demand state): (mean net
    # revenue, mean consumption).
    per_ky = []
    for k in range(cfg.K):
        beta_col = np.array([cfg.beta[m][k] for m in range(cfg.M)], dtype=float)
        for yi, y in enumerate(model.demand_states):
            opts = []
            for z, j in product_options(cfg, k):
                if z:
                    f = y.F[k][j]
                    opts.append(
                        (
                            pi_y[yi] * (cfg.price_set[k][j] - cfg.alpha[k]) * f,
                            pi_y[yi] * f * beta_col,
                        )
                    )
                else:
                    opts.append((0.0, np.zeros(cfg.M)))
            per_ky.append(opts)
    sell_pts = _combine(per_ky, cfg.M, cap=2000)

    if len(buy_pts[0]) * len(sell_pts[0]) > 200_000:
        raise InstanceTooLarge("too many pure policies to enumerate")

    buy_cost, buy_a = buy_pts
    sell_rev, sell_mu = sell_pts
    profit = -buy_cost[:, None] + sell_rev[None, :]
    slack = buy_a[:, None, :] - sell_mu[None, :, :]
    feasible = (slack >= -1e-12).all(axis=2)
    pure_value = float(profit[feasible].max())

    pts = np.concatenate(
        [profit[..., None], slack], axis=2
    ).reshape(-1, 1 + cfg.M)
    pts = np.unique(np.round(pts, 12), axis=0)
    pts = _pareto_max(pts)
    if len(pts) > 600:
        raise InstanceTooLarge("too many undominated policies to mix exactly")

    best = pure_value
    if len(pts) >= 2:
        best = max(best, _best_pair_mix(pts))
    if cfg.M == 2 and len(pts) >= 3:
        best = max(best, _best_triple_mix(pts))

    return BruteForceResult(
        value=best, pure_value=pure_value, is_pure=pure_value >= best - 1e-12
    )


def _best_pair_mix(pts: np.ndarray) -> float:
    """Exact best profit over two-point mixtures with nonnegative slack.

    For points p, q the mixture (1-eta)p + eta*q is feasible on a weight
    interval found from the linear slack constraints; the profit is linear
    in eta, so only the interval endpoints need evaluating.
    """
    prof = pts[:, 0]
    s = pts[:, 1:]
    base = s[:, None, :]
    d = s[None, :, :] - base
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = -base / d
    eps = 1e-14
    lo = np.maximum(np.where(d > eps, ratio, 0.0).max(axis=2), 0.0)
    hi = np.minimum(np.where(d < -eps, ratio, 1.0).min(axis=2), 1.0)
    dead = ((np.abs(d) <= eps) & (base < -1e-12)).any(axis=2)
    ok = ~dead & (lo <= hi + 1e-12)
    if not ok.any():
        return -np.inf
    dp = prof[None, :] - prof[:, None]
    at_lo = prof[:, None] + lo * dp
    at_hi = prof[:, None] + hi * dp
    return float(np.maximum(at_lo, at_hi)[ok].max())


def _best_triple_mix(pts: np.ndarray) -> float:
    """Exact best profit over three-point mixtures with both slacks tight.

    With two materials an optimal mixture can need three policies, but any
    such optimum not already covered by the pair search has both material
    balances active.  That leaves one candidate point per triple, found by
    a 2x2 linear solve and kept when it lies in the weight simplex.
    """
    n = len(pts)
    if n * (n - 1) * (n - 2) // 6 > 2_000_000:
        raise InstanceTooLarge("too many policy triples to mix exactly")
    idx = np.array(list(itertools.combinations(range(n), 3)))
    p = pts[idx]  # (n_triples, 3, 1 + 2)
    pk, pi_, pj = p[:, 2], p[:, 0], p[:, 1]
    a11 = pi_[:, 1] - pk[:, 1]
    a12 = pj[:, 1] - pk[:, 1]
    a21 = pi_[:, 2] - pk[:, 2]
    a22 = pj[:, 2] - pk[:, 2]
    b1 = -pk[:, 1]
    b2 = -pk[:, 2]
    det = a11 * a22 - a12 * a21
    ok = np.abs(det) > 1e-12
    if not ok.any():
        return -np.inf
    det = np.where(ok, det, 1.0)
    e1 = (b1 * a22 - b2 * a12) / det
    e2 = (a11 * b2 - a21 * b1) / det
    ok &= (e1 >= -1e-12) & (e2 >= -1e-12) & (e1 + e2 <= 1.0 + 1e-12)
    if not ok.any():
        return -np.inf
    val = pk[:, 0] + e1 * (pi_[:, 0] - pk[:, 0]) + e2 * (pj[:, 0] - pk[:, 0])
    return float(val[ok].max())


def _combine(blocks, M: int, cap: int):
    """Cartesian sums of per-block (scalar, vector) contribution lists."""
    scalars = np.array([0.0])
    vectors = np.zeros((1, M))
    for opts in blocks:
        s = np.array([o[0] for o in opts])
        v = np.array([o[1] for o in opts])
        scalars = (scalars[:, None] + s[None, :]).ravel()
        vectors = (vectors[:, None, :] + v[None, :, :]).reshape(-1, M)
        if len(scalars) > cap:
            raise InstanceTooLarge("too many pure policies to enumerate")
    return scalars, vectors


def _pareto_max(pts: np.ndarray) -> np.ndarray:
    """Rows of pts not dominated coordinate-wise by another row."""
    n = len(pts)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        ge = (pts >= pts[i] - 1e-15).all(axis=1)
        gt = (pts > pts[i] + 1e-15).any(axis=1)
        dominators = ge & gt
        if dominators.any():
            keep[i] = False
    return pts[keep]


@dataclass
class TwoPriceEntry:
    """Reduced offer distribution for one (product, demand state) pair."""

    support: list[tuple[int, int, float]]
    r_star: float
    d_target: float
    r_orig: float


@dataclass
class TwoPricePolicy:
    entries: list[list[TwoPriceEntry]]


def two_price_reduce(policy: OraclePolicy, model: Model) -> TwoPricePolicy:
    """Compress every per-state offer distribution to at most two options.

    For each (product, demand state) the achievable (mean demand, mean net
    revenue) pairs of the single options span a set whose upper concave
    envelope dominates every randomization.  The original mean demand is
    located on that envelope and expressed as a mix of the two bracketing
    options (one when it sits on a vertex), preserving mean demand exactly
    and never losing revenue.
    """
    cfg = model.cfg
    entries: list[list[TwoPriceEntry]] = []
    for k in range(cfg.K):
        per_y = []
        for yi, y in enumerate(model.demand_states):
            dist = policy.price_dist[k][yi]
            d_hat = sum(p * y.F[k][j] for z, j, p in dist if z)
            r_hat = sum(
                p * (cfg.price_set[k][j] - cfg.alpha[k]) * y.F[k][j]
                for z, j, p in dist
                if z
            )
            pts = [(0.0, 0.0, IDLE)]
            for j in range(len(cfg.price_set[k])):
                f = y.F[k][j]
                pts.append(((cfg.price_set[k][j] - cfg.alpha[k]) * f, f, (1, j)))
            per_y.append(_reduce_one(pts, d_hat, r_hat))
        entries.append(per_y)
    return TwoPricePolicy(entries=entries)


def _reduce_one(pts, d_hat: float, r_hat: float) -> TwoPriceEntry:
    hull = _upper_hull([(d, r, lab) for r, d, lab in pts])
    ds = [h[0] for h in hull]
    if d_hat < ds[0] - 1e-9 or d_hat > ds[-1] + 1e-9:
        raise TargetOutsideHull(
            f"mean demand {d_hat} outside the achievable range "
            f"[{ds[0]}, {ds[-1]}]"
        )
    d = min(max(d_hat, ds[0]), ds[-1])
    i = bisect_right(ds, d)
    if i >= len(ds):
        # d sits exactly on the rightmost vertex.
        z, j = hull[-1][2]
        entry = TwoPriceEntry([(z, j, 1.0)], hull[-1][1], d_hat, r_hat)
    else:
        lo, hi = hull[i - 1], hull[i]
        eta = (d - lo[0]) / (hi[0] - lo[0])
        if eta <= 1e-12:
            support = [(lo[2][0], lo[2][1], 1.0)]
            r_star = lo[1]
        elif eta >= 1.0 - 1e-12:
            support = [(hi[2][0], hi[2][1], 1.0)]
            r_star = hi[1]
        else:
            support = [
                (lo[2][0], lo[2][1], 1.0 - eta),
                (hi[2][0], hi[2][1], eta),
            ]
            r_star = (1.0 - eta) * lo[1] + eta * hi[1]
        entry = TwoPriceEntry(support, r_star, d_hat, r_hat)
    if entry.r_star < r_hat - 1e-9:
        raise TargetOutsideHull(
            f"envelope revenue {entry.r_star} fell below the original {r_hat}"
        )
    return entry


def _upper_hull(pts):
    """Upper concave envelope vertices of (d, r, label) points, d ascending."""
    best: dict[float, tuple[float, float, tuple[int, int]]] = {}
    for d, r, lab in pts:
        cur = best.get(d)
        if cur is None or r > cur[1]:
            best[d] = (d, r, lab)
    ordered = [best[d] for d in sorted(best)]
    hull: list[tuple[float, float, tuple[int, int]]] = []
    for p in ordered:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


@dataclass
class SlotPlan:
    """Expected per-slot actions of a lookahead solution."""

    purchases: list[float]
    consumption: list[float]
    cost: float
    revenue: float


@dataclass
class LookaheadResult:
    phi_T: float
    slots: list[SlotPlan]


def lookahead_value(model: Model, xs, ys) -> LookaheadResult:
    """Best expected profit over a known frame of exogenous states.

    xs and ys are state indices for the frame's slots.  Per-slot action
    distributions are optimized jointly under one per-material constraint:
    total expected purchases over the frame equal total expected
    consumption.  Materials may thus be bought in any slot for use in any
    other, which is exactly the slack an offline planner has.  The value is
    never negative since staying idle is feasible.
    """
    cfg = model.cfg
    xs = list(xs)
    ys = list(ys)
    if len(xs) != len(ys) or not xs:
        raise ValueError("xs and ys must be equally long and non-empty")
    T = len(xs)
    states_x = [model.supply_states[i] for i in xs]
    states_y = [model.demand_states[i] for i in ys]

    actions = [enumerate_actions(x, cfg) for x in states_x]
    buy_offset = []
    n = 0
    for acts in actions:
        buy_offset.append(n)
        n += len(acts)
    opt_offset: dict[tuple[int, int], int] = {}
    for t in range(T):
        for k in range(cfg.K):
            opt_offset[(t, k)] = n
            n += len(product_options(cfg, k))

    c = np.zeros(n)
    for t in range(T):
        base = buy_offset[t]
        for ai, a in enumerate(actions[t]):
            c[base + ai] = -purchase_cost(list(a), states_x[t])
        for k in range(cfg.K):
            obase = opt_offset[(t, k)]
            for oi, (z, j) in enumerate(product_options(cfg, k)):
                if z:
                    c[obase + oi] = (
                        cfg.price_set[k][j] - cfg.alpha[k]
                    ) * states_y[t].F[k][j]

    n_eq = T + T * cfg.K + cfg.M
    a_eq = np.zeros((n_eq, n))
    b_eq = np.zeros(n_eq)
    row = 0
    for t in range(T):
        a_eq[row, buy_offset[t] : buy_offset[t] + len(actions[t])] = 1.0
        b_eq[row] = 1.0
        row += 1
    for t in range(T):
        for k in range(cfg.K):
            base = opt_offset[(t, k)]
            a_eq[row, base : base + len(product_options(cfg, k))] = 1.0
            b_eq[row] = 1.0
            row += 1
    for m in range(cfg.M):
        for t in range(T):
            base = buy_offset[t]
            for ai, a in enumerate(actions[t]):
                a_eq[row, base + ai] = a[m]
            for k in range(cfg.K):
                if cfg.beta[m][k] == 0:
                    continue
                obase = opt_offset[(t, k)]
                for oi, (z, j) in enumerate(product_options(cfg, k)):
                    if z:
                        a_eq[row, obase + oi] -= cfg.beta[m][k] * states_y[t].F[k][j]
        row += 1

    sol = solve_lp(LinearProgram(c=c, a_eq=a_eq, b_eq=b_eq))

    slots = []
    for t in range(T):
        buy = [0.0] * cfg.M
        cost = 0.0
        base = buy_offset[t]
        for ai, a in enumerate(actions[t]):
            p = sol.x[base + ai]
            if p > 0:
                cost += p * purchase_cost(list(a), states_x[t])
                for m in range(cfg.M):
                    buy[m] += p * a[m]
        use = [0.0] * cfg.M
        revenue = 0.0
        for k in range(cfg.K):
            obase = opt_offset[(t, k)]
            for oi, (z, j) in enumerate(product_options(cfg, k)):
                p = sol.x[obase + oi]
                if z and p > 0:
                    f = states_y[t].F[k][j]
                    revenue += p * (cfg.price_set[k][j] - cfg.alpha[k]) * f
                    for m in range(cfg.M):
                        use[m] += p * cfg.beta[m][k] * f
        slots.append(SlotPlan(purchases=buy, consumption=use, cost=cost, revenue=revenue))

    return LookaheadResult(phi_T=sol.value, slots=slots)
