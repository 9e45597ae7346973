"""Episode simulation, metrics and long-run bound checks.

run_episode plays the online controller (or a fixed stationary oracle
policy) against sampled supply/demand state paths and verifies the
controller's guarantees slot by slot: queues stay inside their band, every
accepted unit of demand is served, and the per-slot drift never exceeds its
constant bound.  Decisions are pure functions of (queues, supply state,
demand state), so they are memoized per run, which keeps million-slot
episodes cheap.

The check_* helpers run whole experiments: comparing the controller's mean
profit against the stationary optimum, against per-frame lookahead values
on arbitrary traces, and against the stationary optimum under
Markov-modulated states.  Monte Carlo comparisons carry a 3-standard-error
allowance; everything else is exact.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, replace

import numpy as np

from plantsim.controller import (
    ControllerParams,
    InvariantViolation,
    compute_theta,
    decide_pricing,
    decide_purchase,
    init_placeholder,
    init_state,
    make_params,
)
from plantsim.model import (
    Model,
    material_usage,
    purchase_cost,
    queue_update,
    schedule_fulfillment,
)
from plantsim.oracles import OraclePolicy, lookahead_value, optimal_profit
from plantsim.processes import (
    IID,
    MARKOV,
    RngStream,
    StateProcessSpec,
    generate_states,
    stationary_distribution,
)

# Channel ids for the independent randomness streams of one episode.
_CH_X = 0
_CH_Y = 1
_CH_DEMAND = 2
_CH_POLICY = 3


@dataclass
class EpisodeConfig:
    """Everything needed to reproduce one episode bit for bit."""

    horizon: int
    seed: int
    V: float
    process_x: StateProcessSpec
    process_y: StateProcessSpec
    stream: int = 0
    controller: str = "online"
    oracle_policy: OraclePolicy | None = None
    placeholder: bool = False
    assembly_delay: bool = False
    demand_blind: bool = False
    theta: list[float] | None = None
    allow_unsafe_theta: bool = False
    Q0: list[int] | None = None
    check_bounds: bool = True
    record_log: bool = False


@dataclass
class Metrics:
    """Per-episode results and invariant accounting."""

    horizon: int
    seed: int
    stream: int
    total_phi: float
    total_phi_actual: float
    avg_phi: float
    avg_phi_actual: float
    q_min: list[int]
    q_max: list[int]
    q_lower_bound: list[int] | None
    q_upper_bound: list[float] | None
    drift_bound: float
    max_slot_drift: float
    bound_violations: int
    phi_mismatch_slots: int
    final_Q: list[int]
    fake: list[int]
    startup_cost: float
    log: list[tuple] | None = None

    @property
    def net_total_phi_actual(self) -> float:
        return self.total_phi_actual - self.startup_cost


class _UniformBuffer:
    """Chunked uniform variates, identical to sequential Generator.random calls.

    numpy generators fill batched requests from the same bit stream as
    repeated scalar calls, so pulling draws through this buffer in any
    grouping reproduces the plain call-by-call sequence.
    """

    _CHUNK = 1 << 15

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._buf: list[float] = []
        self._pos = 0

    def take(self, n: int) -> list[float]:
        pos = self._pos
        buf = self._buf
        if pos + n <= len(buf):
            self._pos = pos + n
            return buf[pos : pos + n]
        out = buf[pos:]
        need = n - len(out)
        while need > self._CHUNK:
            out.extend(self._rng.random(self._CHUNK).tolist())
            need -= self._CHUNK
        self._buf = self._rng.random(self._CHUNK).tolist()
        out.extend(self._buf[:need])
        self._pos = need
        return out

    def take1(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._rng.random(self._CHUNK).tolist()
            self._pos = 0
        v = self._buf[self._pos]
        self._pos += 1
        return v


def drift_constant(model: Model) -> float:
    """Uniform bound on the per-slot drift 0.5 * sum (A[m] - used[m])^2."""
    cfg = model.cfg
    return 0.5 * sum(
        max(cfg.A_max[m] ** 2, model.mu_max[m] ** 2) for m in range(cfg.M)
    )


def run_episode(ec: EpisodeConfig, model: Model) -> Metrics:
    """Simulate one episode and return its metrics.

    With check_bounds set (the default) any breach of the controller's queue
    band or of full fulfillment raises InvariantViolation immediately;
    otherwise breaches are only counted, which supports deliberately unsafe
    threshold experiments.
    """
    if ec.horizon <= 0:
        raise ValueError("horizon must be positive")
    if ec.controller not in ("online", "oracle"):
        raise ValueError(f"unknown controller {ec.controller!r}")
    if ec.controller == "oracle":
        if ec.oracle_policy is None:
            raise ValueError("oracle controller needs oracle_policy")
        return _run_oracle(ec, model)
    return _run_online(ec, model)


def _episode_params(ec: EpisodeConfig, model: Model) -> ControllerParams:
    return make_params(
        model.cfg,
        ec.V,
        theta=ec.theta,
        demand_blind=ec.demand_blind,
        placeholder=ec.placeholder,
        allow_unsafe_theta=ec.allow_unsafe_theta,
    )


def _check_blind_tables(model: Model) -> None:
    base = model.demand_states[0].F_hat
    for y in model.demand_states:
        if y.F_hat is None or y.h is None:
            raise ValueError(
                f"demand state {y.id!r} lacks the factorization needed for "
                "demand-blind pricing"
            )
        if y.F_hat != base:
            raise ValueError(
                "demand-blind pricing needs one shared base table across states"
            )


def _run_online(ec: EpisodeConfig, model: Model) -> Metrics:
    cfg = model.cfg
    M, K = cfg.M, cfg.K
    params = _episode_params(ec, model)
    if ec.demand_blind:
        _check_blind_tables(model)
    if ec.placeholder:
        state = init_placeholder(cfg, params, ec.Q0 or [0] * M)
    else:
        state = init_state(cfg, params, ec.Q0)

    rs = RngStream(ec.seed, ec.stream)
    xs = generate_states(ec.process_x, ec.horizon, rs.generator(_CH_X)).tolist()
    ys = generate_states(ec.process_y, ec.horizon, rs.generator(_CH_Y)).tolist()
    dbuf = _UniformBuffer(rs.generator(_CH_DEMAND))

    theta = params.theta
    mu_max = model.mu_max
    hi = [theta[m] + cfg.A_max[m] for m in range(M)]
    d_max = cfg.D_max
    alpha = cfg.alpha
    prices = cfg.price_set
    # prob[yi][k][j]: per-unit sale probability at menu price j in state yi.
    prob = [
        [[y.F[k][j] / d_max[k] for j in range(len(prices[k]))] for k in range(K)]
        for y in model.demand_states
    ]
    beta_cols = [
        [(m, cfg.beta[m][k]) for m in range(M) if cfg.beta[m][k] > 0]
        for k in range(K)
    ]
    supply = model.supply_states
    demand = model.demand_states
    ids_x = [x.id for x in supply]
    ids_y = [y.id for y in demand]

    check = ec.check_bounds
    delay = ec.assembly_delay
    product_q = list(d_max) if delay else None
    startup = (
        sum(d_max[k] * alpha[k] for k in range(K)) if delay else 0.0
    )

    B = drift_constant(model)
    max_bt = 0.0
    violations = 0
    mismatch = 0
    tphi = 0.0
    tphia = 0.0
    Q = list(state.Q)
    q_min = list(Q)
    q_max = list(Q)
    log: list[tuple] | None = [] if ec.record_log else None

    cache: dict = {}

    def decide(Qt: tuple, xi: int, yi: int):
        Ql = list(Qt)
        A = decide_purchase(Ql, supply[xi], params, cfg)
        Z, P = decide_pricing(Ql, demand[yi], params, cfg)
        cost = purchase_cost(A, supply[xi])
        sells = []
        for k in range(K):
            if Z[k]:
                j = prices[k].index(P[k])
                sells.append(
                    (k, P[k] - alpha[k], prob[yi][k][j], d_max[k], beta_cols[k])
                )
        return A, cost, Z, P, sells

    for t in range(ec.horizon):
        xi = xs[t]
        yi = ys[t]
        key = (tuple(Q), xi, yi)
        entry = cache.get(key)
        if entry is None:
            entry = decide(key[0], xi, yi)
            cache[key] = entry
        A, cost, Z, P, sells = entry

        phi = -cost
        used = [0] * M
        D = [0] * K
        for k, margin, pr, n, cols in sells:
            d = 0
            for u in dbuf.take(n):
                if u < pr:
                    d += 1
            if d:
                D[k] = d
                phi += d * margin
                for m, b in cols:
                    used[m] += b * d

        short = False
        for m in range(M):
            if used[m] > Q[m]:
                short = True
                break
        if short:
            if check:
                raise InvariantViolation(
                    f"slot {t}: accepted demand exceeds stored material"
                )
            violations += 1
            mismatch += 1
            d_tilde = schedule_fulfillment(Q, Z, P, D, cfg)
            phia = (
                sum(Z[k] * d_tilde[k] * (P[k] - alpha[k]) for k in range(K)) - cost
            )
            used = material_usage(d_tilde, cfg)
        else:
            phia = phi

        if delay:
            sold = d_tilde if short else D
            for k in range(K):
                if product_q[k] != d_max[k]:
                    raise InvariantViolation(
                        f"slot {t}: product queue {k} did not start full"
                    )
                if sold[k]:
                    product_q[k] -= sold[k]
                    if product_q[k] < 0:
                        raise InvariantViolation(
                            f"slot {t}: product queue {k} went negative"
                        )
                    product_q[k] += sold[k]

        bt = 0.0
        for m in range(M):
            q = Q[m] - used[m] + A[m]
            diff = A[m] - used[m]
            bt += diff * diff
            Q[m] = q
            if q < q_min[m]:
                q_min[m] = q
            elif q > q_max[m]:
                q_max[m] = q
            if not mu_max[m] <= q <= hi[m]:
                if check:
                    raise InvariantViolation(
                        f"slot {t}: queue {m} left its band: {q} not in "
                        f"[{mu_max[m]}, {hi[m]}]"
                    )
                violations += 1
        bt *= 0.5
        if bt > max_bt:
            max_bt = bt

        tphi += phi
        tphia += phia
        if log is not None:
            log.append(
                (
                    t,
                    ids_x[xi],
                    ids_y[yi],
                    key[0],
                    tuple(A),
                    tuple(Z),
                    tuple(P),
                    tuple(D),
                    phi,
                    phia,
                    tphia / (t + 1),
                )
            )

    return Metrics(
        horizon=ec.horizon,
        seed=ec.seed,
        stream=ec.stream,
        total_phi=tphi,
        total_phi_actual=tphia,
        avg_phi=tphi / ec.horizon,
        avg_phi_actual=tphia / ec.horizon,
        q_min=q_min,
        q_max=q_max,
        q_lower_bound=list(mu_max),
        q_upper_bound=hi,
        drift_bound=B,
        max_slot_drift=max_bt,
        bound_violations=violations,
        phi_mismatch_slots=mismatch,
        final_Q=list(Q),
        fake=list(state.fake),
        startup_cost=startup,
        log=log,
    )


def _run_oracle(ec: EpisodeConfig, model: Model) -> Metrics:
    """Play a fixed stationary randomized policy without any queue safeguards."""
    cfg = model.cfg
    M, K = cfg.M, cfg.K
    policy = ec.oracle_policy
    rs = RngStream(ec.seed, ec.stream)
    xs = generate_states(ec.process_x, ec.horizon, rs.generator(_CH_X)).tolist()
    ys = generate_states(ec.process_y, ec.horizon, rs.generator(_CH_Y)).tolist()
    dbuf = _UniformBuffer(rs.generator(_CH_DEMAND))
    pbuf = _UniformBuffer(rs.generator(_CH_POLICY))

    buy_cum = []
    for dist in policy.purchase_dist:
        acc = 0.0
        cum = []
        for _, p in dist:
            acc += p
            cum.append(acc)
        cum[-1] = math.inf
        buy_cum.append((cum, [a for a, _ in dist]))
    sell_cum = []
    for k in range(K):
        per_y = []
        for dist in policy.price_dist[k]:
            acc = 0.0
            cum = []
            for *_, p in dist:
                acc += p
                cum.append(acc)
            cum[-1] = math.inf
            per_y.append((cum, [(z, j) for z, j, _ in dist]))
        sell_cum.append(per_y)

    prices = cfg.price_set
    alpha = cfg.alpha
    d_max = cfg.D_max
    prob = [
        [[y.F[k][j] / d_max[k] for j in range(len(prices[k]))] for k in range(K)]
        for y in model.demand_states
    ]
    ids_x = [x.id for x in model.supply_states]
    ids_y = [y.id for y in model.demand_states]

    mu_max = model.mu_max
    Q = list(ec.Q0) if ec.Q0 is not None else list(mu_max)
    q_min = list(Q)
    q_max = list(Q)
    tphi = 0.0
    tphia = 0.0
    mismatch = 0
    max_bt = 0.0
    log: list[tuple] | None = [] if ec.record_log else None

    for t in range(ec.horizon):
        xi = xs[t]
        yi = ys[t]
        cum, acts = buy_cum[xi]
        A = list(acts[bisect_right(cum, pbuf.take1())])
        Z = [0] * K
        P = [0.0] * K
        D = [0] * K
        for k in range(K):
            cumk, opts = sell_cum[k][yi]
            z, j = opts[bisect_right(cumk, pbuf.take1())]
            if z:
                Z[k] = 1
                P[k] = prices[k][j]
                d = 0
                for u in dbuf.take(d_max[k]):
                    if u < prob[yi][k][j]:
                        d += 1
                D[k] = d
            else:
                P[k] = prices[k][0]
        d_tilde = schedule_fulfillment(Q, Z, P, D, cfg)
        cost = purchase_cost(A, model.supply_states[xi])
        phi = sum(Z[k] * D[k] * (P[k] - alpha[k]) for k in range(K)) - cost
        phia = sum(Z[k] * d_tilde[k] * (P[k] - alpha[k]) for k in range(K)) - cost
        if d_tilde != D:
            mismatch += 1
        used = material_usage(d_tilde, cfg)
        bt = 0.5 * sum((A[m] - used[m]) ** 2 for m in range(M))
        if bt > max_bt:
            max_bt = bt
        Q = queue_update(Q, d_tilde, A, cfg)
        for m in range(M):
            if Q[m] < q_min[m]:
                q_min[m] = Q[m]
            elif Q[m] > q_max[m]:
                q_max[m] = Q[m]
        tphi += phi
        tphia += phia
        if log is not None:
            log.append(
                (
                    t,
                    ids_x[xi],
                    ids_y[yi],
                    tuple(Q),
                    tuple(A),
                    tuple(Z),
                    tuple(P),
                    tuple(D),
                    phi,
                    phia,
                    tphia / (t + 1),
                )
            )

    return Metrics(
        horizon=ec.horizon,
        seed=ec.seed,
        stream=ec.stream,
        total_phi=tphi,
        total_phi_actual=tphia,
        avg_phi=tphi / ec.horizon,
        avg_phi_actual=tphia / ec.horizon,
        q_min=q_min,
        q_max=q_max,
        q_lower_bound=None,
        q_upper_bound=None,
        drift_bound=drift_constant(model),
        max_slot_drift=max_bt,
        bound_violations=0,
        phi_mismatch_slots=mismatch,
        final_Q=list(Q),
        fake=[0] * M,
        startup_cost=0.0,
        log=log,
    )


def run_assembly_delay(ec: EpisodeConfig, model: Model) -> Metrics:
    """Run with full product queues absorbing the one-slot assembly delay.

    Consumers take finished units immediately; assembly refills the product
    queues by end of slot, so every slot starts with exactly D_max[k] units
    on the shelf.  Decisions, queues and per-slot profits match the plain
    episode bit for bit; the only difference is the one-time cost of
    assembling the initial shelf stock, reported as startup_cost.
    """
    return run_episode(replace(ec, assembly_delay=True), model)


def run_replications(ec: EpisodeConfig, model: Model, n: int) -> list[Metrics]:
    """Run n independent replications differing only in their stream id."""
    return [run_episode(replace(ec, stream=ec.stream + i), model) for i in range(n)]


@dataclass
class ReplicationSummary:
    n: int
    mean: float
    se: float
    per_rep: list[float]


def summarize(metrics: list[Metrics], net: bool = False) -> ReplicationSummary:
    """Mean and standard error of the replications' average realized profit."""
    vals = [
        (m.net_total_phi_actual if net else m.total_phi_actual) / m.horizon
        for m in metrics
    ]
    n = len(vals)
    mean = sum(vals) / n
    se = (
        math.sqrt(sum((v - mean) ** 2 for v in vals) / (n - 1) / n)
        if n > 1
        else float("nan")
    )
    return ReplicationSummary(n=n, mean=mean, se=se, per_rep=vals)


def lyapunov_value(Q0: list[int], theta: list[float]) -> float:
    """Quadratic distance of the initial queues from their thresholds."""
    return 0.5 * sum((q - th) ** 2 for q, th in zip(Q0, theta))


@dataclass
class ProfitBoundReport:
    """Long-run profit of the controller vs the stationary optimum."""

    phi_opt: float
    mean: float
    se: float
    slack: float
    violations: int
    n: int
    passed: bool


def check_profit_bound(
    model: Model,
    process_x: StateProcessSpec,
    process_y: StateProcessSpec,
    V: float,
    horizon: int,
    replications: int,
    seed: int,
) -> ProfitBoundReport:
    """Check mean profit >= stationary optimum - B/V within 3 standard errors.

    Needs state processes with a well-defined stationary distribution (IID
    probabilities or an ergodic Markov chain).
    """
    pi_x = process_distribution(process_x)
    pi_y = process_distribution(process_y)
    phi_opt, _, _ = optimal_profit(model, pi_x, pi_y)
    ec = EpisodeConfig(
        horizon=horizon,
        seed=seed,
        V=V,
        process_x=process_x,
        process_y=process_y,
    )
    runs = run_replications(ec, model, replications)
    s = summarize(runs)
    slack = drift_constant(model) / V
    violations = sum(m.bound_violations for m in runs)
    passed = s.mean >= phi_opt - slack - 3 * s.se and violations == 0
    return ProfitBoundReport(
        phi_opt=phi_opt,
        mean=s.mean,
        se=s.se,
        slack=slack,
        violations=violations,
        n=replications,
        passed=passed,
    )


def process_distribution(spec: StateProcessSpec) -> np.ndarray:
    if spec.mode == IID:
        return np.asarray(spec.probs, dtype=float)
    if spec.mode == MARKOV:
        return stationary_distribution(spec)
    raise ValueError("trace processes have no stationary distribution")


@dataclass
class FrameBoundReport:
    """Controller profit vs per-frame lookahead values on a fixed trace."""

    frame_values: list[float]
    frame_mean: float
    drift_term: float
    init_term: float
    bound: float
    mean: float
    se: float
    passed: bool


def check_frame_bound(
    model: Model,
    xs,
    ys,
    V: float,
    T: int,
    J: int,
    replications: int = 16,
    seed: int = 0,
) -> FrameBoundReport:
    """Compare mean controller profit on a trace against frame lookaheads.

    The trace is split into J frames of T slots.  The controller's mean
    per-slot profit over the whole trace must reach the mean per-slot
    lookahead value minus B*T/V and minus the initial-condition term spread
    over the trace, within 3 standard errors of the replication mean.
    """
    xs = list(xs)
    ys = list(ys)
    if len(xs) < J * T or len(ys) < J * T:
        raise ValueError("trace shorter than J*T slots")
    xs = xs[: J * T]
    ys = ys[: J * T]
    spec_x = StateProcessSpec(
        mode="TRACE", state_ids=[x.id for x in model.supply_states], trace=xs
    )
    spec_y = StateProcessSpec(
        mode="TRACE", state_ids=[y.id for y in model.demand_states], trace=ys
    )
    ec = EpisodeConfig(
        horizon=J * T, seed=seed, V=V, process_x=spec_x, process_y=spec_y
    )
    runs = run_replications(ec, model, replications)
    s = summarize(runs)

    frames = [
        lookahead_value(model, xs[j * T : (j + 1) * T], ys[j * T : (j + 1) * T]).phi_T
        for j in range(J)
    ]
    frame_mean = sum(frames) / (J * T)
    theta = compute_theta(model.cfg, V)
    q0 = model.mu_max
    drift_term = drift_constant(model) * T / V
    init_term = lyapunov_value(q0, theta) / (V * J * T)
    bound = frame_mean - drift_term - init_term
    passed = s.mean >= bound - 3 * s.se
    return FrameBoundReport(
        frame_values=frames,
        frame_mean=frame_mean,
        drift_term=drift_term,
        init_term=init_term,
        bound=bound,
        mean=s.mean,
        se=s.se,
        passed=passed,
    )


@dataclass
class MarkovBoundReport:
    """Controller profit under Markov states vs the discounted optimum."""

    phi_opt: float
    rhs: float
    mean: float
    se: float
    epsilon: float
    T: int
    passed: bool


def check_markov_bound(
    model: Model,
    process_x: StateProcessSpec,
    process_y: StateProcessSpec,
    V: float,
    epsilon: float,
    T: int,
    horizon: int,
    replications: int = 8,
    seed: int = 0,
) -> MarkovBoundReport:
    """Check the long-run profit bound under Markov-modulated states.

    The caller supplies the decaying-memory parameters (epsilon, T) they
    credit the chains with: over any window of T slots the conditional
    state distribution is assumed within epsilon of stationary.  The
    controller's long-run mean profit must then reach

        phi_opt - T*B/V - epsilon * (1 + sum_m max(theta[m], A_max[m]) / V)

    within 3 standard errors across replications.
    """
    pi_x = process_distribution(process_x)
    pi_y = process_distribution(process_y)
    phi_opt, _, _ = optimal_profit(model, pi_x, pi_y)
    theta = compute_theta(model.cfg, V)
    cfg = model.cfg
    spill = sum(max(theta[m], float(cfg.A_max[m])) for m in range(cfg.M))
    rhs = phi_opt - T * drift_constant(model) / V - epsilon * (1.0 + spill / V)
    ec = EpisodeConfig(
        horizon=horizon,
        seed=seed,
        V=V,
        process_x=process_x,
        process_y=process_y,
    )
    runs = run_replications(ec, model, replications)
    s = summarize(runs)
    passed = s.mean >= rhs - 3 * s.se
    return MarkovBoundReport(
        phi_opt=phi_opt,
        rhs=rhs,
        mean=s.mean,
        se=s.se,
        epsilon=epsilon,
        T=T,
        passed=passed,
    )


def log_header(model: Model) -> list[str]:
    cfg = model.cfg
    cols = ["t", "x_id", "y_id"]
    cols += [f"Q_{m + 1}" for m in range(cfg.M)]
    cols += [f"A_{m + 1}" for m in range(cfg.M)]
    cols += [f"Z_{k + 1}" for k in range(cfg.K)]
    cols += [f"P_{k + 1}" for k in range(cfg.K)]
    cols += [f"D_{k + 1}" for k in range(cfg.K)]
    cols += ["phi", "phi_actual", "avg_phi"]
    return cols


def write_slot_log(path: str, model: Model, metrics: Metrics) -> None:
    """Write the per-slot log as CSV with 9-significant-digit floats."""
    if metrics.log is None:
        raise ValueError("episode was run without record_log")
    with open(path, "w") as fh:
        fh.write(",".join(log_header(model)) + "\n")
        for t, xid, yid, Q, A, Z, P, D, phi, phia, avg in metrics.log:
            cells = [str(t), xid, yid]
            cells += [str(v) for v in Q]
            cells += [str(v) for v in A]
            cells += [str(v) for v in Z]
            cells += [f"{v:.9g}" for v in P]
            cells += [str(v) for v in D]
            cells += [f"{phi:.9g}", f"{phia:.9g}", f"{avg:.9g}"]
            fh.write(",".join(cells) + "\n")
