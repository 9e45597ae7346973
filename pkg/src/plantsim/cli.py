"""Command line front end.

Subcommands:
  simulate    run the online controller on a scenario and report metrics
  oracle      solve the stationary profit program and show the policy
  lookahead   evaluate per-frame clairvoyant values on a trace scenario
  compare     check a profit bound (long-run, frame or Markov form)

Exit codes: 0 success, 1 parse or validation problem, 2 a checked bound
or invariant was violated, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from plantsim.controller import InvariantViolation
from plantsim.model import ConfigError
from plantsim.oracles import (
    extract_xy_policy,
    lookahead_value,
    optimal_profit,
    two_price_reduce,
)
from plantsim.processes import MARKOV, TRACE, TraceExhausted
from plantsim.scenario import ParseError, Scenario, ValidationError, load_scenario
from plantsim.simulator import (
    EpisodeConfig,
    check_frame_bound,
    check_markov_bound,
    check_profit_bound,
    process_distribution,
    run_episode,
    run_replications,
    summarize,
    write_slot_log,
)

_DEF_V = 10.0
_DEF_SLOTS = 10_000
_DEF_SEED = 0
_DEF_REPS = 4


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors to match our exit contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="plantsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--V", type=float, default=None, help="profit weight")
        sp.add_argument("--slots", type=int, default=None, help="episode length")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--replications", type=int, default=None)

    sp = sub.add_parser("simulate", help="run the online controller")
    common(sp)
    sp.add_argument("--placeholder", action="store_true")
    sp.add_argument("--assembly-delay", action="store_true")
    sp.add_argument("--demand-blind", action="store_true")
    sp.add_argument("--out", default=None, help="write per-slot CSV log here")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("oracle", help="stationary optimum and its policy")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("lookahead", help="clairvoyant frame values on a trace")
    common(sp)
    sp.add_argument("--T", type=int, default=None, help="frame length")
    sp.add_argument("--J", type=int, default=None, help="number of frames")
    sp.set_defaults(func=cmd_lookahead)

    sp = sub.add_parser("compare", help="check a profit bound")
    common(sp)
    sp.add_argument("--T", type=int, default=None, help="frame length")
    sp.add_argument("--J", type=int, default=None, help="number of frames")
    sp.add_argument(
        "--epsilon", type=float, default=None, help="mixing tolerance of the chains"
    )
    sp.set_defaults(func=cmd_compare)
    return p


def _pick(flag, scen, default):
    if flag is not None:
        return flag
    if scen is not None:
        return scen
    return default


def _run_settings(args, sc: Scenario):
    V = _pick(args.V, sc.V, _DEF_V)
    slots = _pick(args.slots, sc.horizon, _DEF_SLOTS)
    seed = _pick(args.seed, sc.seed, _DEF_SEED)
    reps = _pick(args.replications, sc.replications, _DEF_REPS)
    return V, slots, seed, reps


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    V, slots, seed, reps = _run_settings(args, sc)
    ec = EpisodeConfig(
        horizon=slots,
        seed=seed,
        V=V,
        process_x=sc.process_x,
        process_y=sc.process_y,
        placeholder=args.placeholder or sc.placeholder,
        assembly_delay=args.assembly_delay or sc.assembly_delay,
        demand_blind=args.demand_blind or sc.demand_blind,
        theta=sc.theta,
        allow_unsafe_theta=sc.unsafe_theta,
        check_bounds=not sc.unsafe_theta,
    )
    runs = run_replications(ec, sc.model, reps)
    s = summarize(runs)
    name = sc.name or args.scenario
    print(f"scenario: {name}")
    print(f"V={V:g} slots={slots} seed={seed} replications={reps}")
    print(f"mean avg profit: {s.mean:.6g}  (se {s.se:.3g})")
    m0 = runs[0]
    for m in range(sc.model.cfg.M):
        lo = min(r.q_min[m] for r in runs)
        hi = max(r.q_max[m] for r in runs)
        print(
            f"material {m + 1}: queue range [{lo}, {hi}], "
            f"band [{m0.q_lower_bound[m]}, {m0.q_upper_bound[m]:g}]"
        )
    print(
        f"max slot drift: {max(r.max_slot_drift for r in runs):g}  "
        f"(bound {m0.drift_bound:g})"
    )
    violations = sum(r.bound_violations for r in runs)
    mismatches = sum(r.phi_mismatch_slots for r in runs)
    print(f"bound violations: {violations}  fulfillment mismatches: {mismatches}")
    if ec.assembly_delay:
        print(f"startup cost: {m0.startup_cost:g}")
        net = summarize(runs, net=True)
        print(f"mean avg profit net of startup: {net.mean:.6g}")
    if args.out:
        logged = run_episode(replace(ec, record_log=True), sc.model)
        write_slot_log(args.out, sc.model, logged)
        print(f"slot log written to {args.out}")
    return 2 if violations else 0


def _stationary(sc: Scenario):
    return (
        process_distribution(sc.process_x),
        process_distribution(sc.process_y),
    )


def cmd_oracle(args) -> int:
    sc = load_scenario(args.scenario)
    V, slots, seed, reps = _run_settings(args, sc)
    pi_x, pi_y = _stationary(sc)
    model = sc.model
    value, plp, sol = optimal_profit(model, pi_x, pi_y)
    policy = extract_xy_policy(plp, sol)
    print(f"stationary optimum: {value:.6g}")
    print(
        f"purchase cost rate: {policy.c_hat:.6g}  revenue rate: {policy.r_hat:.6g}"
    )
    print(
        "material flow (in = out): "
        + " ".join(f"{a:.6g}" for a in policy.a_hat)
    )
    for xi, x in enumerate(model.supply_states):
        parts = [
            f"{tuple(a)} w.p. {p:.4g}" for a, p in policy.purchase_dist[xi]
        ]
        print(f"purchase | x={x.id}: " + "; ".join(parts))
    reduced = two_price_reduce(policy, model)
    for k in range(model.cfg.K):
        for yi, y in enumerate(model.demand_states):
            parts = []
            for z, j, p in policy.price_dist[k][yi]:
                label = "idle" if z == 0 else f"price {model.cfg.price_set[k][j]:g}"
                parts.append(f"{label} w.p. {p:.4g}")
            print(f"offer | product {k + 1}, y={y.id}: " + "; ".join(parts))
            ent = reduced.entries[k][yi]
            parts = []
            for z, j, w in ent.support:
                label = "idle" if z == 0 else f"price {model.cfg.price_set[k][j]:g}"
                parts.append(f"{label} w.p. {w:.4g}")
            print(
                "  two-price form: "
                + "; ".join(parts)
                + f"  (revenue {ent.r_star:.6g}, was {ent.r_orig:.6g})"
            )
    if args.slots is not None:
        ec = EpisodeConfig(
            horizon=slots,
            seed=seed,
            V=V,
            process_x=sc.process_x,
            process_y=sc.process_y,
            controller="oracle",
            oracle_policy=policy,
        )
        runs = run_replications(ec, model, reps)
        s = summarize(runs)
        mm = sum(r.phi_mismatch_slots for r in runs)
        print(
            f"playback over {slots} slots x {reps}: realized {s.mean:.6g} "
            f"(se {s.se:.3g}), nominal LP value {value:.6g}, "
            f"short slots {mm}"
        )
    return 0


def _trace_lists(sc: Scenario):
    if sc.process_x.mode != TRACE or sc.process_y.mode != TRACE:
        raise ValidationError(
            "this command needs a trace scenario (TRACE processes or trace_file)"
        )
    return list(sc.process_x.trace), list(sc.process_y.trace)


def cmd_lookahead(args) -> int:
    sc = load_scenario(args.scenario)
    xs, ys = _trace_lists(sc)
    n = min(len(xs), len(ys))
    T = _pick(args.T, sc.T, n)
    J = _pick(args.J, sc.J, n // T)
    if T <= 0 or J <= 0 or J * T > n:
        raise ValidationError(
            f"frame split T={T} J={J} does not fit the {n}-slot trace"
        )
    total = 0.0
    for j in range(J):
        res = lookahead_value(
            sc.model, xs[j * T : (j + 1) * T], ys[j * T : (j + 1) * T]
        )
        total += res.phi_T
        print(f"frame {j + 1}: value {res.phi_T:.6g}")
    print(f"mean per-slot value over {J} frame(s): {total / (J * T):.6g}")
    return 0


def cmd_compare(args) -> int:
    sc = load_scenario(args.scenario)
    V, slots, seed, reps = _run_settings(args, sc)
    T = _pick(args.T, sc.T, None)
    J = _pick(args.J, sc.J, None)
    epsilon = _pick(args.epsilon, sc.epsilon, None)
    model = sc.model

    if T is not None and J is not None:
        xs, ys = _trace_lists(sc)
        rep = check_frame_bound(
            model, xs, ys, V, T, J, replications=reps, seed=seed
        )
        print("frame values: " + " ".join(f"{v:.6g}" for v in rep.frame_values))
        print(
            f"mean frame value/slot: {rep.frame_mean:.6g}  "
            f"drift term: {rep.drift_term:.6g}  init term: {rep.init_term:.6g}"
        )
        print(f"bound: {rep.bound:.6g}")
        print(f"controller: {rep.mean:.6g} (se {rep.se:.3g})")
        print("PASS" if rep.passed else "FAIL")
        return 0 if rep.passed else 2

    if epsilon is not None:
        if sc.process_x.mode != MARKOV and sc.process_y.mode != MARKOV:
            raise ValidationError("--epsilon applies to Markov-modulated scenarios")
        if T is None:
            raise ValidationError("--epsilon needs --T (the mixing window)")
        rep = check_markov_bound(
            model,
            sc.process_x,
            sc.process_y,
            V,
            epsilon,
            T,
            horizon=slots,
            replications=reps,
            seed=seed,
        )
        print(f"stationary optimum: {rep.phi_opt:.6g}")
        print(f"bound: {rep.rhs:.6g} (epsilon={epsilon:g}, T={T})")
        print(f"controller: {rep.mean:.6g} (se {rep.se:.3g})")
        print("PASS" if rep.passed else "FAIL")
        return 0 if rep.passed else 2

    rep = check_profit_bound(
        model, sc.process_x, sc.process_y, V, slots, reps, seed
    )
    print(f"stationary optimum: {rep.phi_opt:.6g}")
    print(f"allowed gap B/V: {rep.slack:.6g}")
    print(f"controller: {rep.mean:.6g} (se {rep.se:.3g})")
    print(f"queue violations: {rep.violations}")
    print("PASS" if rep.passed else "FAIL")
    return 0 if rep.passed else 2


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as e:
        return int(e.code or 0)
    except InvariantViolation as e:
        print(f"invariant violated: {e}", file=sys.stderr)
        return 2
    except TraceExhausted as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ParseError, ValidationError, ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - safety net
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
