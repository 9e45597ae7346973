import numpy as np
import pytest

from plantsim.model import DemandState, PlantConfig, SupplyState, validate_config
from plantsim.oracles import (
    ActionSpaceTooLarge,
    InstanceTooLarge,
    OraclePolicy,
    brute_force_opt,
    build_profit_lp,
    enumerate_actions,
    extract_xy_policy,
    lookahead_value,
    optimal_profit,
    two_price_reduce,
)
from plantsim.simplex import solve_lp

from conftest import make_i1, make_two_phase, random_tiny_instance


def one(state_count):
    return np.full(state_count, 1.0 / state_count)


def test_enumerate_actions_i1():
    model = make_i1()
    acts = enumerate_actions(model.supply_states[0], model.cfg)
    assert acts == [(0,), (1,), (2,)]


def test_enumerate_actions_budget_prunes():
    cfg = PlantConfig(
        beta=[[1], [1]],
        alpha=[0.0],
        price_set=[[1.0]],
        D_max=[1],
        A_max=[2, 2],
        c_max=2,
    )
    x = SupplyState(id="x", unit_cost=[2, 1], available=[2, 2])
    model_acts = enumerate_actions(x, cfg)
    assert (1, 1) not in model_acts  # cost 3 over budget
    assert (1, 0) in model_acts and (0, 2) in model_acts


def test_action_guard_fires():
    cfg = PlantConfig(
        beta=[[1], [1], [1]],
        alpha=[0.0],
        price_set=[[1.0]],
        D_max=[1],
        A_max=[99, 99, 99],
        c_max=10**9,
    )
    x = SupplyState(id="x", unit_cost=[0, 0, 0], available=[99, 99, 99])
    with pytest.raises(ActionSpaceTooLarge):
        enumerate_actions(x, cfg)


def test_i1_optimum_is_one():
    model = make_i1()
    value, plp, sol = optimal_profit(model, one(1), one(1))
    assert value == pytest.approx(1.0, abs=1e-9)


def test_i1_without_top_price_is_zero():
    cfg = PlantConfig(
        beta=[[1]],
        alpha=[0.0],
        price_set=[[1.0]],
        D_max=[2],
        A_max=[2],
        c_max=2,
    )
    supply = [SupplyState(id="s0", unit_cost=[1], available=[2])]
    demand = [DemandState(id="d0", F=[[2.0]])]
    model = validate_config(cfg, supply, demand)
    value, _, _ = optimal_profit(model, one(1), one(1))
    assert value == pytest.approx(0.0, abs=1e-9)


def test_zero_demand_optimum_is_zero():
    cfg = PlantConfig(
        beta=[[1]],
        alpha=[0.0],
        price_set=[[1.0, 2.0]],
        D_max=[2],
        A_max=[2],
        c_max=2,
    )
    supply = [SupplyState(id="s0", unit_cost=[1], available=[2])]
    demand = [DemandState(id="d0", F=[[0.0, 0.0]])]
    model = validate_config(cfg, supply, demand)
    value, _, _ = optimal_profit(model, one(1), one(1))
    assert value == pytest.approx(0.0, abs=1e-9)


def test_zero_budget_optimum_is_zero():
    model0 = make_i1()
    cfg = PlantConfig(
        beta=[[1]],
        alpha=[0.0],
        price_set=[[1.0, 2.0]],
        D_max=[2],
        A_max=[2],
        c_max=0,
    )
    model = validate_config(cfg, model0.supply_states, model0.demand_states)
    value, _, _ = optimal_profit(model, one(1), one(1))
    assert value == pytest.approx(0.0, abs=1e-9)


def test_extract_policy_i1_pure():
    model = make_i1()
    value, plp, sol = optimal_profit(model, one(1), one(1))
    pol = extract_xy_policy(plp, sol)
    assert pol.phi == pytest.approx(1.0, abs=1e-9)
    assert pol.c_hat == pytest.approx(1.0)
    assert pol.r_hat == pytest.approx(2.0)
    assert pol.a_hat[0] == pytest.approx(pol.mu_hat[0], abs=1e-9)
    [(action, p)] = pol.purchase_dist[0]
    assert action == (1,) and p == pytest.approx(1.0)
    [(z, j, p)] = pol.price_dist[0][0]
    assert (z, j) == (1, 1) and p == pytest.approx(1.0)


def test_extract_policy_zero_demand_idles():
    cfg = PlantConfig(
        beta=[[1]],
        alpha=[0.0],
        price_set=[[1.0, 2.0]],
        D_max=[2],
        A_max=[2],
        c_max=2,
    )
    supply = [SupplyState(id="s0", unit_cost=[1], available=[2])]
    demand = [DemandState(id="d0", F=[[0.0, 0.0]])]
    model = validate_config(cfg, supply, demand)
    value, plp, sol = optimal_profit(model, one(1), one(1))
    pol = extract_xy_policy(plp, sol)
    assert pol.c_hat == pytest.approx(0.0, abs=1e-9)
    assert pol.r_hat == pytest.approx(0.0, abs=1e-9)
    assert pol.a_hat[0] == pytest.approx(0.0, abs=1e-9)


def test_brute_force_i1():
    model = make_i1()
    res = brute_force_opt(model, one(1), one(1))
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert res.is_pure


def test_brute_force_guard():
    cfg = PlantConfig(
        beta=[[1, 0, 1], [0, 1, 1], [1, 1, 0]],
        alpha=[0.0, 0.0, 0.0],
        price_set=[[1.0], [1.0], [1.0]],
        D_max=[1, 1, 1],
        A_max=[1, 1, 1],
        c_max=3,
    )
    supply = [SupplyState(id="s0", unit_cost=[1, 1, 1], available=[1, 1, 1])]
    demand = [DemandState(id="d0", F=[[1.0], [1.0], [1.0]])]
    model = validate_config(cfg, supply, demand)
    with pytest.raises(InstanceTooLarge):
        brute_force_opt(model, one(1), one(1))


def test_lp_vs_brute_force_tiny_instances(rng):
    pure_hits = 0
    for _ in range(20):
        model, pi_x, pi_y = random_tiny_instance(rng)
        value, _, _ = optimal_profit(model, pi_x, pi_y)
        res = brute_force_opt(model, pi_x, pi_y)
        assert value >= res.value - 1e-6
        if res.is_pure:
            pure_hits += 1
            assert value == pytest.approx(res.pure_value, abs=1e-6)
    assert pure_hits > 0  # the sample must actually exercise the pure branch


def test_monotone_in_price_set_and_caps(rng):
    for _ in range(10):
        model, pi_x, pi_y = random_tiny_instance(rng)
        base, _, _ = optimal_profit(model, pi_x, pi_y)
        cfg = model.cfg
        # add a higher price everywhere (demand 0 there keeps tables valid)
        price_set = [ps + [ps[-1] + 1.0] for ps in cfg.price_set]
        demand = [
            DemandState(id=y.id, F=[row + [0.0] for row in y.F])
            for y in model.demand_states
        ]
        cfg2 = PlantConfig(
            beta=cfg.beta,
            alpha=cfg.alpha,
            price_set=price_set,
            D_max=cfg.D_max,
            A_max=cfg.A_max,
            c_max=cfg.c_max,
        )
        m2 = validate_config(cfg2, model.supply_states, demand)
        wider, _, _ = optimal_profit(m2, pi_x, pi_y)
        assert wider >= base - 1e-9
        cfg3 = PlantConfig(
            beta=cfg.beta,
            alpha=cfg.alpha,
            price_set=cfg.price_set,
            D_max=cfg.D_max,
            A_max=[a + 1 for a in cfg.A_max],
            c_max=cfg.c_max,
        )
        m3 = validate_config(cfg3, model.supply_states, model.demand_states)
        bigger, _, _ = optimal_profit(m3, pi_x, pi_y)
        assert bigger >= base - 1e-9


# --- two-price reduction --------------------------------------------------


def test_two_price_i1_extracted_policy():
    model = make_i1()
    _, plp, sol = optimal_profit(model, one(1), one(1))
    pol = extract_xy_policy(plp, sol)
    red = two_price_reduce(pol, model)
    ent = red.entries[0][0]
    assert len(ent.support) <= 2
    assert ent.d_target == pytest.approx(1.0)
    assert ent.r_star >= ent.r_orig - 1e-9


def _policy_with_mix(model, weights_by_ky):
    """Build a policy object holding just the offer distributions."""
    K = model.cfg.K
    price_dist = [
        [weights_by_ky[k][yi] for yi in range(len(model.demand_states))]
        for k in range(K)
    ]
    return OraclePolicy(
        purchase_dist=[],
        price_dist=price_dist,
        c_hat=0.0,
        r_hat=0.0,
        a_hat=[0.0] * model.cfg.M,
        mu_hat=[0.0] * model.cfg.M,
        phi=0.0,
    )


def test_two_price_half_idle_target():
    model = make_i1()
    pol = _policy_with_mix(model, [[[(0, -1, 0.5), (1, 1, 0.5)]]])
    red = two_price_reduce(pol, model)
    ent = red.entries[0][0]
    # target d = 0.5; hull segment from idle to (z=1, p=2) with equal weights
    assert ent.d_target == pytest.approx(0.5)
    assert ent.r_star == pytest.approx(1.0)
    assert sorted((z, j) for z, j, _ in ent.support) == [(0, -1), (1, 1)]
    for _, _, w in ent.support:
        assert w == pytest.approx(0.5)


def test_two_price_idle_target():
    model = make_i1()
    pol = _policy_with_mix(model, [[[(0, -1, 1.0)]]])
    red = two_price_reduce(pol, model)
    ent = red.entries[0][0]
    assert ent.d_target == pytest.approx(0.0)
    assert len(ent.support) == 1
    assert ent.support[0][2] == pytest.approx(1.0)


def test_two_price_vertex_unchanged():
    model = make_i1()
    pol = _policy_with_mix(model, [[[(1, 1, 1.0)]]])
    red = two_price_reduce(pol, model)
    ent = red.entries[0][0]
    assert len(ent.support) == 1
    z, j, w = ent.support[0]
    assert (z, j) == (1, 1) and w == pytest.approx(1.0)
    assert ent.r_star == pytest.approx(2.0)


def test_two_price_random_policies(rng):
    for _ in range(20):
        model, pi_x, pi_y = random_tiny_instance(rng)
        K = model.cfg.K
        weights = []
        for k in range(K):
            per_y = []
            for yi in range(len(model.demand_states)):
                opts = [(0, -1)] + [
                    (1, j) for j in range(len(model.cfg.price_set[k]))
                ]
                w = rng.uniform(0.05, 1.0, size=len(opts))
                w = w / w.sum()
                per_y.append(
                    [(z, j, float(p)) for (z, j), p in zip(opts, w)]
                )
            weights.append(per_y)
        pol = _policy_with_mix(model, weights)
        red = two_price_reduce(pol, model)
        for k in range(K):
            for yi in range(len(model.demand_states)):
                ent = red.entries[k][yi]
                assert len(ent.support) <= 2
                F = model.demand_states[yi].F[k]
                d_of = lambda z, j: 0.0 if z == 0 else F[j]
                d_back = sum(w * d_of(z, j) for z, j, w in ent.support)
                assert d_back == pytest.approx(ent.d_target, abs=1e-9)
                assert ent.r_star >= ent.r_orig - 1e-9
                wsum = sum(w for _, _, w in ent.support)
                assert wsum == pytest.approx(1.0, abs=1e-9)


# --- lookahead ------------------------------------------------------------


def test_lookahead_zero_demand_idles():
    cfg = PlantConfig(
        beta=[[1]],
        alpha=[0.0],
        price_set=[[1.0, 2.0]],
        D_max=[2],
        A_max=[2],
        c_max=2,
    )
    supply = [SupplyState(id="s0", unit_cost=[1], available=[2])]
    demand = [DemandState(id="d0", F=[[0.0, 0.0]])]
    model = validate_config(cfg, supply, demand)
    res = lookahead_value(model, [0, 0, 0], [0, 0, 0])
    assert res.phi_T == pytest.approx(0.0, abs=1e-9)


def test_lookahead_single_slot_i1():
    model = make_i1()
    res = lookahead_value(model, [0], [0])
    assert res.phi_T == pytest.approx(1.0, abs=1e-9)


def test_lookahead_exploits_cross_slot_storage():
    cfg = PlantConfig(
        beta=[[1]],
        alpha=[0.0],
        price_set=[[1.0, 2.0]],
        D_max=[2],
        A_max=[2],
        c_max=2,
    )
    supply = [
        SupplyState(id="open", unit_cost=[1], available=[2]),
        SupplyState(id="closed", unit_cost=[1], available=[0]),
    ]
    demand = [
        DemandState(id="cold", F=[[0.0, 0.0]]),
        DemandState(id="hot", F=[[2.0, 1.0]]),
    ]
    model = validate_config(cfg, supply, demand)
    # slot 1: material available, no demand; slot 2: demand, no material
    res = lookahead_value(model, [0, 1], [0, 1])
    assert res.phi_T == pytest.approx(1.0, abs=1e-9)
    # each slot alone is worthless
    assert lookahead_value(model, [0], [0]).phi_T == pytest.approx(0.0, abs=1e-9)
    assert lookahead_value(model, [1], [1]).phi_T == pytest.approx(0.0, abs=1e-9)


def test_lookahead_nonnegative_on_random_frames(rng):
    model = make_two_phase()
    for _ in range(10):
        xs = rng.integers(0, 2, size=4).tolist()
        ys = rng.integers(0, 2, size=4).tolist()
        res = lookahead_value(model, xs, ys)
        assert res.phi_T >= -1e-9
