"""Acceptance criteria, one test per criterion.

Each test records PASS/FAIL with a short measurement through ``criteria.record``;
the conftest hook prints the table at the end of the session. Run directly with
``python tests/test_acceptance.py``.
"""
import copy
import os
import sys
import time
import warnings

import numpy as np
import pytest

from criteria import record
from oracles import brute_force_small, central_differences

from mmwave_udn.baseline import run_max_sinr
from mmwave_udn.channel import build_gain_matrix
from mmwave_udn.cli import run_experiment
from mmwave_udn.power import link_derivatives
from mmwave_udn.scenario import blockage_profile, desk_profile, generate_topology, paper_profile
from mmwave_udn.solver import (Problem, SolverConfig, initial_state, objective, run_solver,
                               served_quantities, solver_step)


def solve_both(cfg):
    topo = generate_topology(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        G = build_gain_matrix(topo, cfg)
    t0 = time.perf_counter()
    grad, grad_rep = run_solver(topo, G, cfg)
    elapsed = time.perf_counter() - t0
    base, base_rep = run_max_sinr(topo, G, cfg)
    return dict(topo=topo, G=G, cfg=cfg, grad=grad, grad_rep=grad_rep, base=base,
                base_rep=base_rep, seconds=elapsed)


@pytest.fixture(scope="module")
def desk():
    return solve_both(desk_profile())


@pytest.fixture(scope="module")
def blocked():
    return solve_both(blockage_profile())


def qos_spectral_radius(X, G, cfg):
    """Spectral radius of the normalized cross-BS interference matrix for association X.

    Served powers meeting SINR >= 2**R - 1 for every user exist (ignoring
    budgets) only when this is below 1.
    """
    assign = np.argmax(X, axis=1)
    g = G.user_bs
    own = g[np.arange(len(assign)), assign]
    F = (2.0 ** cfg.qos_rate - 1.0) * g[:, assign] / own[:, None]
    F[assign[:, None] == assign[None, :]] = 0.0
    return float(np.max(np.abs(np.linalg.eigvals(F))))


def test_c1_load_balancing(desk):
    g_load, b_load = desk["grad_rep"].per_bs_load, desk["base_rep"].per_bs_load
    macro_ok = g_load[0] < 0.5 * b_load[0]
    std_ok = g_load.std() < b_load.std()
    fast = desk["seconds"] < 30
    ok = record(1, macro_ok and std_ok and fast,
                f"macro {g_load[0]} vs {b_load[0]} users, load std {g_load.std():.3f} vs "
                f"{b_load.std():.3f}, {desk['seconds']:.2f} s")
    assert macro_ok and fast
    assert std_ok, f"load std {g_load.std():.3f} not below MAX-SINR {b_load.std():.3f}"
    assert ok


def test_c2_energy_efficiency_gain(desk):
    ratio = desk["grad_rep"].aggregate_ee / desk["base_rep"].aggregate_ee
    detail = f"desk EE ratio {ratio:.1f}x (need >= 3)"
    ok = ratio >= 3.0
    if os.environ.get("MMWAVE_UDN_PAPER_SCALE") == "1":
        paper = solve_both(paper_profile())
        p_ratio = paper["grad_rep"].aggregate_ee / paper["base_rep"].aggregate_ee
        detail += f"; paper scale {p_ratio:.1f}x (need >= 5)"
        ok = ok and p_ratio >= 5.0
    record(2, ok, detail)
    assert ok


def test_c3_convergence(desk):
    u = np.array(desk["grad"].utility_trace)
    rel = np.abs(np.diff(u)) / np.abs(u[1:])
    small = rel < 1e-3
    hit = next((t + 4 for t in range(len(small) - 2) if small[t:t + 3].all()), None)
    # trace index k holds iteration k + 1; dips are checked after iteration 5
    late = u[5:]
    worst_dip = float(np.max(np.maximum(late[:-1] - late[1:], 0) / np.abs(late[:-1]),
                             initial=0.0))
    ok = record(3, hit is not None and hit <= 50 and worst_dip <= 0.01,
                f"settled at iteration {hit}, worst late dip {worst_dip:.2%}")
    assert ok


def test_c4_qos_at_termination(desk):
    cfg, grad = desk["cfg"], desk["grad"]
    prob = Problem.build(desk["topo"], desk["G"], cfg)
    _, sinr, *_ = served_quantities(grad.X, grad.P, prob)
    target = 2.0 ** cfg.qos_rate - 1.0
    met = int(np.sum(sinr >= target))
    rho = qos_spectral_radius(grad.X, desk["G"], cfg)
    rho_base = qos_spectral_radius(desk["base"].X, desk["G"], cfg)

    # a sparse instance where the target is reachable
    small = desk_profile(n_small_cells=1, n_users=3)
    topo_s = generate_topology(small)
    G_s = build_gain_matrix(topo_s, small)
    st_s, _ = run_solver(topo_s, G_s, small)
    _, sinr_s, *_ = served_quantities(st_s.X, st_s.P, Problem.build(topo_s, G_s, small))
    small_ok = not st_s.infeasible and bool(np.all(sinr_s >= target))

    desk_ok = not grad.infeasible and met == len(sinr)
    record(4, desk_ok and small_ok,
           f"desk: {met}/{len(sinr)} users meet the target, flagged={grad.infeasible}, "
           f"spectral radius {rho:.3g} (MAX-SINR association {rho_base:.3g}); "
           f"2 BS x 3 users: {'all met' if small_ok else 'violated'}")
    assert small_ok
    # any unflagged termination must meet the target exactly
    assert grad.infeasible or met == len(sinr)
    assert desk_ok, "desk profile terminated with the QoS infeasibility flag set"


def test_c5_constraint_residuals(desk):
    cfg, grad = desk["cfg"], desk["grad"]
    prob = Problem.build(desk["topo"], desk["G"], cfg)
    *_, interf = served_quantities(grad.X, grad.P, prob)
    power_gap = float(((grad.X * grad.P).sum(axis=0) - prob.p_max).max())
    interf_gap = float((interf - cfg.interference_cap_w).max())
    ok = record(5, power_gap <= 1e-9 and interf_gap <= 1e-6,
                f"max power excess {power_gap:.3g} W, max interference excess {interf_gap:.3g} W")
    assert ok


def test_c6_gradient_correctness(desk):
    cfg, grad = desk["cfg"], desk["grad"]
    prob = Problem.build(desk["topo"], desk["G"], cfg)
    ipn = prob.ipn(grad.X, grad.P)
    load = grad.X.sum(axis=0)
    K = load[None, :] + (1.0 - grad.X)
    rng = np.random.default_rng(6)
    ui, uj = np.nonzero(grad.P >= 1e-6)
    pick = rng.choice(ui.size, 100, replace=False)
    worst = 0.0
    for k in pick:
        i, j = ui[k], uj[k]
        args = (ipn[i, j], prob.g[i, j], K[i, j], prob.pc[j], prob.a[j], grad.m.lam[j],
                cfg.bandwidth_hz)
        f1, f2 = link_derivatives(grad.P[i, j], *args)
        d1, d2 = central_differences(grad.P[i, j], *args)
        worst = max(worst, abs(f1 - d1) / abs(d1), abs(f2 - d2) / abs(d2))
    ok = record(6, worst < 1e-4, f"worst relative error {worst:.2e} over 100 desk links")
    assert ok


def test_c7_small_instance_oracle():
    cfg = desk_profile(n_small_cells=1, n_users=3)
    topo = generate_topology(cfg)
    G = build_gain_matrix(topo, cfg)
    t0 = time.perf_counter()
    state, _ = run_solver(topo, G, cfg)
    elapsed = time.perf_counter() - t0
    prob = Problem.build(topo, G, cfg)
    ours = objective(state.X, state.P, prob)
    best, _, _ = brute_force_small(G.user_bs, topo.bs_p_max_w, topo.bs_circuit_w, prob.a,
                                   cfg.noise_w, cfg.bandwidth_hz, cfg.qos_rate)
    gap_ok = ours >= best - 0.02 * abs(best)
    ok = record(7, gap_ok and elapsed < 5,
                f"solver/oracle {ours / best:.4f}, solver {elapsed:.2f} s")
    assert ok


def test_c8_blockage_regression(blocked):
    ratio = blocked["grad_rep"].aggregate_ee / blocked["base_rep"].aggregate_ee
    it = blocked["grad"].iteration
    ok = record(8, ratio >= 3.0 and blocked["grad"].converged and it <= 50,
                f"EE ratio {ratio:.1f}x, converged={blocked['grad'].converged} at iteration {it}")
    assert ok


def test_c9_determinism(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        run_experiment(["--seed", "9", "--out", str(out)])
    csvs = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.csv"))
    same = [(outs[0] / p).read_bytes() == (outs[1] / p).read_bytes() for p in csvs]
    ok = record(9, len(csvs) == 8 and all(same), f"{sum(same)}/{len(csvs)} CSV files identical")
    assert ok


def _step_seconds(n_bs, n_users, seeds, steps=5, reps=3):
    """Sum over seeds and outer steps of the fastest of ``reps`` timings of each step."""
    total = 0.0
    for seed in seeds:
        cfg = desk_profile(n_small_cells=n_bs - 1, n_users=n_users, rng_seed=seed)
        topo = generate_topology(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            prob = Problem.build(topo, build_gain_matrix(topo, cfg), cfg)
        state, scfg = initial_state(prob), SolverConfig()
        for _ in range(steps):
            best = np.inf
            for _ in range(reps):
                trial = copy.deepcopy(state)
                t0 = time.perf_counter()
                solver_step(trial, prob, scfg)
                best = min(best, time.perf_counter() - t0)
            total += best
            state = trial
    return total


def test_c10_complexity_scaling():
    # (62, 240) sits between the overhead-bound and cache-bound regimes
    seeds = range(1, 4)
    base = _step_seconds(62, 240, seeds)
    doubled = _step_seconds(124, 480, seeds)
    ratio = doubled / base
    ok = record(10, 3.0 <= ratio <= 5.0,
                f"per-iteration time x{ratio:.2f} for (62, 240) -> (124, 480)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
