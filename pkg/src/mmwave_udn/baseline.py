"""MAX-SINR association at full transmit power."""
from __future__ import annotations

import numpy as np

from .channel import GainMatrix
from .scenario import ScenarioConfig, Topology
from .solver import Multipliers, Problem, SolverState, record_trace, one_hot, served_quantities


def full_power_sinr(G: GainMatrix, p_max, noise_w: float) -> np.ndarray:
    """SINR of every pair when all BSs radiate their full budget."""
    g = G.user_bs
    p_max = np.asarray(p_max, dtype=float)
    rx = g * p_max[None, :]
    return rx / (rx.sum(axis=1, keepdims=True) - rx + noise_w)


def max_sinr_associate(topo: Topology, G: GainMatrix, cfg: ScenarioConfig):
    """Each user joins its best full-power SINR BS (lowest index on ties);
    every BS splits its budget equally over its users.

    Returns
    -------
    X : ndarray, shape (U, B)
    P : ndarray, shape (U, B)
        Served entries hold the equal share, the rest are zero.
    """
    p_max = np.asarray(topo.bs_p_max_w, dtype=float)
    assign = np.argmax(full_power_sinr(G, p_max, cfg.noise_w), axis=1)
    X = one_hot(assign, topo.n_bs)
    load = X.sum(axis=0)
    P = X * (p_max / np.maximum(load, 1.0))[None, :]
    return X, P


def run_max_sinr(topo: Topology, G: GainMatrix, cfg: ScenarioConfig):
    """Baseline counterpart of :func:`mmwave_udn.solver.run_solver`.

    The association is one-shot, so the trace holds a single row.
    """
    from .metrics import build_report

    X, P = max_sinr_associate(topo, G, cfg)
    prob = Problem.build(topo, G, cfg)
    state = SolverState(X=X, P=P, m=Multipliers.zeros(topo.n_users, topo.n_bs),
                        K=X.sum(axis=0), iteration=1, converged=True)
    record_trace(state, prob)
    _, sinr, *_ = served_quantities(X, P, prob)
    bad = np.flatnonzero(sinr < 2.0 ** cfg.qos_rate - 1.0)
    state.infeasible, state.infeasible_users = bad.size > 0, bad
    return state, build_report(X, P, topo, G, cfg, iterations_to_converge=1)

