"""Iterative dual-decomposition solver for joint association and power.

One iteration:

1. score every (user, BS) pair and associate each user with its best BS;
2. update load targets and the four multiplier families by projected
   subgradient steps;
3. run Newton power steps on every link (served links with the realized
   load, candidate links with the load they would see after joining);
4. raise served links to their QoS floor and project onto the BS budgets.

Multiplier steps are scaled by the current net power (and by the squared
constraint scale for the power and interference prices) so the base step
sizes are dimensionless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .channel import GainMatrix, harvest_coefficients, interference_matrix
from .power import LN2, net_power, newton_sweep, project_bs_budget, qos_floor
from .scenario import ScenarioConfig, Topology

TRACE_COLUMNS = ("iter", "objective", "net_power_w", "sum_rate_bps", "max_bs_load",
                 "power_residual", "qos_residual", "interference_residual")


@dataclass(frozen=True)
class StepSchedule:
    """``base / sqrt(t)`` (kind ``"sqrt"``) or ``base`` (kind ``"constant"``)."""

    base: float = 0.1
    kind: str = "sqrt"

    def __post_init__(self):
        if not self.base > 0:
            raise ValueError("step base must be positive")
        if self.kind not in ("sqrt", "constant"):
            raise ValueError(f"unknown schedule {self.kind!r}")

    def __call__(self, t: int) -> float:
        return self.base / math.sqrt(t) if self.kind == "sqrt" else self.base


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 100
    step_mu: StepSchedule = StepSchedule()
    step_lambda: StepSchedule = StepSchedule()
    step_nu: StepSchedule = StepSchedule()
    step_tau: StepSchedule = StepSchedule()
    convergence_tol: float = 1e-4
    inner_newton_steps: int = 10
    patience: int = 3
    polish_iters: int = 500

    def __post_init__(self):
        if self.max_iters < 1 or self.inner_newton_steps < 1 or self.patience < 1:
            raise ValueError("iteration counts must be positive")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")


@dataclass
class Multipliers:
    mu: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    tau: np.ndarray

    @classmethod
    def zeros(cls, n_users: int, n_bs: int) -> "Multipliers":
        return cls(np.zeros(n_bs), np.zeros(n_bs), np.zeros(n_users), np.zeros(n_bs))


class TraceRow(NamedTuple):
    iter: int
    objective: float
    net_power_w: float
    sum_rate_bps: float
    max_bs_load: int
    power_residual: float
    qos_residual: float
    interference_residual: float


@dataclass
class SolverState:
    X: np.ndarray
    P: np.ndarray
    m: Multipliers
    K: np.ndarray
    iteration: int = 0
    trace: list = field(default_factory=list)
    ee_trace: list = field(default_factory=list)
    load_trace: list = field(default_factory=list)
    converged: bool = False
    infeasible: bool = False
    infeasible_users: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def utility_trace(self) -> list:
        return [row.objective for row in self.trace]

    @property
    def assignment(self) -> np.ndarray:
        return np.argmax(self.X, axis=1)


@dataclass(frozen=True)
class Problem:
    """Arrays shared by every iteration of one solve."""

    g: np.ndarray
    G: GainMatrix
    cfg: ScenarioConfig
    p_max: np.ndarray
    pc: np.ndarray
    a: np.ndarray

    @classmethod
    def build(cls, topo: Topology, G: GainMatrix, cfg: ScenarioConfig) -> "Problem":
        return cls(G.user_bs, G, cfg, np.asarray(topo.bs_p_max_w, dtype=float),
                   np.asarray(topo.bs_circuit_w, dtype=float), harvest_coefficients(G, cfg))

    @property
    def n_users(self) -> int:
        return self.g.shape[0]

    @property
    def n_bs(self) -> int:
        return self.g.shape[1]

    def net_w(self, X, P) -> float:
        return net_power(X, P, self.G, self.cfg, circuit_w=self.pc).net_w

    def ipn(self, X, P) -> np.ndarray:
        return interference_matrix(X, P, self.G, self.cfg.noise_w)


def one_hot(assign, n_bs: int) -> np.ndarray:
    X = np.zeros((len(assign), n_bs))
    X[np.arange(len(assign)), assign] = 1.0
    return X


def score_matrix(ipn, P, m: Multipliers, net_w: float, prob: Problem) -> np.ndarray:
    """Association score of every (user, BS) pair at the given interference."""
    cfg = prob.cfg
    s = np.log1p(P * prob.g / ipn) / LN2
    with np.errstate(divide="ignore"):
        util = np.log(cfg.bandwidth_hz * s) / net_w
    return (util - m.mu[None, :] - m.lam[None, :] * P + m.nu[:, None] * s
            - m.tau[None, :] * (ipn - cfg.noise_w))


def association_score(i, j, state: SolverState, prob: Problem) -> float:
    ipn = prob.ipn(state.X, state.P)
    net_w = prob.net_w(state.X, state.P)
    return float(score_matrix(ipn, state.P, state.m, net_w, prob)[i, j])


def associate_users(scores) -> np.ndarray:
    """Binary association from a score matrix; ties go to the lowest BS index."""
    scores = np.asarray(scores, dtype=float)
    return one_hot(np.argmax(scores, axis=1), scores.shape[1])


def update_load_targets(mu, net_w: float, n_users: int) -> np.ndarray:
    """``exp(mu * U_P - 1)`` clamped to ``[0, n_users]``."""
    with np.errstate(over="ignore"):
        K = np.exp(np.asarray(mu, dtype=float) * net_w - 1.0)
    return np.clip(np.nan_to_num(K, nan=float(n_users), posinf=float(n_users)), 0.0, n_users)


def update_multipliers(m: Multipliers, *, K, load, bs_power, p_max, spectral_eff, rate_target,
                       bs_interference, interference_cap, steps) -> Multipliers:
    """Projected subgradient step. ``steps`` is ``(d_mu, d_lam, d_nu, d_tau)``;
    each entry may be a scalar or a per-element array."""
    d_mu, d_lam, d_nu, d_tau = steps
    return Multipliers(
        mu=m.mu - d_mu * (np.asarray(K) - np.asarray(load)),
        lam=np.maximum(m.lam - d_lam * (np.asarray(p_max) - np.asarray(bs_power)), 0.0),
        nu=np.maximum(m.nu - d_nu * (np.asarray(spectral_eff) - rate_target), 0.0),
        tau=np.maximum(m.tau - d_tau * (interference_cap - np.asarray(bs_interference)), 0.0),
    )


def served_quantities(X, P, prob: Problem):
    """Per-user serving BS, SINR, spectral efficiency and rate; per-BS load and
    received interference over the BS's users."""
    assign = np.argmax(X, axis=1)
    rows = np.arange(prob.n_users)
    ipn = prob.ipn(X, P)[rows, assign]
    sinr = P[rows, assign] * prob.g[rows, assign] / ipn
    se = np.log1p(sinr) / LN2
    load = np.bincount(assign, minlength=prob.n_bs)
    rate = prob.cfg.bandwidth_hz / np.maximum(load[assign], 1) * se
    interf = np.bincount(assign, ipn - prob.cfg.noise_w, minlength=prob.n_bs)
    return assign, sinr, se, load, rate, interf


def objective(X, P, prob: Problem) -> float:
    """Sum over users of ``log(rate)`` divided by net power."""
    *_, rate, _ = served_quantities(X, P, prob)
    return float(np.log(rate).sum() / prob.net_w(X, P))


def record_trace(state: SolverState, prob: Problem) -> None:
    X, P = state.X, state.P
    assign, sinr, se, load, rate, interf = served_quantities(X, P, prob)
    net_w = prob.net_w(X, P)
    bs_p = (X * P).sum(axis=0)
    state.trace.append(TraceRow(
        iter=state.iteration,
        objective=float(np.log(rate).sum() / net_w),
        net_power_w=net_w,
        sum_rate_bps=float(rate.sum()),
        max_bs_load=int(load.max()),
        power_residual=float((bs_p - prob.p_max).max()),
        qos_residual=float((prob.cfg.qos_rate - se).max()),
        interference_residual=float((interf - prob.cfg.interference_cap_w).max()),
    ))
    state.ee_trace.append(float(rate.sum() / net_w))
    state.load_trace.append(load)


def initial_state(prob: Problem) -> SolverState:
    U, B = prob.n_users, prob.n_bs
    P = np.full((U, B), prob.cfg.initial_power_w)
    # Start from the strongest-gain association so U_P is defined at t = 1.
    X = one_hot(np.argmax(prob.g, axis=1), B)
    return SolverState(X=X, P=P, m=Multipliers.zeros(U, B),
                       K=update_load_targets(np.zeros(B), 1.0, U))


def solver_step(state: SolverState, prob: Problem, scfg: SolverConfig) -> SolverState:
    """Advance ``state`` by one outer iteration (in place) and return it."""
    cfg, g = prob.cfg, prob.g
    t = state.iteration + 1
    rows = np.arange(prob.n_users)

    ipn = prob.ipn(state.X, state.P)
    net_w = prob.net_w(state.X, state.P)
    X = associate_users(score_matrix(ipn, state.P, state.m, net_w, prob))
    assign = np.argmax(X, axis=1)
    load = np.bincount(assign, minlength=prob.n_bs)

    P = state.P
    ipn = prob.ipn(X, P)
    se = np.log1p(P[rows, assign] * g[rows, assign] / ipn[rows, assign]) / LN2
    interf = np.bincount(assign, ipn[rows, assign] - cfg.noise_w, minlength=prob.n_bs)
    K_next = update_load_targets(state.m.mu, net_w, prob.n_users)
    state.m = update_multipliers(
        state.m, K=state.K, load=load, bs_power=(X * P).sum(axis=0), p_max=prob.p_max,
        spectral_eff=se, rate_target=cfg.qos_rate, bs_interference=interf,
        interference_cap=cfg.interference_cap_w,
        steps=(scfg.step_mu(t) / net_w,
               scfg.step_lambda(t) / (net_w * prob.p_max ** 2),
               scfg.step_nu(t) / net_w,
               scfg.step_tau(t) / (net_w * cfg.interference_cap_w ** 2)))
    state.K = K_next

    # Newton on every pair; a candidate link sees the load it would join.
    link_load = load[None, :] + (1.0 - X)
    P = newton_sweep(P, ipn, g, link_load, prob.pc[None, :], prob.a[None, :],
                     state.m.lam[None, :], cfg.bandwidth_hz, prob.p_max[None, :],
                     scfg.inner_newton_steps)

    ipn = prob.ipn(X, P)
    floor = qos_floor(ipn[rows, assign], g[rows, assign], cfg.qos_rate)
    P[rows, assign] = np.minimum(np.maximum(P[rows, assign], floor), prob.p_max[assign])
    P = project_bs_budget(P, X, prob.p_max)

    state.X, state.P, state.iteration = X, P, t
    record_trace(state, prob)
    return state


def _has_converged(trace, tol: float, patience: int) -> bool:
    if len(trace) <= patience:
        return False
    u = np.array([row.objective for row in trace[-patience - 1:]])
    rel = np.abs(np.diff(u)) / np.maximum(np.abs(u[1:]), np.finfo(float).tiny)
    return bool(np.all(rel < tol))


def qos_polish(X, P, prob: Problem, max_iters: int = 500):
    """Raise served powers to the fixed point of ``p = max(p, floor(p))``.

    Returns the polished power matrix, or ``None`` when the iteration leaves
    the BS budgets or fails to settle (no feasible power vector exists for
    this association).
    """
    cfg, g = prob.cfg, prob.g
    rows = np.arange(prob.n_users)
    assign = np.argmax(X, axis=1)
    P = P.copy()
    base = P[rows, assign].copy()
    target = 2.0 ** cfg.qos_rate - 1.0
    for _ in range(max_iters):
        ipn = prob.ipn(X, P)[rows, assign]
        # A relative margin keeps the exact SINR check on the right side of rounding.
        new = np.maximum(base, qos_floor(ipn, g[rows, assign], cfg.qos_rate) * (1 + 1e-9))
        P[rows, assign] = new
        if np.any(np.bincount(assign, new, minlength=prob.n_bs) > prob.p_max):
            return None
        sinr = new * g[rows, assign] / prob.ipn(X, P)[rows, assign]
        if np.all(sinr >= target):
            return P
        base = new
    return None


def solver_iterations(topo: Topology, G: GainMatrix, cfg: ScenarioConfig,
                      scfg: SolverConfig | None = None) -> Iterator[SolverState]:
    """Yield the state after each outer iteration until convergence or ``max_iters``."""
    scfg = scfg or SolverConfig()
    prob = Problem.build(topo, G, cfg)
    state = initial_state(prob)
    while state.iteration < scfg.max_iters:
        solver_step(state, prob, scfg)
        state.converged = _has_converged(state.trace, scfg.convergence_tol, scfg.patience)
        yield state
        if state.converged:
            break


def finalize(state: SolverState, prob: Problem, scfg: SolverConfig) -> SolverState:
    """Enforce QoS at termination when possible, otherwise flag the violators."""
    polished = qos_polish(state.X, state.P, prob, scfg.polish_iters)
    if polished is not None:
        state.P = polished
    _, sinr, *_ = served_quantities(state.X, state.P, prob)
    bad = np.flatnonzero(sinr < 2.0 ** prob.cfg.qos_rate - 1.0)
    state.infeasible = bad.size > 0
    state.infeasible_users = bad
    return state


def run_solver(topo: Topology, G: GainMatrix, cfg: ScenarioConfig,
               scfg: SolverConfig | None = None):
    """Solve one scenario. Returns ``(state, report)``.

    ``state.infeasible`` is set, with ``state.infeasible_users`` listing the
    users below the SINR target, when QoS cannot be met within the budgets.
    """
    from .metrics import build_report

    scfg = scfg or SolverConfig()
    state = None
    for state in solver_iterations(topo, G, cfg, scfg):
        pass
    prob = Problem.build(topo, G, cfg)
    finalize(state, prob, scfg)
    report = build_report(state.X, state.P, topo, G, cfg,
                          iterations_to_converge=state.iteration)
    return state, report
