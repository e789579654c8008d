"""Net power with BS-to-BS energy harvesting and the per-link power problem.

Each served link ``(i, j)`` carries the objective

    f(p) = ln(W * log2(1 + p g / I) / K_j) / (pc_j + a_j p) - lambda_j p

with ``a_j = 1 - psi * sum_{m != j} g_jm**2`` and interference ``I`` held
fixed. :func:`newton_sweep` maximizes it with signed Newton steps and an
Armijo backtracking line search.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import GainMatrix, harvest_coefficients, interference_matrix, interference_plus_noise
from .errors import DomainError, ModelViolationError
from .scenario import ScenarioConfig

LN2 = np.log(2.0)

ARMIJO_C = 1e-4
BACKTRACK = 0.5
MAX_HALVINGS = 30
CURVATURE_EPS = 1e-12
MIN_REL_STEP = 1e-12   # steps below this fraction of p cannot change f measurably


@dataclass(frozen=True)
class NetPowerBreakdown:
    circuit_w: float
    transmit_w: float
    harvested_w: float
    net_w: float


def default_budgets(cfg: ScenarioConfig, n_bs: int) -> np.ndarray:
    """Per-BS power limits with BS 0 as the macro."""
    p = np.full(n_bs, cfg.p_max_small_w)
    p[0] = cfg.p_max_macro_w
    return p


def _circuit(cfg, n_bs, circuit_w):
    if circuit_w is None:
        return np.full(n_bs, cfg.circuit_power_w)
    return np.broadcast_to(np.asarray(circuit_w, dtype=float), (n_bs,))


def net_power(X, P, G: GainMatrix, cfg: ScenarioConfig, circuit_w=None) -> NetPowerBreakdown:
    """Circuit plus transmit power minus power harvested from other BSs.

    Raises
    ------
    ModelViolationError
        If the net consumption is not strictly positive.
    """
    n_bs = G.bs_bs.shape[0]
    per_bs = (np.asarray(X) * np.asarray(P)).sum(axis=0)
    harvest_frac = 1.0 - harvest_coefficients(G, cfg)
    circuit = float(_circuit(cfg, n_bs, circuit_w).sum())
    transmit = float(per_bs.sum())
    harvested = float(per_bs @ harvest_frac)
    net = circuit + transmit - harvested
    if not net > 0:
        raise ModelViolationError(f"net power {net!r} W is not positive")
    return NetPowerBreakdown(circuit, transmit, harvested, net)


def link_objective(p, ipn, g, K, pc, a, lam, bandwidth_hz):
    """Per-link objective, elementwise over broadcastable arrays."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise DomainError("link power must be positive")
    if np.any(np.asarray(K) <= 0):
        raise DomainError("load must be positive")
    s = np.log1p(p * g / ipn) / LN2
    return np.log(bandwidth_hz * s / K) / (pc + a * p) - lam * p


def link_derivatives(p, ipn, g, K, pc, a, lam, bandwidth_hz):
    """First and second derivatives of :func:`link_objective` in ``p``."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise DomainError("derivatives are singular at p = 0")
    S = p * g / ipn
    s = np.log1p(S) / LN2   # log1p keeps f' accurate at low SINR
    D = pc + a * p
    A = np.log(bandwidth_hz * s / K)
    dA = S / (p * (1.0 + S) * LN2 * s)
    d2A = -(S / p) ** 2 / ((1.0 + S) ** 2 * LN2 * s) * (1.0 + 1.0 / (LN2 * s))
    first = dA / D - a * A / D ** 2 - lam
    second = d2A / D - 2.0 * a * dA / D ** 2 + 2.0 * a * a * A / D ** 3
    return first, second


def newton_direction(first, second):
    """Signed step ``sign(f') |f'| / |f''|``, or ``f'`` where curvature is degenerate."""
    first = np.asarray(first, dtype=float)
    curv = np.abs(np.asarray(second, dtype=float))
    flat = curv < CURVATURE_EPS
    return np.where(flat, first, first / np.where(flat, 1.0, curv))


def newton_sweep(p, ipn, g, K, pc, a, lam, bandwidth_hz, p_cap, n_steps=1):
    """Run ``n_steps`` safeguarded Newton ascent steps on every entry of ``p``.

    The direction is ``sign(f') |f'| / |f''|`` (plain ``f'`` when the
    curvature is degenerate). Each entry backtracks independently until the
    Armijo condition holds; entries that never satisfy it, or whose trial
    step becomes negligible, keep their value.
    Iterates stay inside ``(0, p_cap]``.
    """
    arrays = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                   for v in (p, ipn, g, K, pc, a, lam, p_cap)))
    p, ipn, g, K, pc, a, lam, p_cap = (v.ravel().copy() for v in arrays)
    shape = arrays[0].shape
    args = lambda idx: (ipn[idx], g[idx], K[idx], pc[idx], a[idx], lam[idx], bandwidth_hz)

    for _ in range(n_steps):
        f1, f2 = link_derivatives(p, *args(slice(None)))
        step = newton_direction(f1, f2)
        f0 = link_objective(p, *args(slice(None)))
        pending = np.flatnonzero(np.abs(step) > MIN_REL_STEP * p)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            if pending.size == 0:
                break
            cand = np.minimum(p[pending] + t * step[pending], p_cap[pending])
            ok = cand > 0
            fc = np.full(pending.size, -np.inf)
            if ok.any():
                fc[ok] = link_objective(cand[ok], *args(pending[ok]))
            accept = ok & (fc >= f0[pending] + ARMIJO_C * f1[pending] * (cand - p[pending]))
            p[pending[accept]] = cand[accept]
            t *= BACKTRACK
            pending = pending[~accept]
            pending = pending[np.abs(t * step[pending]) > MIN_REL_STEP * p[pending]]
    return p.reshape(shape)


def power_objective(P, X, K, lam, G: GainMatrix, cfg: ScenarioConfig,
                    p_max=None, circuit_w=None) -> float:
    """Sum of per-link utilities over served links plus the budget price term.

    ``K`` is the per-BS load used in the log argument; interference is
    evaluated at the current ``(X, P)``.
    """
    X = np.asarray(X)
    P = np.asarray(P, dtype=float)
    n_bs = G.bs_bs.shape[0]
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (n_bs,))
    p_max = default_budgets(cfg, n_bs) if p_max is None else np.asarray(p_max, dtype=float)
    total = float(lam @ (p_max - (X * P).sum(axis=0)))
    ui, uj = np.nonzero(X)
    if ui.size == 0:
        return total
    ipn = interference_matrix(X, P, G, cfg.noise_w)[ui, uj]
    pc = _circuit(cfg, n_bs, circuit_w)[uj]
    a = harvest_coefficients(G, cfg)[uj]
    K = np.asarray(K, dtype=float)[uj]
    util = link_objective(P[ui, uj], ipn, G.user_bs[ui, uj], K, pc, a, 0.0, cfg.bandwidth_hz)
    return total + float(util.sum())


def power_gradient(P, X, K, lam, G: GainMatrix, cfg: ScenarioConfig, circuit_w=None):
    """First and second derivatives for every served link, zero elsewhere."""
    X = np.asarray(X)
    P = np.asarray(P, dtype=float)
    n_bs = G.bs_bs.shape[0]
    ui, uj = np.nonzero(X)
    first, second = np.zeros(P.shape), np.zeros(P.shape)
    if ui.size:
        ipn = interference_matrix(X, P, G, cfg.noise_w)[ui, uj]
        lam = np.broadcast_to(np.asarray(lam, dtype=float), (n_bs,))
        f1, f2 = link_derivatives(
            P[ui, uj], ipn, G.user_bs[ui, uj], np.asarray(K, dtype=float)[uj],
            _circuit(cfg, n_bs, circuit_w)[uj], harvest_coefficients(G, cfg)[uj],
            lam[uj], cfg.bandwidth_hz)
        first[ui, uj], second[ui, uj] = f1, f2
    return first, second


def qos_floor(ipn, g, rate_target):
    """Smallest power giving SINR ``2**rate_target - 1`` against ``ipn``."""
    return np.asarray(ipn) / np.asarray(g) * (2.0 ** rate_target - 1.0)


def qos_power_floor(i, j, G: GainMatrix, P, X, cfg: ScenarioConfig) -> float:
    return float(qos_floor(interference_plus_noise(i, j, P, X, G, cfg),
                           G.user_bs[i, j], cfg.qos_rate))


def project_bs_budget(P, X, p_max) -> np.ndarray:
    """Scale each over-budget BS's served powers down uniformly to its limit."""
    X = np.asarray(X)
    P = np.asarray(P, dtype=float)
    total = (X * P).sum(axis=0)
    p_max = np.asarray(p_max, dtype=float)
    scale = np.ones_like(total)
    over = total > p_max
    scale[over] = p_max[over] / total[over]
    return np.where(X != 0, P * scale[None, :], P)


def newton_power_step(P, X, K, lam, G: GainMatrix, cfg: ScenarioConfig,
                      p_max=None, circuit_w=None, n_steps=1):
    """Newton steps on served links, then QoS floors and budget projection.

    Returns the new power matrix and a boolean mask of served users whose
    floor could not be honoured because the budget projection was active.
    """
    X = np.asarray(X)
    P = np.array(P, dtype=float)
    n_bs = G.bs_bs.shape[0]
    p_max = default_budgets(cfg, n_bs) if p_max is None else np.asarray(p_max, dtype=float)
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (n_bs,))
    ui, uj = np.nonzero(X)
    if ui.size == 0:
        return P, np.zeros(P.shape[0], dtype=bool)
    ipn = interference_matrix(X, P, G, cfg.noise_w)[ui, uj]
    g = G.user_bs[ui, uj]
    P[ui, uj] = newton_sweep(
        P[ui, uj], ipn, g, np.asarray(K, dtype=float)[uj], _circuit(cfg, n_bs, circuit_w)[uj],
        harvest_coefficients(G, cfg)[uj], lam[uj], cfg.bandwidth_hz, p_max[uj], n_steps)
    ipn = interference_matrix(X, P, G, cfg.noise_w)[ui, uj]
    P[ui, uj] = np.maximum(P[ui, uj], qos_floor(ipn, g, cfg.qos_rate))
    floored = P[ui, uj].copy()
    P = project_bs_budget(P, X, p_max)
    short = np.zeros(P.shape[0], dtype=bool)
    short[ui] = P[ui, uj] < floored
    return P, short
