"""Link gains, interference, SINR and Shannon rates.

Interference seen by user ``i`` on link ``(i, j)`` is the aggregate power
radiated by every other base station ``k`` (the sum of its per-user powers)
times the gain ``g_ik``. Association and power are passed as dense
``(users, BSs)`` arrays ``X`` (binary) and ``P`` (Watts).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModelViolationError
from .scenario import BlockageConfig, ScenarioConfig, Topology, scenario_streams


@dataclass(frozen=True)
class GainMatrix:
    """Power gains. ``user_bs[i, j]``: BS j to user i. ``bs_bs[j, m]``: BS j to BS m."""

    user_bs: np.ndarray
    bs_bs: np.ndarray

    def __post_init__(self):
        for name in ("user_bs", "bs_bs"):
            arr = np.array(getattr(self, name), dtype=float)
            if not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
                raise ModelViolationError(f"{name} gains must be positive and finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.bs_bs.shape != (self.user_bs.shape[1],) * 2:
            raise ValueError("bs_bs must be square with one row per BS")

    @property
    def shape(self):
        return self.user_bs.shape


@dataclass(frozen=True)
class LinkBudget:
    sinr: float
    rate_bps: float
    interference_plus_noise_w: float


def friis_gain(d_m, cfg: ScenarioConfig):
    """Free-space power gain at distance ``d_m`` with exponent ``cfg.pathloss_exponent``."""
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0):
        raise DomainError("distance must be positive")
    g = (cfg.tx_antenna_gain * cfg.rx_antenna_gain * cfg.wavelength_m ** 2
         / (16.0 * np.pi ** 2 * (d / cfg.ref_distance_m) ** cfg.pathloss_exponent))
    return g if g.ndim else float(g)


def blockage_path_loss_db(d_m, link_class: str, blk: BlockageConfig,
                          cfg: ScenarioConfig, shadow_draw=None):
    """LOS/NLOS path loss in dB.

    Parameters
    ----------
    d_m : float or ndarray
        Link distance in meters.
    link_class : {"bs_user", "bs_bs"}
    shadow_draw : float or ndarray, optional
        Standard normal variate(s), scaled by the class shadowing deviation.
        ``None`` or deterministic mode gives 0 dB shadowing.
    """
    if link_class not in ("bs_user", "bs_bs"):
        raise ValueError(f"unknown link class {link_class!r}")
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0):
        raise DomainError("distance must be positive")
    los = d <= blk.los_threshold_m
    eta = np.where(los, blk.exponent(link_class, True), blk.exponent(link_class, False))
    pl = (20.0 * np.log10(4.0 * np.pi * cfg.ref_distance_m / cfg.wavelength_m)
          + 10.0 * eta * np.log10(d / cfg.ref_distance_m))
    if shadow_draw is not None and not blk.deterministic_shadowing:
        std = np.where(los, blk.shadow_std(link_class, True), blk.shadow_std(link_class, False))
        pl = pl + std * np.asarray(shadow_draw, dtype=float)
    return pl if pl.ndim else float(pl)


def _pairwise(a, b):
    diff = a[:, None, :] - b[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def _clamp(d, d0, what):
    close = d < d0
    if np.any(close):
        warnings.warn(f"{int(close.sum())} {what} distance(s) below the reference "
                      f"distance clamped to {d0} m", RuntimeWarning, stacklevel=3)
    return np.maximum(d, d0)


def build_gain_matrix(topo: Topology, cfg: ScenarioConfig) -> GainMatrix:
    """Gains for every user-BS and BS-BS pair of ``topo``."""
    d0 = cfg.ref_distance_m
    d_ub = _clamp(_pairwise(topo.user_xy, topo.bs_xy), d0, "user-BS")
    d_bb = _pairwise(topo.bs_xy, topo.bs_xy)
    np.fill_diagonal(d_bb, d0)
    d_bb = _clamp(d_bb, d0, "BS-BS")

    blk = cfg.blockage
    if blk is None:
        g_ub, g_bb = friis_gain(d_ub, cfg), friis_gain(d_bb, cfg)
    else:
        _, rng = scenario_streams(cfg.rng_seed)
        z_ub = rng.standard_normal(d_ub.shape)
        z_bb = np.triu(rng.standard_normal(d_bb.shape), 1)
        z_bb = z_bb + z_bb.T        # reciprocal BS-BS shadowing
        antenna = cfg.tx_antenna_gain * cfg.rx_antenna_gain
        g_ub = antenna * 10.0 ** (-blockage_path_loss_db(d_ub, "bs_user", blk, cfg, z_ub) / 10.0)
        g_bb = antenna * 10.0 ** (-blockage_path_loss_db(d_bb, "bs_bs", blk, cfg, z_bb) / 10.0)

    G = GainMatrix(user_bs=g_ub, bs_bs=g_bb)
    if np.any(harvest_coefficients(G, cfg) <= 0):
        raise ModelViolationError("BS-BS gains large enough to make harvesting exceed transmission")
    return G


def harvest_coefficients(G: GainMatrix, cfg: ScenarioConfig) -> np.ndarray:
    """Per-BS ``1 - psi * sum_{m != j} g_jm**2``."""
    sq = G.bs_bs ** 2
    return 1.0 - cfg.harvest_eff * (sq.sum(axis=1) - np.diag(sq))


def bs_power(X, P) -> np.ndarray:
    """Aggregate transmit power of every BS over its served users."""
    return (np.asarray(X) * np.asarray(P)).sum(axis=0)


def interference_matrix(X, P, G: GainMatrix, noise_w: float) -> np.ndarray:
    """``I[i, j] = sum_{k != j} pbar_k g_ik + noise`` for every pair."""
    g = G.user_bs
    pbar = bs_power(X, P)
    total = g @ pbar
    return np.maximum(total[:, None] - g * pbar[None, :], 0.0) + noise_w


def sinr_matrix(X, P, G: GainMatrix, noise_w: float) -> np.ndarray:
    return np.asarray(P) * G.user_bs / interference_matrix(X, P, G, noise_w)


def interference_plus_noise(i, j, P, X, G: GainMatrix, cfg: ScenarioConfig) -> float:
    g = G.user_bs[i]
    pbar = bs_power(X, P)
    mask = np.arange(pbar.size) != j
    return float(pbar[mask] @ g[mask] + cfg.noise_w)


def sinr(i, j, P, X, G: GainMatrix, cfg: ScenarioConfig) -> float:
    p = float(np.asarray(P)[i, j])
    if p < 0:
        raise DomainError("transmit power must be non-negative")
    return p * G.user_bs[i, j] / interference_plus_noise(i, j, P, X, G, cfg)


def shannon_rate(sinr_value, n_shared, bandwidth_hz):
    """``(W / K) * log2(1 + SINR)``; ``K`` users share the band equally."""
    k = np.asarray(n_shared, dtype=float)
    if np.any(k <= 0):
        raise DomainError("band must be shared by at least one user")
    return bandwidth_hz / k * np.log1p(np.asarray(sinr_value, dtype=float)) / np.log(2.0)


def achievable_rate(i, j, K_j, P, X, G: GainMatrix, cfg: ScenarioConfig) -> float:
    return float(shannon_rate(sinr(i, j, P, X, G, cfg), K_j, cfg.bandwidth_hz))


def link_budget(i, j, P, X, G: GainMatrix, cfg: ScenarioConfig) -> LinkBudget:
    """SINR, rate and interference of link (i, j); the band is split by BS j's realized load."""
    ipn = interference_plus_noise(i, j, P, X, G, cfg)
    s = float(np.asarray(P)[i, j]) * G.user_bs[i, j] / ipn
    load = max(int(np.asarray(X)[:, j].sum()), 1)
    return LinkBudget(sinr=s, rate_bps=float(shannon_rate(s, load, cfg.bandwidth_hz)),
                      interference_plus_noise_w=ipn)


def save_gain_matrix(G: GainMatrix, prefix) -> None:
    """Write ``<prefix>_user_bs.txt`` and ``<prefix>_bs_bs.txt`` dense text matrices."""
    np.savetxt(f"{prefix}_user_bs.txt", G.user_bs, fmt="%.17e")
    np.savetxt(f"{prefix}_bs_bs.txt", G.bs_bs, fmt="%.17e")


def load_gain_matrix(prefix) -> GainMatrix:
    ub = np.loadtxt(f"{prefix}_user_bs.txt", ndmin=2)
    bb = np.loadtxt(f"{prefix}_bs_bs.txt", ndmin=2)
    return GainMatrix(user_bs=ub, bs_bs=bb)
