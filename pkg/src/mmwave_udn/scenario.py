"""Scenario configuration and random topology generation.

A scenario is one macro base station at the origin with small cells and
users dropped uniformly on the macro disk. All scalar model parameters live
in :class:`ScenarioConfig`; the optional :class:`BlockageConfig` switches the
channel from the plain power-law model to the LOS/NLOS model with shadowing.
"""
from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


def dbm_to_w(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0) * 1e-3


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class BlockageConfig:
    """LOS/NLOS path-loss parameters. Shadowing deviations are in dB."""

    los_threshold_m: float = 25.0
    exp_los_bs_user: float = 2.0
    exp_nlos_bs_user: float = 3.4
    exp_los_bs_bs: float = 2.0
    exp_nlos_bs_bs: float = 3.5
    shadow_los_bs_user: float = 5.9
    shadow_nlos_bs_user: float = 7.6
    shadow_los_bs_bs: float = 6.5
    shadow_nlos_bs_bs: float = 7.9
    deterministic_shadowing: bool = False

    def __post_init__(self):
        if self.los_threshold_m < 0:
            raise ConfigError("los_threshold_m must be non-negative")
        for cls in ("bs_user", "bs_bs"):
            los = getattr(self, f"exp_los_{cls}")
            nlos = getattr(self, f"exp_nlos_{cls}")
            if los <= 0 or nlos <= 0:
                raise ConfigError(f"path-loss exponents for {cls} must be positive")
            if los > nlos:
                raise ConfigError(f"LOS exponent exceeds NLOS exponent for {cls}")
            for kind in ("los", "nlos"):
                if getattr(self, f"shadow_{kind}_{cls}") < 0:
                    raise ConfigError("shadowing deviations must be non-negative")

    def exponent(self, link_class: str, los: bool) -> float:
        return getattr(self, f"exp_{'los' if los else 'nlos'}_{link_class}")

    def shadow_std(self, link_class: str, los: bool) -> float:
        return getattr(self, f"shadow_{'los' if los else 'nlos'}_{link_class}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Scalar model parameters. Defaults form the desk-scale profile."""

    macro_radius_m: float = 100.0
    n_small_cells: int = 30
    n_users: int = 120
    p_max_macro_dbm: float = 9.5
    p_max_small_dbm: float = 4.7
    circuit_power_w: float = 1e-5
    noise_dbm: float = -134.0
    bandwidth_hz: float = 1.2e9
    wavelength_m: float = 0.005
    ref_distance_m: float = 1.0
    pathloss_exponent: float = 2.0
    harvest_eff: float = 0.8
    qos_rate: float = 1.0          # spectral efficiency target, bps/Hz
    interference_cap_w: float = 1e-9
    initial_power_w: float = 1e-4
    tx_antenna_gain: float = 1.0
    rx_antenna_gain: float = 1.0
    rng_seed: int = 1
    blockage: BlockageConfig | None = None

    def __post_init__(self):
        if self.n_small_cells < 0 or self.n_users < 0:
            raise ConfigError("counts must be non-negative")
        positive = ("macro_radius_m", "circuit_power_w", "bandwidth_hz", "wavelength_m",
                    "ref_distance_m", "initial_power_w", "tx_antenna_gain",
                    "rx_antenna_gain", "interference_cap_w")
        for name in positive:
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive and finite, got {v!r}")
        if not 2.0 <= self.pathloss_exponent <= 6.0:
            raise ConfigError("pathloss_exponent must lie in [2, 6]")
        if not 0.0 <= self.harvest_eff <= 1.0:
            raise ConfigError("harvest_eff must lie in [0, 1]")
        if self.qos_rate < 0:
            raise ConfigError("qos_rate must be non-negative")

    @property
    def noise_w(self) -> float:
        return float(dbm_to_w(self.noise_dbm))

    @property
    def p_max_macro_w(self) -> float:
        return float(dbm_to_w(self.p_max_macro_dbm))

    @property
    def p_max_small_w(self) -> float:
        return float(dbm_to_w(self.p_max_small_dbm))

    def to_dict(self) -> dict:
        """Flat dict using the same keys accepted by :func:`load_config`."""
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "blockage"}
        d["blockage"] = self.blockage is not None
        if self.blockage is not None:
            d.update(dataclasses.asdict(self.blockage))
        return d


def desk_profile(**overrides) -> ScenarioConfig:
    return replace(ScenarioConfig(), **overrides)


def paper_profile(**overrides) -> ScenarioConfig:
    return replace(ScenarioConfig(n_small_cells=1500, n_users=6000), **overrides)


def blockage_profile(base: ScenarioConfig | None = None,
                     deterministic: bool = False) -> ScenarioConfig:
    """Blockage channel with a 13 dBi transmit antenna."""
    base = base or desk_profile()
    return replace(base, blockage=BlockageConfig(deterministic_shadowing=deterministic),
                   tx_antenna_gain=float(db_to_linear(13.0)))


_SCALAR_KEYS = {f.name: f for f in fields(ScenarioConfig) if f.name != "blockage"}
_BLOCKAGE_KEYS = {f.name: f for f in fields(BlockageConfig)}


def _coerce(name, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected integer, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected number, got {value!r}")
    return float(value)


def config_from_mapping(data: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a config from flat keys, rejecting anything unknown.

    ``blockage = true`` enables the blockage channel; the blockage fields
    (``los_threshold_m``, ``exp_los_bs_user``, ...) are given as flat keys
    as well and imply ``blockage = true`` unless it is set to false.
    """
    base = base or ScenarioConfig()
    scalars, blk = {}, {}
    enable = None
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(f"nested table {key!r} not allowed; keys must be flat")
        if key == "blockage":
            if not isinstance(value, bool):
                raise ConfigError("blockage: expected true/false")
            enable = value
        elif key in _SCALAR_KEYS:
            scalars[key] = _coerce(key, value, getattr(base, key))
        elif key in _BLOCKAGE_KEYS:
            blk[key] = _coerce(key, value, getattr(BlockageConfig(), key))
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if enable is None:
        enable = base.blockage is not None or bool(blk)
    if enable:
        scalars["blockage"] = replace(base.blockage or BlockageConfig(), **blk)
    else:
        if blk:
            raise ConfigError("blockage fields given while blockage = false")
        scalars["blockage"] = None
    return replace(base, **scalars)


def load_config(path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Read a flat ``key = value`` (TOML syntax) config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_mapping(data, base)


@dataclass(frozen=True)
class Topology:
    """Base stations (index 0 is the macro) and users, positions in meters."""

    bs_xy: np.ndarray
    bs_is_macro: np.ndarray
    bs_p_max_w: np.ndarray
    bs_circuit_w: np.ndarray
    user_xy: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        for f in fields(self):
            arr = np.array(getattr(self, f.name))
            arr.setflags(write=False)
            object.__setattr__(self, f.name, arr)
        if self.bs_xy.ndim != 2 or self.bs_xy.shape[1] != 2:
            raise ConfigError("bs_xy must have shape (B, 2)")
        if self.user_xy.ndim != 2 or self.user_xy.shape[1] != 2:
            raise ConfigError("user_xy must have shape (U, 2)")
        if int(self.bs_is_macro.sum()) != 1:
            raise ConfigError("topology needs exactly one macro BS")

    @property
    def n_bs(self) -> int:
        return self.bs_xy.shape[0]

    @property
    def n_users(self) -> int:
        return self.user_xy.shape[0]

    @property
    def macro_index(self) -> int:
        return int(np.flatnonzero(self.bs_is_macro)[0])

    def tiers(self) -> list[str]:
        return ["macro" if m else "small" for m in self.bs_is_macro]


def _disk_points(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def scenario_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for topology drops and shadowing."""
    topo_ss, shadow_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(topo_ss), np.random.default_rng(shadow_ss)


def generate_topology(cfg: ScenarioConfig) -> Topology:
    """Drop small cells, then users, uniformly on the macro disk."""
    rng, _ = scenario_streams(cfg.rng_seed)
    small = _disk_points(rng, cfg.n_small_cells, cfg.macro_radius_m)
    users = _disk_points(rng, cfg.n_users, cfg.macro_radius_m)
    n_bs = 1 + cfg.n_small_cells
    is_macro = np.zeros(n_bs, dtype=bool)
    is_macro[0] = True
    p_max = np.full(n_bs, cfg.p_max_small_w)
    p_max[0] = cfg.p_max_macro_w
    return Topology(
        bs_xy=np.vstack([np.zeros((1, 2)), small]),
        bs_is_macro=is_macro,
        bs_p_max_w=p_max,
        bs_circuit_w=np.full(n_bs, cfg.circuit_power_w),
        user_xy=users,
    )


_TOPO_HEADER = "id kind x_m y_m p_max_w p_c_w"


def write_topology(topo: Topology, path) -> None:
    lines = [_TOPO_HEADER]
    for j in range(topo.n_bs):
        kind = "macro" if topo.bs_is_macro[j] else "small"
        x, y = topo.bs_xy[j].tolist()
        lines.append(f"{j} {kind} {x!r} {y!r} {float(topo.bs_p_max_w[j])!r} "
                     f"{float(topo.bs_circuit_w[j])!r}")
    for i in range(topo.n_users):
        x, y = topo.user_xy[i].tolist()
        lines.append(f"{i} user {x!r} {y!r} 0.0 0.0")
    Path(path).write_text("\n".join(lines) + "\n")


def read_topology(path) -> Topology:
    rows = Path(path).read_text().split("\n")
    if rows[0].strip() != _TOPO_HEADER:
        raise ConfigError(f"{path}: bad topology header")
    bs, users = [], []
    for lineno, line in enumerate(rows[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ConfigError(f"{path}:{lineno}: expected 6 columns")
        idx, kind = int(parts[0]), parts[1]
        vals = [float(v) for v in parts[2:]]
        if kind not in ("user", "macro", "small"):
            raise ConfigError(f"{path}:{lineno}: unknown kind {kind!r}")
        target = users if kind == "user" else bs
        if idx != len(target):
            raise ConfigError(f"{path}:{lineno}: ids must be dense and ordered")
        target.append((kind, vals))
    return Topology(
        bs_xy=np.array([v[:2] for _, v in bs]).reshape(-1, 2),
        bs_is_macro=np.array([k == "macro" for k, _ in bs]),
        bs_p_max_w=np.array([v[2] for _, v in bs]),
        bs_circuit_w=np.array([v[3] for _, v in bs]),
        user_xy=np.array([v[:2] for _, v in users]).reshape(-1, 2),
    )
