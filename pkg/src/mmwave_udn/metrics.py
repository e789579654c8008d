"""Energy-efficiency metrics, CDFs and the CSV/JSON result files."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import GainMatrix
from .errors import DomainError, ModelViolationError
from .power import NetPowerBreakdown, net_power
from .scenario import ScenarioConfig, Topology
from .solver import TRACE_COLUMNS, Problem, served_quantities


@dataclass(frozen=True)
class MetricsReport:
    per_user_ee: np.ndarray
    per_user_rate: np.ndarray
    per_user_sinr: np.ndarray
    per_bs_load: np.ndarray
    aggregate_ee: float
    net_power: NetPowerBreakdown
    iterations_to_converge: int

    def scalars(self) -> dict:
        return {
            "aggregate_ee_bits_per_joule": self.aggregate_ee,
            "sum_rate_bps": float(self.per_user_rate.sum()),
            "net_power_w": self.net_power.net_w,
            "circuit_power_w": self.net_power.circuit_w,
            "transmit_power_w": self.net_power.transmit_w,
            "harvested_power_w": self.net_power.harvested_w,
            "macro_load": int(self.per_bs_load[0]),
            "load_std": float(np.std(self.per_bs_load)),
            "iterations": int(self.iterations_to_converge),
        }


def energy_efficiency(rates, breakdown: NetPowerBreakdown):
    """Per-user and aggregate energy efficiency in bits/Joule.

    Network net power is shared equally across users, so the per-user
    value is ``U * rate_i / net_w`` and the aggregate is ``sum(rates) / net_w``.
    """
    if not breakdown.net_w > 0:
        raise ModelViolationError("net power must be positive")
    rates = np.asarray(rates, dtype=float)
    return rates * rates.size / breakdown.net_w, float(rates.sum() / breakdown.net_w)


def empirical_cdf(values) -> np.ndarray:
    """Right-continuous step CDF as rows ``(value, P(X <= value))``."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("empirical CDF of an empty sample")
    xs, counts = np.unique(v, return_counts=True)
    return np.column_stack([xs, np.cumsum(counts) / v.size])


def build_report(X, P, topo: Topology, G: GainMatrix, cfg: ScenarioConfig,
                 iterations_to_converge: int) -> MetricsReport:
    prob = Problem.build(topo, G, cfg)
    _, sinr, _, load, rate, _ = served_quantities(np.asarray(X), np.asarray(P), prob)
    breakdown = net_power(X, P, G, cfg, circuit_w=topo.bs_circuit_w)
    per_user, aggregate = energy_efficiency(rate, breakdown)
    return MetricsReport(per_user, rate, sinr, load, aggregate, breakdown, iterations_to_converge)


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def write_load_csv(path, report: MetricsReport, topo: Topology):
    _write_rows(path, ("bs_id", "tier", "users"),
                ((j, tier, int(report.per_bs_load[j])) for j, tier in enumerate(topo.tiers())))


def write_cdf_csv(path, values):
    _write_rows(path, ("value", "cdf"), empirical_cdf(values).tolist())


def write_trace_csv(path, trace):
    _write_rows(path, TRACE_COLUMNS, trace)


def summary_dict(report: MetricsReport, state, cfg: ScenarioConfig) -> dict:
    return {
        **report.scalars(),
        "converged": bool(state.converged),
        "qos_infeasible": bool(state.infeasible),
        "qos_violating_users": [int(i) for i in state.infeasible_users],
    }


def write_run(out_dir, state, report: MetricsReport, topo: Topology) -> None:
    """Write ``trace.csv``, ``load.csv``, ``ee_cdf.csv`` and ``rate_cdf.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out / "trace.csv", state.trace)
    write_load_csv(out / "load.csv", report, topo)
    if report.per_user_rate.size:
        write_cdf_csv(out / "ee_cdf.csv", report.per_user_ee)
        write_cdf_csv(out / "rate_cdf.csv", report.per_user_rate)
    else:
        _write_rows(out / "ee_cdf.csv", ("value", "cdf"), [])
        _write_rows(out / "rate_cdf.csv", ("value", "cdf"), [])


def write_summary(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
