"""Command-line experiment runner.

Exit codes: 0 success, 2 configuration error, 3 QoS infeasible (gradient
run could not meet the rate target for every user), 4 I/O error.
"""
from __future__ import annotations

import argparse
import re
import sys
import warnings
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .baseline import run_max_sinr
from .channel import build_gain_matrix
from .errors import ConfigError
from .metrics import summary_dict, write_run, write_summary
from .scenario import BlockageConfig, desk_profile, generate_topology, load_config, paper_profile
from .solver import SolverConfig, run_solver

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4
ALGOS = {"gradient": ("gradient",), "max-sinr": ("max-sinr",), "both": ("gradient", "max-sinr")}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmwave-udn", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--algo", choices=sorted(ALGOS), default="both")
    p.add_argument("--iters", type=int, help="maximum solver iterations")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--seeds", help="run seeds N..M (inclusive) and merge the summaries")
    p.add_argument("--blockage", choices=("on", "off"))
    p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    return p


def parse_seed_range(text: str) -> list[int]:
    m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
    if not m or int(m.group(1)) > int(m.group(2)):
        raise ConfigError(f"--seeds expects N..M with N <= M, got {text!r}")
    return list(range(int(m.group(1)), int(m.group(2)) + 1))


def resolve_config(args):
    cfg = desk_profile() if args.scale == "desk" else paper_profile()
    if args.config is not None:
        cfg = load_config(args.config, base=cfg)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    if args.blockage == "on" and cfg.blockage is None:
        cfg = replace(cfg, blockage=BlockageConfig())
    elif args.blockage == "off":
        cfg = replace(cfg, blockage=None)
    if args.iters is not None and args.iters < 1:
        raise ConfigError("--iters must be positive")
    return cfg


def run_once(cfg, algos, scfg: SolverConfig, out: Path) -> tuple[dict, bool]:
    """Run the selected algorithms on one seeded scenario and write its files."""
    topo = generate_topology(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        G = build_gain_matrix(topo, cfg)
    results, infeasible = {}, False
    for algo in algos:
        if algo == "gradient":
            state, report = run_solver(topo, G, cfg, scfg)
            infeasible = state.infeasible
        else:
            state, report = run_max_sinr(topo, G, cfg)
        write_run(out / algo if len(algos) > 1 else out, state, report, topo)
        results[algo.replace("-", "_")] = summary_dict(report, state, cfg)
    if len(algos) > 1:
        grad, base = results["gradient"], results["max_sinr"]
        results["comparison"] = {
            "ee_ratio": grad["aggregate_ee_bits_per_joule"] / base["aggregate_ee_bits_per_joule"],
            "macro_load_ratio": (grad["macro_load"] / base["macro_load"]
                                 if base["macro_load"] else None),
        }
    return results, infeasible


def _merge(per_seed: dict) -> dict:
    merged = {}
    first = next(iter(per_seed.values()))
    for section, values in first.items():
        merged[section] = {}
        for key, v in values.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                xs = np.array([s[section][key] for s in per_seed.values()
                               if s[section][key] is not None], dtype=float)
                merged[section][key] = {"mean": float(xs.mean()), "std": float(xs.std())}
    return merged


def run_experiment(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        seeds = parse_seed_range(args.seeds) if args.seeds else [cfg.rng_seed]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    scfg = SolverConfig() if args.iters is None else SolverConfig(max_iters=args.iters)
    algos = ALGOS[args.algo]
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        per_seed, infeasible = {}, False
        for seed in seeds:
            seed_cfg = replace(cfg, rng_seed=seed)
            out = args.out / f"seed_{seed}" if args.seeds else args.out
            out.mkdir(parents=True, exist_ok=True)
            results, bad = run_once(seed_cfg, algos, scfg, out)
            infeasible |= bad
            per_seed[seed] = results
        payload = {
            "config": cfg.to_dict(),
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        if args.seeds:
            payload["seeds"] = seeds
            payload["per_seed"] = {str(s): r for s, r in per_seed.items()}
            payload["merged"] = _merge(per_seed)
        else:
            payload["seed"] = cfg.rng_seed
            payload.update(per_seed[cfg.rng_seed])
        write_summary(args.out / "summary.json", payload)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if infeasible:
        print("QoS target infeasible for some users; see qos_violating_users in summary.json",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run_experiment(argv))


if __name__ == "__main__":
    main()
