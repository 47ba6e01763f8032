"""Experiment runner: every analysis as a subcommand driven by a JSON config.

Exit codes: 0 success, 2 config/validation error, 3 numerical or I/O failure.
Given the same config and seed, output files are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import assignment, decoupling, dynamics
from .channels import Channel, depolarizing, iid_threshold
from .entropy import von_neumann
from .linalg import maximally_mixed
from .serialize import atomic_write_text, decode_complex_vector, load_kraus_file

SCHEMA_VERSION = 1


def _format_value(x) -> str:
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, float):
        return "%.17g" % x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def emit(table, fmt: str, path: str) -> None:
    """Write a (header, rows) table as CSV or JSON, atomically.

    CSV uses '.' decimals and 17 significant digits so values round-trip
    bit-identically; JSON keeps the header's key order.
    """
    header, rows = table
    if not rows:
        raise ValueError("refusing to emit an empty table")
    if fmt == "csv":
        lines = [",".join(header)]
        lines += [",".join(_format_value(x) for x in row) for row in rows]
        atomic_write_text(path, "\n".join(lines) + "\n")
    elif fmt == "json":
        records = [dict(zip(header, [x if not isinstance(x, (np.floating, np.integer))
                                     else x.item() for x in row]))
                   for row in rows]
        atomic_write_text(path, json.dumps(records, indent=2) + "\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}")


# ---------------------------------------------------------------------------
# Config plumbing.
# ---------------------------------------------------------------------------


class ConfigError(Exception):
    pass


def load_config(path: str | None, args) -> dict:
    if path is None:
        cfg: dict = {"schema": SCHEMA_VERSION}
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        if cfg.get("schema") != SCHEMA_VERSION:
            raise ConfigError(f"config schema must be {SCHEMA_VERSION}")
    for key in ("seed", "output", "epsilon", "delta", "threads", "format"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    return cfg


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing required field {key!r}")
    return cfg[key]


def _times_of(cfg: dict) -> list[float]:
    times = _require(cfg, "times")
    if isinstance(times, dict):
        return list(np.linspace(float(times["start"]), float(times["stop"]),
                                int(times["num"])))
    return [float(t) for t in times]


def _spec_of(cfg: dict) -> dynamics.HamiltonianSpec:
    try:
        return dynamics.spec_from_dict(_require(cfg, "hamiltonian"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad hamiltonian: {exc}") from exc


def _channel_of(cfg: dict) -> Channel:
    spec = _require(cfg, "channel")
    if isinstance(spec, str):
        return Channel.from_kraus(load_kraus_file(spec), name=spec)
    if not isinstance(spec, dict):
        raise ConfigError("channel must be a Kraus file path or an object")
    name = spec.get("builtin")
    if name == "depolarizing":
        return depolarizing(float(spec["p"]))
    if name == "identity":
        return Channel.identity(int(spec["d"]))
    if "kraus_file" in spec:
        return Channel.from_kraus(load_kraus_file(spec["kraus_file"]),
                                  name=spec["kraus_file"])
    raise ConfigError(f"unrecognized channel description {spec!r}")


# ---------------------------------------------------------------------------
# Subcommand runners.  Each prints a one-line summary and returns 0.
# ---------------------------------------------------------------------------


def run_criteria_scan(cfg: dict) -> int:
    spec = _spec_of(cfg)
    times = _times_of(cfg)
    eps = float(cfg.get("epsilon", 0.05))
    slack = float(cfg.get("slack", 0.0))
    rows = []
    counts = {dynamics.MEMORY_LOST: 0, dynamics.MEMORY_RETAINED: 0,
              dynamics.INCONCLUSIVE: 0}
    for t in times:
        lost, retained = dynamics.system_criteria(spec, t, eps, slack)
        if retained.verdict == dynamics.MEMORY_RETAINED:
            verdict = dynamics.MEMORY_RETAINED
        elif lost.verdict == dynamics.MEMORY_LOST:
            verdict = dynamics.MEMORY_LOST
        else:
            verdict = dynamics.INCONCLUSIVE
        counts[verdict] += 1
        rows.append([t, retained.lhs, retained.rhs, retained.lhs - retained.rhs,
                     verdict])
    emit((["t", "lhs_bits", "rhs_bits", "margin_bits", "verdict"], rows),
         cfg.get("format", "csv"), _require(cfg, "output"))
    print(f"criteria-scan: {len(times)} times, "
          f"retained={counts[dynamics.MEMORY_RETAINED]} "
          f"lost={counts[dynamics.MEMORY_LOST]} "
          f"inconclusive={counts[dynamics.INCONCLUSIVE]}")
    return 0


def run_depol_threshold(cfg: dict) -> int:
    p_c = iid_threshold(depolarizing, lo=float(cfg.get("p_lo", 0.01)),
                        hi=float(cfg.get("p_hi", 0.5)),
                        tol=float(cfg.get("tol", 1e-8)))
    ps = np.linspace(float(cfg.get("p_min", 0.0)), float(cfg.get("p_max", 0.75)),
                     int(cfg.get("num", 76)))
    rows = []
    for p in ps:
        tau = depolarizing(float(p)).dilation_state(maximally_mixed(2))
        rows.append([float(p), von_neumann(tau.marginal("S")),
                     von_neumann(tau.marginal("E"))])
    if "output" in cfg:
        emit((["p", "H_S", "H_E"], rows), cfg.get("format", "csv"), cfg["output"])
    print(f"p_c = {p_c:.6f}")
    return 0


def run_decoupling(cfg: dict) -> int:
    ch = _channel_of(cfg)
    report = decoupling.decoupling_report(
        ch, n_samples=int(cfg.get("samples", 200)), seed=int(_require(cfg, "seed")),
        deltas=cfg.get("deltas", (0.5,)), eps=float(cfg.get("epsilon", 0.0)),
        workers=int(cfg.get("threads", 1)))
    if "output" in cfg:
        atomic_write_text(cfg["output"], report.to_json() + "\n")
    print(f"decoupling: mean={report.empirical_mean:.6f} "
          f"bound={report.bound:.6f} samples={report.n_samples}")
    return 0


def run_converse(cfg: dict) -> int:
    ch = _channel_of(cfg)
    res = decoupling.converse_check(
        ch, eps=float(_require(cfg, "epsilon")), delta=float(_require(cfg, "delta")),
        n_samples=int(cfg.get("samples", 50)), seed=int(_require(cfg, "seed")))
    if "output" in cfg:
        obj = {"fires": res.fires, "h_max_joint": res.h_max_joint,
               "h_min_output": res.h_min_output, "lhs": res.lhs,
               "trial_min_avg": res.trial_min_avg,
               "empirical_ok": res.empirical_ok}
        atomic_write_text(cfg["output"], json.dumps(obj, indent=2,
                                                    sort_keys=True) + "\n")
    print(f"converse: fires={res.fires} lhs={res.lhs:.4f} "
          f"rhs={res.h_min_output:.4f}")
    return 0


def run_lightcone(cfg: dict) -> int:
    spec = _spec_of(cfg)
    scan = dynamics.lightcone_scan(spec, _times_of(cfg),
                                   eps=float(cfg.get("epsilon", 0.05)),
                                   slack=float(cfg.get("slack", 0.0)))
    rows = [[float(t), float(he), float(ds)]
            for t, he, ds in zip(scan.times, scan.h_max_env, scan.deficit_sys)]
    emit((["t", "h_max_env_bits", "deficit_sys_bits"], rows),
         cfg.get("format", "csv"), _require(cfg, "output"))
    print(f"lightcone: t_star={scan.t_star} slope_env={scan.slope_env:.4f} "
          f"slope_sys={scan.slope_sys:.4f}")
    return 0


def run_recurrence(cfg: dict) -> int:
    spec = _spec_of(cfg)
    scan = dynamics.recurrence_scan(spec, t_max=float(_require(cfg, "t_max")),
                                    step=float(_require(cfg, "step")),
                                    tol=float(cfg.get("tol", 1e-6)),
                                    eps=float(cfg.get("epsilon", 0.05)))
    if "output" in cfg:
        obj = {"t_rec": scan.t_rec, "distance_at_rec": scan.distance_at_rec,
               "min_distance": scan.min_distance,
               "argmin_time": scan.argmin_time,
               "verdict_at_rec": None if scan.verdict_at_rec is None
               else scan.verdict_at_rec.verdict}
        atomic_write_text(cfg["output"], json.dumps(obj, indent=2,
                                                    sort_keys=True) + "\n")
    print(f"recurrence: t_rec={scan.t_rec} min_distance={scan.min_distance:.3e}")
    return 0


def run_absence(cfg: dict) -> int:
    spec = _spec_of(cfg)
    phi = decode_complex_vector(_require(cfg, "phi"))
    report = assignment.verify_absence(
        spec, phi, _times_of(cfg), n_env_samples=int(cfg.get("samples", 20)),
        seed=int(_require(cfg, "seed")))
    if "output" in cfg:
        atomic_write_text(cfg["output"], report.to_json() + "\n")
    print(f"absence: delta_phi={report.delta_phi:.6f} bound={report.bound:.6f} "
          f"max_distance={report.deterministic_max_distance:.6f}")
    return 0


RUNNERS = {
    "criteria-scan": run_criteria_scan,
    "depol-threshold": run_depol_threshold,
    "decoupling": run_decoupling,
    "converse": run_converse,
    "lightcone": run_lightcone,
    "recurrence": run_recurrence,
    "absence": run_absence,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memloss",
        description="entropic memory-loss criteria for quantum dynamics")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?", default=None,
                       help="JSON experiment config (schema 1)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output", default=None)
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        if args.config is None and args.command != "depol-threshold":
            raise ConfigError(f"{args.command} needs a config file")
        return RUNNERS[args.command](cfg)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
