"""Command-line interface.

Subcommands run the named experiments (``fig2a`` ... ``robustness``), a
single ``gate`` simulation, or the ``verify`` timing self-check. Exit
codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__, backend_name
from .harness import (
    ConfigError,
    SweepConfig,
    render_svg,
    run_single_gate,
    run_sweep,
    run_verify,
    write_csv,
)
from .lattice import LatticeRegimeError
from .operators import OperatorError
from .propagator import OracleError, PropagationError
from .schedule import ScheduleError, UnknownMap

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

EXPERIMENTS = ("fig2a", "fig2b", "fig2c", "fig2d", "robustness")

_GATE_CONFIG_KEYS = {"gate", "t_factor", "theta", "ratio", "steps_per_unit",
                     "seed", "map_seed"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgate",
        description="adiabatic-passage gate simulator and sweep harness")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", metavar="JSON", help="config file")
        p.add_argument("--out", metavar="CSV", help="write records as CSV")
        p.add_argument("--svg", metavar="FILE", help="render a log-log plot")
        p.add_argument("--steps", type=float, metavar="N",
                       help="integrator steps per 1/omega_m")
        p.add_argument("--seed", type=int, metavar="S", help="ensemble seed")
        p.add_argument("--workers", type=int, metavar="W",
                       help="concurrent grid points")
        p.add_argument("--dump-path", metavar="JSON",
                       help="write the constructed trajectories as JSON")

    for name in EXPERIMENTS:
        add_common(sub.add_parser(name, help=f"run the {name} sweep"))
    add_common(sub.add_parser("gate", help="run one gate simulation"))
    verify = sub.add_parser("verify", help="re-check trajectory timing symmetries")
    verify.add_argument("--config", metavar="JSON", help="config file")
    return parser


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _sweep_command(args) -> int:
    data = _load_config(args.config)
    data.setdefault("experiment", args.command)
    if data["experiment"] != args.command:
        raise ConfigError(
            f"config is for {data['experiment']!r}, not {args.command!r}")
    for key, value in (("steps_per_unit", args.steps), ("seed", args.seed),
                       ("workers", args.workers)):
        if value is not None:
            data[key] = value
    cfg = SweepConfig.from_json(data)
    result = run_sweep(cfg)
    print(f"{cfg.experiment}: {len(result.records)} records "
          f"(backend {backend_name()}, version {result.version})")
    for label in result.series_labels():
        errs = result.errors(label)
        print(f"  {label or cfg.gate}: error min {errs.min():.3e} max {errs.max():.3e}")
    if args.out:
        write_csv(result, args.out)
        print(f"  wrote {args.out}")
    if args.svg:
        render_svg(result, args.svg)
        print(f"  wrote {args.svg}")
    if args.dump_path:
        _dump_paths(_experiment_paths(cfg), args.dump_path)
        print(f"  wrote {args.dump_path}")
    return EXIT_OK


def _experiment_paths(cfg: SweepConfig) -> list:
    from . import harness
    from .schedule import ScheduleLimits, cnot_u1_path, cnot_u3_path, \
        hadamard_path, phase_gate_path

    if cfg.experiment in ("fig2a", "robustness"):
        t_leg = cfg.grid_start if cfg.experiment == "fig2a" else cfg.t_factor
        lim = ScheduleLimits(T=t_leg, omega_m=1.0, delta_m=cfg.ratio,
                             omega_t_m=1.0, delta_t_m=cfg.ratio, theta=cfg.theta)
        if cfg.gate == "phase":
            return [phase_gate_path(lim)]
        if cfg.gate == "hadamard":
            return [hadamard_path(lim)]
        u1 = cnot_u1_path(lim)
        return [u1, cnot_u3_path(u1)]
    if cfg.experiment == "fig2b":
        om = harness.LOCAL_OMEGA
        lim = ScheduleLimits(T=cfg.t_factor / om, omega_m=om,
                             delta_m=cfg.ratio * om, theta=cfg.theta)
        return [hadamard_path(lim) if cfg.gate == "hadamard"
                else phase_gate_path(lim)]
    j_m = harness.TWOQ_J_FACTOR
    om = harness.TWOQ_OMEGA_FACTOR * j_m ** 2
    dt_m = 2.0 * j_m ** 2 / harness.TWOQ_G_OFFSET
    u1 = cnot_u1_path(ScheduleLimits(T=cfg.t_factor / om, delta_t_m=dt_m,
                                     omega_t_m=om))
    return [u1, cnot_u3_path(u1)]


def _dump_paths(paths, destination):
    payload = [p.to_json() for p in paths]
    with open(destination, "w", encoding="utf-8") as fh:
        json.dump(payload if len(payload) > 1 else payload[0], fh, indent=2)
        fh.write("\n")


def _gate_command(args) -> int:
    data = _load_config(args.config)
    unknown = set(data) - _GATE_CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    gate = data.get("gate", "phase")
    t_factor = float(data.get("t_factor", 300.0))
    theta = float(data.get("theta", math.pi / 2))
    ratio = float(data.get("ratio", 10.0))
    steps = float(args.steps if args.steps is not None
                  else data.get("steps_per_unit", 32.0))
    map_seed = data.get("map_seed")
    if args.seed is not None:
        map_seed = args.seed
    fmap = None if map_seed is None else UnknownMap.random(1.0, seed=int(map_seed))

    outcome = run_single_gate(gate, t_factor, theta=theta, ratio=ratio,
                              steps_per_unit=steps, fmap=fmap)
    print(f"gate {gate}: error {outcome.error:.6e}  steps {outcome.step_count}  "
          f"unitarity defect {outcome.max_unitarity_defect:.2e}  "
          f"(T = {t_factor}/omega_m, backend {backend_name()})")
    if gate == "cnot":
        print(f"  extracted xi = {outcome.xi:+.6f}")
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write("swept,error,leakage,wall_ms\n")
            fh.write(f"{t_factor:.11e},{outcome.error:.11e},"
                     f"{0.0:.11e},{0.0:.11e}\n")
        print(f"  wrote {args.out}")
    if args.dump_path:
        _dump_paths(outcome.paths, args.dump_path)
        print(f"  wrote {args.dump_path}")
    return EXIT_OK


def _verify_command(args) -> int:
    data = _load_config(args.config)
    unknown = set(data) - {"t_factor", "seeds"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    report = run_verify(t_leg=float(data.get("t_factor", 300.0)),
                        seeds=tuple(data.get("seeds", (0, 1, 2))))
    worst = max(report.values())
    for label, violation in report.items():
        status = "ok" if violation <= 1e-12 else "VIOLATED"
        print(f"  {label:24s} max violation {violation:.3e}  {status}")
    if worst > 1e-12:
        print(f"verify: FAILED (worst {worst:.3e} > 1e-12)")
        return EXIT_NUMERICAL
    print(f"verify: all timing constraints hold (worst {worst:.3e})")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command in EXPERIMENTS:
            return _sweep_command(args)
        if args.command == "gate":
            return _gate_command(args)
        return _verify_command(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ScheduleError, OperatorError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PropagationError, OracleError, LatticeRegimeError,
            FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
