"""Command-line entry point: ``aircons <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 runtime failure (collision, allocation).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from aircons.channel import coherence_report
from aircons.consensus import ConsensusGroup, distances_from_alphas
from aircons.deviation import deviation_lower_bound, equal_spacing_alphas, expected_mixing_matrix, mc_deviation
from aircons.errors import AllocationError, CollisionError, ConfigError, DomainError
from aircons.harness.config import CONTROLLER_KINDS, load_config
from aircons.harness.experiments import compare_experiment, consensus_trace_experiment
from aircons.harness.output import trace_to_csv, write_text
from aircons.harness.simulation import run_simulation
from aircons.platoon import metrics

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3
SEED_ENV = "AIRCONS_SEED"


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _config(args):
    cfg = load_config(args.config)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            cfg = cfg.replace(seed=int(env))
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}", field="seed") from None
    return cfg


def _emit(text: str, out):
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    cfg = _config(args)
    trace = run_simulation(cfg, args.controller)
    _emit(trace_to_csv(trace), args.out)
    if cfg.duration > cfg.transient:
        m = metrics(trace, cfg.transient, cfg.stability_tol)
        print(f"{args.controller}: accumulated error {m.accumulated_error:.6f}, "
              f"string stable {m.string_stable}", file=sys.stderr)
    else:
        print(f"{args.controller}: run shorter than the {cfg.transient} s transient, "
              f"stability not assessed", file=sys.stderr)


def cmd_compare(args):
    cfg = _config(args)
    seeds = args.seeds if args.seeds is not None else [cfg.seed + i for i in range(5)]
    report = compare_experiment(cfg, seeds)
    _emit(report.to_csv(), args.out)
    print(report.summary(), file=sys.stderr)


def cmd_consensus_trace(args):
    cfg = _config(args)
    seeds = args.seeds if args.seeds is not None else [cfg.seed]
    report = consensus_trace_experiment(args.rho, cfg, seeds, rounds=args.rounds, group_size=args.group_size)
    _emit(report.to_csv(), args.out)
    for rho in report.rho_values:
        print(f"rho={rho}: mean rounds to 1% spread {np.mean(report.convergence_rounds(rho)):.2f}, "
              f"mean |bias| {np.mean(report.final_bias(rho)):.6f} m", file=sys.stderr)


def cmd_deviation(args):
    cfg = _config(args)
    if args.spacing == "equal":
        alphas = equal_spacing_alphas(args.group_size, cfg.target_gap)
    else:
        gaps = _floats(args.spacing)
        if not gaps or any(g <= 0 for g in gaps):
            raise DomainError("spacing list must hold positive gaps")
        alphas = np.cumsum([cfg.target_gap] + gaps)
    report = expected_mixing_matrix(distances_from_alphas(alphas), cfg.rho, cfg.pathloss_exp)
    bound = deviation_lower_bound(report, alphas)
    S = len(alphas)
    members = tuple(range(1, S + 1))
    group = ConsensusGroup(owner=members[S // 2], members=members, rho=cfg.rho, sigma=cfg.sigma,
                           power=cfg.power_watts, norm_len=max(cfg.norm_len, float(alphas[-1])),
                           rounds=args.rounds, pattern_mode=cfg.pattern_mode)
    mean, stderr = mc_deviation(group, alphas, args.reps, np.random.default_rng(cfg.seed),
                                cfg=cfg.fading_config(), noise_power=cfg.noise_power)
    print(f"alphas: {', '.join(f'{a:g}' for a in alphas)}")
    print(f"left Perron vector: {', '.join(f'{v:.6f}' for v in report.left_eigvec)}")
    print(f"expected-matrix deviation bound v.alpha - mean(alpha): {bound:.6e} m")
    print(f"Monte Carlo E[eps] over {args.reps} reps, K={args.rounds}: {mean:.6e} +- {stderr:.6e} m")


def cmd_coherence(args):
    rep = coherence_report(args.speed / 3.6, args.delay_spread * 1e-9, args.group_size)
    print(f"coherence time: {rep.coherence_time * 1e6:.3f} us")
    print(f"coherence bandwidth: {rep.coherence_bandwidth / 1e6:.3f} MHz")
    print(f"RB span: {rep.rb_freq_span / 1e3:.1f} kHz x {rep.rb_time_span * 1e6:.2f} us, "
          f"flat fading ok: {rep.flat_fading_ok}")
    print(f"group size {args.group_size} ok: {rep.group_size_ok}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aircons", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one platoon simulation and write its trace CSV")
    s.add_argument("--config", default=None, help="key = value config file (defaults if omitted)")
    s.add_argument("--controller", choices=CONTROLLER_KINDS, default="aircons")
    s.add_argument("--out", default=None, help="output CSV (stdout if omitted)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("compare", help="accumulated-error comparison of both controllers")
    s.add_argument("--config", default=None)
    s.add_argument("--seeds", type=_ints, default=None, help="comma-separated, at least 5")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("consensus-trace", help="per-round consensus trajectories for several rho")
    s.add_argument("--config", default=None)
    s.add_argument("--rho", type=_floats, default=[0.2, 0.9])
    s.add_argument("--seeds", type=_ints, default=None)
    s.add_argument("--rounds", type=int, default=100)
    s.add_argument("--group-size", type=int, default=5)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_consensus_trace)

    s = sub.add_parser("deviation", help="expected-matrix deviation bound and Monte Carlo estimate")
    s.add_argument("--config", default=None)
    s.add_argument("--spacing", default="equal", help="'equal' or comma-separated gaps in meters")
    s.add_argument("--group-size", type=int, default=5, help="used with --spacing equal")
    s.add_argument("--reps", type=int, default=10_000)
    s.add_argument("--rounds", type=int, default=50)
    s.set_defaults(func=cmd_deviation)

    s = sub.add_parser("coherence-check", help="check RB size against coherence time and bandwidth")
    s.add_argument("--speed", type=float, required=True, help="relative speed, km/h")
    s.add_argument("--delay-spread", type=float, required=True, help="ns")
    s.add_argument("--group-size", type=int, required=True)
    s.set_defaults(func=cmd_coherence)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        args.func(args)
    except (ConfigError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (CollisionError, AllocationError, ArithmeticError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
