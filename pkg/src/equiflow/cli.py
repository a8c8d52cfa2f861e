"""Command-line front end: train, evaluate, compare, dump-config.

Experiments are described by one JSON config file; flags only carry paths,
a seed override and an evaluation-epsilon override.  Set EQUIFLOW_LOG to a
logging level name (debug, info, ...) to control log verbosity.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import (
    ExperimentConfig,
    default_config,
    dump_config,
    evaluation_env,
    evaluation_initial,
    load_config,
)
from .env import ConfigurationError
from .evaluate import (
    LocalPolicy,
    ModelPolicy,
    SummaryRow,
    aggregate_runs,
    run_episode,
    write_compare_series_csv,
    write_series_csv,
    write_summary_csv,
)
from .qlearn import EpisodeStats, load_model, save_model, train_eadql, train_ecadql

log = logging.getLogger("equiflow")


def _setup_logging() -> None:
    level_name = os.environ.get("EQUIFLOW_LOG", "warning").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level_name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else default_config()
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    if getattr(args, "eps_eval", None) is not None:
        config = replace(config, eval=replace(config.eval, epsilon_eval=args.eps_eval))
    if getattr(args, "runs", None) is not None:
        config = replace(config, eval=replace(config.eval, n_runs=args.runs))
    return config


def _progress_printer(every: int = 1000):
    def print_stats(stats: EpisodeStats) -> None:
        if stats.episode % every == 0:
            print(
                f"episode {stats.episode:>6}  r_hat={stats.avg_reward_estimate:.4f}"
                f"  lam={stats.lam:.4f}  v_hat={stats.violation_estimate:.4f}"
                f"  R_hat={stats.reward_estimate:.4f}",
                file=sys.stderr,
                flush=True,
            )

    return print_stats


def cmd_train(args: argparse.Namespace) -> int:
    config = _load(args)
    if config.policy_kind == "local":
        raise ConfigurationError("the local policy needs no training")
    trainer = train_ecadql if config.policy_kind == "ecadql" else train_eadql
    log.info("training %s for %d episodes", config.policy_kind, config.hyper.episodes)
    model = trainer(config.env, config.hyper, config.seed, on_episode=_progress_printer())
    model.kind = config.policy_kind
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    print(f"model written to {out}")
    return 0


def _build_policy(spec: str, config: ExperimentConfig):
    if spec == "local":
        # The untrained baseline is exactly the epsilon=0 behaviour.
        return LocalPolicy(), 0.0
    model = load_model(spec)
    if model.hyper.levels != config.hyper.levels:
        raise ConfigurationError(
            f"{spec}: model level bands differ from the config's; refusing to evaluate"
        )
    return ModelPolicy(model), model.hyper.epsilon


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load(args)
    policy, eps_train = _build_policy(args.model, config)
    env = evaluation_env(config)
    initial = evaluation_initial(config)
    eps_eval = config.eval.epsilon_eval
    tau = config.hyper.tau
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if config.eval.mode == "fixed":
        traj, metrics = run_episode(policy, env, initial, eps_eval, tau)
        score, ratio, length = metrics.score, metrics.violation_ratio, float(traj.length)
        write_series_csv(out_dir / "series.csv", traj, metrics)
    else:
        agg = aggregate_runs(policy, env, config.eval.n_runs, config.seed, eps_eval, tau, initial)
        score, ratio, length = agg.mean_score, agg.mean_violation_ratio, agg.mean_length
        # The per-step series file always describes the fixed reference run.
        write_series_csv(out_dir / "series.csv", agg.reference_trajectory, agg.reference_metrics)
    write_summary_csv(
        out_dir / "summary.csv",
        [
            SummaryRow(
                policy=policy.name,
                epsilon_train=eps_train,
                epsilon_eval=eps_eval,
                tau=tau,
                score=score,
                violation_ratio=ratio,
                episode_length=length,
                seed=config.seed,
            )
        ],
    )
    print(f"policy={policy.name} score={score:.6f} violation_ratio={ratio:.6f}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    config = _load(args)
    env = evaluation_env(config)
    initial = evaluation_initial(config)
    eps_eval = config.eval.epsilon_eval
    tau = config.hyper.tau
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows: list[SummaryRow] = []
    named_series: list[tuple[str, list[float]]] = []
    used_names: set[str] = set()
    for spec in args.policies:
        policy, eps_train = _build_policy(spec, config)
        name = policy.name if spec == "local" else f"{policy.name}:{Path(spec).stem}"
        while name in used_names:
            name += "+"
        used_names.add(name)
        agg = aggregate_runs(policy, env, config.eval.n_runs, config.seed, eps_eval, tau, initial)
        rows.append(
            SummaryRow(
                policy=name,
                epsilon_train=eps_train,
                epsilon_eval=eps_eval,
                tau=tau,
                score=agg.mean_score,
                violation_ratio=agg.mean_violation_ratio,
                episode_length=agg.mean_length,
                seed=config.seed,
            )
        )
        named_series.append((name, agg.mean_series))
        print(
            f"policy={name} score={agg.mean_score:.6f}"
            f" violation_ratio={agg.mean_violation_ratio:.6f}"
        )
    write_summary_csv(out_dir / "compare_summary.csv", rows)
    write_compare_series_csv(out_dir / "compare_series.csv", named_series)
    return 0


def cmd_dump_config(args: argparse.Namespace) -> int:
    config = _load(args)
    sys.stdout.write(dump_config(config))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equiflow",
        description="Train and evaluate equity-constrained water-delivery policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, runs_flag: bool = False) -> None:
        p.add_argument("--config", help="experiment config JSON (default: built-in)")
        p.add_argument("--seed", type=int, help="override the config seed")

    p_train = sub.add_parser("train", help="train a policy and write the model JSON")
    common(p_train)
    p_train.add_argument("--out", required=True, help="output model path (.json)")
    p_train.set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("evaluate", help="evaluate a model file or the local baseline")
    common(p_eval)
    p_eval.add_argument("--model", required=True, help='model path or the literal "local"')
    p_eval.add_argument("--out", required=True, help="output directory for the CSV files")
    p_eval.add_argument("--eps-eval", dest="eps_eval", type=float, help="override eval epsilon")
    p_eval.add_argument("--runs", type=int, help="override the number of random-start runs")
    p_eval.set_defaults(fn=cmd_evaluate)

    p_cmp = sub.add_parser("compare", help="aggregate several policies on shared starts")
    common(p_cmp)
    p_cmp.add_argument("policies", nargs="+", help='model paths and/or the literal "local"')
    p_cmp.add_argument("--out", required=True, help="output directory for the CSV files")
    p_cmp.add_argument("--eps-eval", dest="eps_eval", type=float, help="override eval epsilon")
    p_cmp.add_argument("--runs", type=int, help="override the number of runs per policy")
    p_cmp.set_defaults(fn=cmd_compare)

    p_dump = sub.add_parser("dump-config", help="print the effective config as JSON")
    common(p_dump)
    p_dump.set_defaults(fn=cmd_dump_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
