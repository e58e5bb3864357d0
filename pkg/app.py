from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Dict, Optional, Sequence

from dotenv import load_dotenv

load_dotenv()

from agents.baseline_agents import ExactSolverAgent  # noqa: E402
from circuits.ansatz import AnsatzKind  # noqa: E402
from trainer.gradients import GradientMethod  # noqa: E402
from utils.errors import EXIT_FAILURE, EXIT_OK, EqcError, exit_code_for  # noqa: E402
from utils.log_setup import configure_logging  # noqa: E402

log = logging.getLogger("app")


# ╭──────────────────────────────── commands ───────────────────────────────╮

def cmd_gen(args: argparse.Namespace) -> int:
    from utils.instances import TspInstance, generate_instances, write_instances

    graphs = generate_instances(args.cities, args.count, args.seed)
    solver = ExactSolverAgent() if args.solve else None
    instances = [TspInstance(g, solver.run(g) if solver else None, k) for k, g in enumerate(graphs)]
    write_instances(args.out, instances)
    print(f"wrote {len(instances)} instances of {args.cities} cities to {args.out}"
          + (" with optimal tours" if args.solve else ""))
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    from langgraph_core.training_graph import run_training
    from trainer.config import load_config

    overrides: Dict[str, Any] = {
        "episodes_max": args.episodes,
        "seed": args.seed,
        "threads": args.threads,
        "learning_rate": args.lr,
        "gradient_method": args.gradient,
    }
    config = load_config(args.config, {k: v for k, v in overrides.items() if v is not None})
    state = run_training(
        config=config,
        ansatz=args.ansatz,
        depth=args.depth,
        train_path=args.train,
        val_path=args.val,
        resume_path=args.resume,
        out_dir=args.out,
    )
    s = state["summary"]
    print(f"{s['ansatz']} p={s['depth']} n={s['n_qubits']}: {s['n_trainable']} parameters, "
          f"{s['episodes']} episodes, solved={s['solved']}")
    if s.get("validation"):
        v, nn = s["validation"], s.get("nearest_neighbor_validation", {})
        print(f"validation mean ratio {v['mean']:.4f} +/- {v['sem']:.4f} (median {v['median']:.4f}); "
              f"nearest neighbour {nn.get('mean', float('nan')):.4f}")
    print(f"artifacts in {args.out}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    from tools.property_checks import run_suite

    reports = run_suite(args.what, args.trials, args.seed)
    for r in reports:
        print(r.line())
        for key, value in r.details.items():
            print(f"    {key}: {value}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILURE


def cmd_baseline(args: argparse.Namespace) -> int:
    from orchestrator import load_solved, run_baseline, write_baseline_report

    instances = load_solved(args.instances)
    rows, summary = run_baseline(instances, args.seed, args.random_samples, args.random_start)
    write_baseline_report(args.out, rows, summary, vars(args))
    nn, rnd = summary["nearest_neighbor"], summary["random"]
    print(f"{len(rows)} instances: nearest neighbour mean {nn['mean']:.4f} +/- {nn['sem']:.4f}, "
          f"random mean {rnd['mean']:.4f} +/- {rnd['sem']:.4f}")
    print(f"report written to {args.out}")
    return EXIT_OK


def cmd_qaoa(args: argparse.Namespace) -> int:
    from orchestrator import load_solved, read_params_file, run_qaoa, write_qaoa_report

    instances = load_solved(args.instances, args.cities, args.count, args.seed)
    transfer = read_params_file(args.transfer_params) if args.transfer_params else None
    rows, summary = run_qaoa(instances, args.depth, args.budget, args.optimizer, args.samples, args.penalty,
                             args.seed, args.threads, transfer, args.save_params)
    write_qaoa_report(args.out, rows, summary, vars(args))
    for key, stats in summary.items():
        if isinstance(stats, dict) and "median" in stats:
            print(f"{key}: median ratio {stats['median']:.4f}, mean {stats['mean']:.4f}, "
                  f"infeasible {stats['infeasible']}")
    print(f"report written to {args.out}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    from trainer.reports import compare_ratios, read_ratio_column

    res = compare_ratios(read_ratio_column(args.a, args.column), read_ratio_column(args.b, args.column))
    for label, path in (("a", args.a), ("b", args.b)):
        s = res[label]
        print(f"{label}: {path}: n={s['count']} mean {s['mean']:.4f} +/- {s['sem']:.4f}")
    print(f"Welch t = {res['t_statistic']:.4f}, p = {res['p_value']:.4g}")
    return EXIT_OK


# ╭──────────────────────────────── parser ─────────────────────────────────╮

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eqc-tsp", description="Equivariant quantum circuits for TSP node selection")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default: $EQC_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate random instances")
    p.add_argument("--cities", type=int, required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solve", action="store_true", help="attach exact optimal tours")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a circuit with DQN")
    p.add_argument("--ansatz", choices=[k.value for k in AnsatzKind], default=AnsatzKind.EQC.value)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--train", required=True)
    p.add_argument("--val", default=None)
    p.add_argument("--config", default=None, help="KEY=value file overriding the defaults")
    p.add_argument("--out", required=True)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--gradient", choices=[m.value for m in GradientMethod], default=None)
    p.add_argument("--resume", default=None, help="checkpoint to continue from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("check", help="run a property suite")
    p.add_argument("--what", choices=["equivariance", "analytic", "gradients"], required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("analytic-check", help="same as: check --what analytic")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check, what="analytic")

    p = sub.add_parser("baseline", help="nearest-neighbour and random-tour ratios")
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-samples", type=int, default=1000)
    p.add_argument("--random-start", action="store_true", help="start nearest neighbour at a random node")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("qaoa", help="QAOA baseline on the QUBO encoding")
    p.add_argument("--instances", default=None, help="instance file (default: generate --count instances)")
    p.add_argument("--cities", type=int, default=4)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--budget", type=int, default=500)
    p.add_argument("--optimizer", choices=["nelder-mead", "cobyla"], default="nelder-mead")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--penalty", type=float, default=1.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--transfer-params", default=None)
    p.add_argument("--save-params", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_qaoa)

    p = sub.add_parser("compare", help="Welch t-test on two ratio CSVs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--column", default="ratio")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except (EqcError, FileNotFoundError, ValueError) as exc:
        log.error("%s", exc)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
