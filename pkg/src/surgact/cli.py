"""surgact command-line interface.

One binary, a subcommand per pipeline. Every run echoes its effective
configuration (including seeds) as a JSON line on stderr before doing any
work. Outputs are machine-readable by default; ``--pretty`` switches the
terminal output to human tables where available.

Exit codes: 0 success, 1 validation failures, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, agreement, dataset, metrics, skill
from .model import presets
from .model.config import save_checkpoint
from .model.train import evaluate_accuracy, train_toy
from .planning import (
    ClientConfig,
    ground_truth_answer_key,
    load_contexts,
    load_log,
    make_samples,
    metrics_table,
    run_planning,
    save_log,
    write_metrics_csv,
)
from .planning.mock import MockAgentServer
from .taxonomy import TRAINABLE_ACTIONS


def _echo_config(args: argparse.Namespace) -> None:
    effective = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
    effective["version"] = __version__
    print(json.dumps({"effective_config": effective}, default=str), file=sys.stderr)


def _load_run_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# dataset


def cmd_dataset_validate(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    violations = {}
    for rec in manifest.records:
        codes = dataset.validate_clip(rec)
        if codes:
            violations[rec.clip_id] = [c.value for c in codes]
    print(json.dumps({
        "records": len(manifest.records),
        "violations": sum(len(v) for v in violations.values()),
        "by_clip": violations,
    }, indent=2 if args.pretty else None))
    print(f"{sum(len(v) for v in violations.values())} violations", file=sys.stderr)
    return 1 if violations else 0


def cmd_dataset_folds(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    assignment = dataset.split_folds(manifest, k=args.k, seed=args.seed)
    dataset.save_folds(assignment, args.out)
    counts = [0] * args.k
    for rec in manifest.records:
        counts[assignment.fold_of_clip(rec)] += 1
    print(json.dumps({"seed": args.seed, "clips_per_fold": counts}))
    return 0


# ---------------------------------------------------------------------------
# train / evaluate


def cmd_train(args) -> int:
    if args.benchmark == "motion":
        (x_tr, y_tr, x_te, y_te), config, train_kwargs = presets.toy_benchmark()
    elif args.benchmark == "motion-imbalanced":
        (x_tr, y_tr, x_te, y_te), config, train_kwargs = presets.imbalance_benchmark(
            dual_head=not args.no_dual_head)
    else:
        raise ValueError(f"unknown benchmark {args.benchmark}")
    if args.epochs:
        train_kwargs["epochs"] = args.epochs
    if args.seed is not None:
        train_kwargs["seed"] = args.seed

    params, history = train_toy(x_tr, y_tr, config, **train_kwargs)
    held_out = evaluate_accuracy(x_te, y_te, params)
    if args.checkpoint:
        save_checkpoint(params, args.checkpoint)
    if args.scores:
        from .model.network import forward_batch
        probs = forward_batch(x_te, params)["probabilities"]
        metrics.save_scores(metrics.ScoreMatrix(probs=probs, labels=y_te), args.scores)
    if args.history:
        from dataclasses import asdict

        record = {"model_config": asdict(config), "train_settings": train_kwargs,
                  "history": history}
        Path(args.history).write_text(json.dumps(record, indent=2), encoding="utf-8")
    print(json.dumps({
        "benchmark": args.benchmark,
        "epochs": train_kwargs["epochs"],
        "seed": train_kwargs["seed"],
        "final_train_accuracy": history[-1]["train_accuracy"],
        "held_out_accuracy": held_out,
    }))
    return 0


def cmd_evaluate(args) -> int:
    scores = metrics.load_scores(args.scores)
    class_names = None
    if scores.n_classes != len(TRAINABLE_ACTIONS):
        class_names = [f"class{k}" for k in range(scores.n_classes)]
    rows, taus = metrics.evaluation_report(
        scores, n_resamples=args.resamples, seed=args.seed, class_names=class_names)
    metrics.write_report_csv(rows, args.out)

    group_table = None
    if args.groupwise:
        def macro_auroc(sm):
            values = []
            for k in range(sm.n_classes):
                try:
                    values.append(metrics.auroc(metrics.roc_curve_ova(sm, k)))
                except metrics.DegenerateClass:
                    continue
            return float(sum(values) / len(values)) if values else 0.0

        table = metrics.groupwise(macro_auroc, scores, key=args.groupwise,
                                  n_resamples=args.resamples, seed=args.seed)
        group_rows = [{"group": name, "auroc": e.point, "ci_low": e.ci_low,
                       "ci_high": e.ci_high} for name, e in table.items()]
        group_path = str(args.out) + f".{args.groupwise}.csv"
        metrics.write_report_csv(group_rows, group_path,
                                 columns=("group", "auroc", "ci_low", "ci_high"))
        group_table = group_path

    if args.pretty:
        for row in rows:
            print(f"{row['class']:>18}: AUROC {row['auroc']:.4f} "
                  f"[{row['auroc_ci_low']:.4f}, {row['auroc_ci_high']:.4f}]  "
                  f"J {row['youden_j']:.4f} tau {row['tau']:.4f}  "
                  f"sens {row['sensitivity']:.4f} spec {row['specificity']:.4f}")
    else:
        print(json.dumps({"report": args.out, "thresholds": taus,
                          "groupwise": group_table}))
    return 0


# ---------------------------------------------------------------------------
# agreement / skill


def cmd_agree(args) -> int:
    pair = agreement.load_rating_pairs(args.pairs)
    report = agreement.agreement_report(pair)
    if args.out:
        Path(args.out).write_text(report + "\n", encoding="utf-8")
    print(report)
    return 0


def cmd_skill(args) -> int:
    segments, total = skill.load_segments(args.segments)
    if args.total_duration:
        total = args.total_duration
    barcode = skill.build_barcode(segments, total)
    report = skill.skill_report(barcode, rule=args.rule)
    if args.svg:
        Path(args.svg).write_text(skill.render_barcode_svg(barcode), encoding="utf-8")
    print(json.dumps({
        "multiple_attempts": report.multiple_attempts,
        "idle_proportion": report.idle_proportion,
        "duration_s": report.duration_s,
        "per_action_seconds": {a.value: s for a, s in report.per_action_seconds.items()},
        "svg": args.svg or None,
    }))
    return 0


# ---------------------------------------------------------------------------
# planning


def _client_config_from(args) -> ClientConfig:
    file_cfg = _load_run_config(args.config)
    planning_cfg = file_cfg.get("planning", file_cfg)
    return ClientConfig(
        endpoint=args.endpoint or planning_cfg.get("endpoint", ""),
        model=args.model or planning_cfg.get("model", "mock"),
        auth_token=planning_cfg.get("auth_token"),
        parallelism=args.parallelism or int(planning_cfg.get("parallelism", 1)),
    )


def cmd_plan_run(args) -> int:
    contexts = load_contexts(args.contexts)
    config = _client_config_from(args)

    if args.mock:
        samples = [s for ctx in contexts for s in make_samples(ctx)]
        mode = "ground_truth" if args.mock == "ground-truth" else "uniform_random"
        server = MockAgentServer(
            mode=mode, seed=args.seed,
            answer_key=ground_truth_answer_key(samples) if mode == "ground_truth" else None,
        )
        with server:
            config.endpoint = server.endpoint
            log = run_planning(contexts, config)
        log.metadata["mock"] = args.mock
        log.metadata["seed"] = args.seed
    else:
        log = run_planning(contexts, config)
    save_log(log, args.out)
    print(json.dumps({"entries": len(log), "out": args.out, **log.metadata}))
    return 0


def cmd_plan_score(args) -> int:
    log = load_log(args.log)
    table = metrics_table(log)
    write_metrics_csv(table, args.out)
    if args.pretty:
        print(f"{'metric':>16}  top1     top2     top3")
        for name, values in table.items():
            print(f"{name:>16}  " + "  ".join(f"{v:.4f}" for v in values))
    else:
        print(json.dumps({"entries": len(log), "out": args.out, "table": table}))
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surgact",
        description="Surgical action analytics toolkit",
    )
    parser.add_argument("--version", action="version", version=f"surgact {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ds = sub.add_parser("dataset", help="manifest validation and fold splits")
    ds_sub = ds.add_subparsers(dest="subcommand", required=True)
    v = ds_sub.add_parser("validate", help="check every clip against the protocol")
    v.add_argument("--manifest", required=True)
    v.add_argument("--pretty", action="store_true")
    v.set_defaults(func=cmd_dataset_validate)
    f = ds_sub.add_parser("folds", help="video-level k-fold assignment")
    f.add_argument("--manifest", required=True)
    f.add_argument("--k", type=int, default=10)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_dataset_folds)

    t = sub.add_parser("train", help="train the toy classifier on a synthetic benchmark")
    t.add_argument("--benchmark", choices=["motion", "motion-imbalanced"],
                   default="motion")
    t.add_argument("--epochs", type=int, default=0, help="override preset epochs")
    t.add_argument("--seed", type=int, default=None, help="override preset seed")
    t.add_argument("--no-dual-head", action="store_true",
                   help="ablation: freeze w_p = w_c = 1")
    t.add_argument("--checkpoint", help="write trained params (.npz)")
    t.add_argument("--scores", help="write held-out score matrix (.jsonl)")
    t.add_argument("--history", help="write per-epoch history (.json)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="ROC/AUROC/Youden report from a scores file")
    e.add_argument("--scores", required=True)
    e.add_argument("--out", required=True, help="CSV report path")
    e.add_argument("--resamples", type=int, default=1000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--groupwise", choices=["surgery", "action"],
                   help="also write a per-group macro-AUROC table")
    e.add_argument("--pretty", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("agree", help="two-rater agreement report")
    a.add_argument("--pairs", required=True, help="CSV: clip_id,rater_a,rater_b")
    a.add_argument("--out", help="also write the report to this path")
    a.set_defaults(func=cmd_agree)

    s = sub.add_parser("skill", help="action barcode skill factors and SVG")
    s.add_argument("--segments", required=True, help="line-delimited segment records")
    s.add_argument("--svg", help="write the barcode SVG here")
    s.add_argument("--total-duration", type=float, default=0.0)
    s.add_argument("--rule", choices=["repeats", "runs"], default="repeats")
    s.set_defaults(func=cmd_skill)

    p = sub.add_parser("plan", help="planning runs and scoring")
    p_sub = p.add_subparsers(dest="subcommand", required=True)
    pr = p_sub.add_parser("run", help="query the agent over every context")
    pr.add_argument("--contexts", required=True)
    pr.add_argument("--out", required=True, help="prediction log path (.jsonl)")
    pr.add_argument("--endpoint", help="chat-completions URL (env SURGACT_ENDPOINT)")
    pr.add_argument("--model", help="model name (env SURGACT_MODEL)")
    pr.add_argument("--config", help="JSON run-config file")
    pr.add_argument("--mock", choices=["ground-truth", "random"],
                    help="use the in-process mock server")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--parallelism", type=int, default=0)
    pr.set_defaults(func=cmd_plan_run)
    ps = p_sub.add_parser("score", help="compute the accuracy table from a log")
    ps.add_argument("--log", required=True)
    ps.add_argument("--out", required=True, help="CSV table path")
    ps.add_argument("--pretty", action="store_true")
    ps.set_defaults(func=cmd_plan_score)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _echo_config(args)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
