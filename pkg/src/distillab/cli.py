"""Single executable exposing the whole lab.

Subcommands: gen-data, train-teacher, distill, sim-diversity,
bench-projection, svm-demo, sweep-epsilon. Exit codes: 0 success, 2 for
configuration/validation problems, 1 for unexpected internal errors. All
randomness flows from --seed through named sub-streams, and every output
file is written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .bench import BENCH_HEADER, bench_projection, bench_rows_as_lists
from .datagen import gen_keyword_task, load_jsonl, save_jsonl
from .distillation import (
    METRICS_HEADER,
    AugSpec,
    DistillConfig,
    TrainConfig,
    distill,
    evaluate,
    metrics_rows_as_lists,
    train_teacher,
)
from .diversity import HypercubeConfig, sim_summary
from .errors import ValidationError
from .io_utils import atomic_write_csv, atomic_write_json, atomic_write_text, csv_text, json_dumps, read_json
from .model import load_model, save_model
from .svmdemo import render_report_text, run_boundary_demo


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part != ""]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part != ""]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distillab", description=__doc__)
    parser.add_argument("--config", help="JSON file of flag defaults; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a planted-keyword task")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--z", type=int, default=200, help="vocabulary size")
    p.add_argument("--l", type=int, default=16, help="sequence length")
    p.add_argument("--c", type=int, default=4, help="class count")
    p.add_argument("--keywords-per-class", type=int, default=2)
    p.add_argument("--n-train", type=int, default=128)
    p.add_argument("--n-unlabeled", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=2000)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train-teacher", help="train a teacher on labeled data")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=1200)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--embed-dim", type=int, default=16)
    p.add_argument("--hidden", type=_int_list, default=[64, 64])
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--eval", help="optional dataset to report accuracy on")

    p = sub.add_parser("distill", help="distill a student with an augmentation recipe")
    p.add_argument("--teacher", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--test", help="held-out dataset for the metrics trace")
    p.add_argument(
        "--aug",
        action="append",
        default=None,
        choices=["none", "mixup", "fgsm", "augpro-mix", "augpro-fgsm", "knn"],
        help="repeatable; each occurrence adds one augmented batch per step",
    )
    p.add_argument("--sign", choices=["ascent", "descent", "random"], default="ascent")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--pairing", choices=["shift-half", "shuffled"], default="shift-half")
    p.add_argument("--d", choices=["ce", "mse"], default="ce")
    p.add_argument("--fgsm-loss", choices=["kd", "ce", "distill"], default="kd")
    p.add_argument("--knn-k", type=int, default=15)
    p.add_argument("--knn-portion", type=float, default=0.1)
    p.add_argument("--combine", choices=["sum", "average"], default="sum")
    p.add_argument("--project-table", choices=["teacher", "student"], default="teacher")
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--student-embed-dim", type=int, default=16)
    p.add_argument("--student-hidden", type=_int_list, default=[8])
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-metrics", help="metrics CSV path")
    p.add_argument("--out-model", help="student model path")

    p = sub.add_parser("sim-diversity", help="Monte Carlo coverage/error-gap estimates")
    p.add_argument("--variant", choices=["mix", "fgsm"], required=True)
    p.add_argument("--n", type=int, required=True, help="training-set size (power of two)")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="JSON path (default: stdout)")

    p = sub.add_parser("bench-projection", help="projection wall-time across vocab sizes")
    p.add_argument("--z", type=_int_list, default=[1024, 2048, 4096])
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--length", type=int, default=32)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("svm-demo", help="exact boundary-shift walkthrough")
    p.add_argument("--json", action="store_true", help="print JSON instead of text")
    p.add_argument("--out", help="write the JSON report to this path")

    p = sub.add_parser("sweep-epsilon", help="distill once per epsilon and tabulate accuracy")
    p.add_argument("--teacher", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--epsilons", type=_float_list, default=[0.01, 0.02, 0.05, 0.1, 0.2])
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sign", choices=["ascent", "descent", "random"], default="ascent")
    p.add_argument("--student-embed-dim", type=int, default=16)
    p.add_argument("--student-hidden", type=_int_list, default=[8])
    p.add_argument("--out", help="CSV path (default: stdout)")
    return parser


def _recipe_from_args(args: argparse.Namespace) -> tuple[AugSpec, ...]:
    recipe = []
    for kind in args.aug or []:
        recipe.append(
            AugSpec(
                kind=kind,
                lam=args.lam,
                pairing=args.pairing,
                epsilon=args.epsilon,
                sign_mode=args.sign,
                grad_loss=args.fgsm_loss,
                knn_k=args.knn_k,
                knn_portion=args.knn_portion,
            )
        )
    return tuple(recipe)


def cmd_gen_data(args: argparse.Namespace) -> int:
    train, unlabeled, test = gen_keyword_task(
        seed=args.seed,
        vocab_size=args.z,
        length=args.l,
        n_classes=args.c,
        n_train=args.n_train,
        n_unlabeled=args.n_unlabeled,
        n_test=args.n_test,
        keywords_per_class=args.keywords_per_class,
    )
    os.makedirs(args.out, exist_ok=True)
    for name, split in [("train", train), ("unlabeled", unlabeled), ("test", test)]:
        save_jsonl(split, os.path.join(args.out, f"{name}.jsonl"))
    meta = dict(train.meta)
    meta.pop("split", None)
    meta["splits"] = {"train": len(train), "unlabeled": len(unlabeled), "test": len(test)}
    atomic_write_json(os.path.join(args.out, "meta.json"), meta)
    print(f"wrote train/unlabeled/test JSONL plus meta.json to {args.out}")
    return 0


def cmd_train_teacher(args: argparse.Namespace) -> int:
    data = load_jsonl(args.data)
    cfg = TrainConfig(
        steps=args.steps,
        batch=args.batch,
        lr=args.lr,
        seed=args.seed,
        embed_dim=args.embed_dim,
        hidden=tuple(args.hidden),
    )
    model = train_teacher(data, cfg)
    save_model(model, args.out)
    msg = f"teacher saved to {args.out} (train acc {evaluate(model, data):.4f}"
    if args.eval:
        msg += f", eval acc {evaluate(model, load_jsonl(args.eval)):.4f}"
    print(msg + ")")
    return 0


def cmd_distill(args: argparse.Namespace) -> int:
    if not os.path.exists(args.teacher):
        raise ValidationError(f"teacher model file not found: {args.teacher}")
    teacher = load_model(args.teacher)
    data = load_jsonl(args.data, vocab_size=teacher.table.size)
    eval_data = load_jsonl(args.test, vocab_size=teacher.table.size) if args.test else None
    cfg = DistillConfig(
        steps=args.steps,
        batch=args.batch,
        lr=args.lr,
        seed=args.seed,
        distance=args.d,
        recipe=_recipe_from_args(args),
        embed_dim=args.student_embed_dim,
        hidden=tuple(args.student_hidden),
        combine=args.combine,
        project_table=args.project_table,
        threads=args.threads,
    )
    student, rows = distill(teacher, data, cfg, eval_data=eval_data)
    if args.out_metrics:
        atomic_write_csv(args.out_metrics, METRICS_HEADER, metrics_rows_as_lists(rows))
    if args.out_model:
        save_model(student, args.out_model)
    final = rows[-1]
    print(f"distilled: final {final.split} accuracy {final.accuracy:.4f} after {args.steps} steps")
    return 0


def cmd_sim_diversity(args: argparse.Namespace) -> int:
    cfg = HypercubeConfig(n=args.n, trials=args.trials, seed=args.seed)
    summary = sim_summary(cfg, args.variant, threads=args.threads)
    text = json_dumps(summary)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench_projection(args: argparse.Namespace) -> int:
    rows = bench_projection(
        vocab_sizes=args.z,
        batch=args.batch,
        length=args.length,
        dim=args.dim,
        reps=args.reps,
        seed=args.seed,
        threads=args.threads,
    )
    text = csv_text(BENCH_HEADER, bench_rows_as_lists(rows))
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_svm_demo(args: argparse.Namespace) -> int:
    report = run_boundary_demo()
    if args.out:
        atomic_write_json(args.out, report)
    sys.stdout.write(json_dumps(report) if args.json else render_report_text(report))
    return 0


def cmd_sweep_epsilon(args: argparse.Namespace) -> int:
    teacher = load_model(args.teacher)
    data = load_jsonl(args.data, vocab_size=teacher.table.size)
    test = load_jsonl(args.test, vocab_size=teacher.table.size)
    rows = []
    for eps in args.epsilons:
        cfg = DistillConfig(
            steps=args.steps,
            batch=args.batch,
            lr=args.lr,
            seed=args.seed,
            recipe=(AugSpec(kind="augpro-fgsm", epsilon=eps, sign_mode=args.sign),),
            embed_dim=args.student_embed_dim,
            hidden=tuple(args.student_hidden),
        )
        student, _ = distill(teacher, data, cfg)
        rows.append([eps, evaluate(student, test)])
    text = csv_text(["epsilon", "test_accuracy"], rows)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-teacher": cmd_train_teacher,
    "distill": cmd_distill,
    "sim-diversity": cmd_sim_diversity,
    "bench-projection": cmd_bench_projection,
    "svm-demo": cmd_svm_demo,
    "sweep-epsilon": cmd_sweep_epsilon,
}


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    # --config supplies defaults; flags given on the command line still win
    # because defaults only fill in unset values.
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        parser.error("--config needs a path")
    path = argv[idx + 1]
    obj = read_json(path)
    if not isinstance(obj, dict):
        parser.error(f"--config {path}: expected a JSON object")
    cleaned = argv[:idx] + argv[idx + 2 :]
    provided = {k.replace("-", "_"): v for k, v in obj.items()}
    for action in parser._subparsers._group_actions:  # noqa: SLF001 - argparse has no public hook
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                for sub_action in sub._actions:
                    if sub_action.dest in provided:
                        sub.set_defaults(**{sub_action.dest: provided[sub_action.dest]})
                        sub_action.required = False
    return cleaned


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse usage errors already exit with 2
        raise exc
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
