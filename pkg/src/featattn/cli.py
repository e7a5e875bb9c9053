"""Command-line entry point: gen-data, train, eval, explain, gradcheck.

Exit codes: 0 success, 1 gradient check failure or unexpected error,
2 usage, 3 parse, 4 schema, 5 domain/parameter, 6 I/O, 7 artifact version
or load.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import gradcheck, interpret, pipeline
from .artifact import ModelArtifact, load_artifact, save_artifact
from .data.cohort import listwise_delete, load_csv
from .data.schema import FeatureSchema, default_schema
from .data.synthetic import PlantedSignal, generate_synthetic_cohort, write_ground_truth, xor_signal
from .errors import DomainError, FeatAttnError, SchemaError
from .model import ATTENTION
from .numerics import RandomSource
from .training import TrainConfig, evaluate

EXIT_IO = 6

COHORT_FILE = "cohort.csv"
GROUND_TRUTH_FILE = "ground_truth.json"
MODEL_FILE = "model.json"
CURVES_FILE = "curves.csv"
REPORT_FILE = "report.json"
VAL_FILE = "val.csv"
METRICS_FILE = "metrics.json"
ATTENTION_FILE = "attention_report.csv"
IMPORTANCE_FILE = "importance.csv"
EMBEDDINGS_FILE = "embeddings.json"


def _schema(args) -> FeatureSchema:
    return FeatureSchema.load(args.schema) if args.schema else default_schema()


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def cmd_gen_data(args) -> int:
    schema = _schema(args)
    planted = xor_signal()
    if args.planted:
        planted = PlantedSignal.from_dict(json.loads(Path(args.planted).read_text(encoding="utf-8")))
    cohort = generate_synthetic_cohort(schema, args.n, planted, RandomSource(args.seed), args.missing_rate)
    out = _out_dir(args.out)
    cohort.to_csv(out / COHORT_FILE)
    write_ground_truth(out / GROUND_TRUTH_FILE, planted, args.seed, args.n)
    print(f"wrote {len(cohort)} samples to {out / COHORT_FILE}")
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        val_fraction=args.val_fraction,
        seed=args.seed,
        dim=args.dim,
        attn_dim=args.attn_dim,
        hidden=tuple(int(h) for h in args.hidden.split(",") if h.strip()),
        dropout=args.dropout,
        pooling=args.ablation if args.ablation != "logistic" else ATTENTION,
        patience=args.patience,
    )


def cmd_train(args) -> int:
    schema = _schema(args)
    config = _train_config(args)
    with pipeline.stage("load"):
        cohort = load_csv(args.data, schema)
    prepared = pipeline.prepare(cohort, config.seed, config.val_fraction, args.z_threshold, args.smote_mode)
    model, report = pipeline.fit(prepared, config, args.ablation)
    out = _out_dir(args.out)
    save_artifact(ModelArtifact(schema, prepared.stats, model, config, config.seed), out / MODEL_FILE)
    report.write_curves(out / CURVES_FILE)
    prepared.val.to_csv(out / VAL_FILE, prepared.stats)
    _write_json(out / REPORT_FILE, report.to_dict())
    last = report.records[-1]
    print(
        f"{report.model_kind}: {len(report.records)} epochs, "
        f"train acc {last.train_acc:.4f}, val acc {last.val_acc:.4f} -> {out}"
    )
    return 0


def _load_for_inference(args):
    art = load_artifact(args.model)
    schema = _schema(args) if args.schema else art.schema
    if schema != art.schema:
        raise SchemaError("--schema differs from the schema stored in the artifact")
    cohort = load_csv(args.data, art.schema)
    if len(cohort) == 0:
        raise DomainError(f"{args.data} contains no samples")
    return art, listwise_delete(cohort)


def cmd_eval(args) -> int:
    art, cohort = _load_for_inference(args)
    metrics = evaluate(art.model, art.stats, cohort)
    out = _out_dir(args.out or Path(args.model).parent)
    _write_json(out / METRICS_FILE, metrics.to_dict())
    for key, value in metrics.to_dict().items():
        print(f"{key:>12}: {value}")
    return 0


def cmd_explain(args) -> int:
    art, cohort = _load_for_inference(args)
    if art.kind == "logistic":
        raise DomainError("the logistic baseline has no attention to explain")
    report = interpret.build_attention_report(art.model, art.stats, cohort)
    ranking = interpret.global_importance(report, args.aggregate)
    out = _out_dir(args.out or Path(args.model).parent)
    (out / ATTENTION_FILE).write_text(report.to_csv(), encoding="utf-8")
    (out / IMPORTANCE_FILE).write_text(ranking.to_csv(), encoding="utf-8")
    (out / EMBEDDINGS_FILE).write_text(
        interpret.embeddings_json(interpret.export_embeddings(art.model)), encoding="utf-8"
    )
    print(f"explained {len(report)} samples; top features: {', '.join(ranking.top(5))}")
    return 0


def cmd_gradcheck(args) -> int:
    report = gradcheck.run_gradcheck(args.configs, args.seed)
    worst = report.worst
    print(f"worst relative error {worst.rel_error:.3e} ({worst.group}, config {worst.config_index})")
    if report.passed:
        print(f"gradcheck passed: {args.configs} configurations, tolerance {report.tolerance:g}")
        return 0
    for r in report.failures():
        print(f"FAILED config {r.config_index} group {r.group}: {r.rel_error:.3e}", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="featattn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--schema", help="schema JSON (default: built-in 23-feature schema)")
        p.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("gen-data", help="write a synthetic cohort CSV and its ground truth")
    common(g)
    g.add_argument("--n", type=int, default=296)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--missing-rate", type=float, default=0.0)
    g.add_argument("--planted", help="JSON file describing the planted signal")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="clean, rebalance, split and train")
    common(t)
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--epochs", type=int, default=250)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--dim", type=int, default=8)
    t.add_argument("--attn-dim", type=int, default=8)
    t.add_argument("--hidden", default="32,16", help="comma-separated hidden layer sizes")
    t.add_argument("--dropout", type=float, default=0.3)
    t.add_argument("--smote-mode", choices=(pipeline.SMOTE_FULL, pipeline.SMOTE_TRAIN_ONLY, pipeline.SMOTE_OFF),
                   default=pipeline.SMOTE_FULL)
    t.add_argument("--ablation", choices=pipeline.ABLATIONS, default=ATTENTION)
    t.add_argument("--val-fraction", type=float, default=0.2)
    t.add_argument("--z-threshold", type=float, default=3.0)
    t.add_argument("--patience", type=int, default=None, help="early-stopping patience (off by default)")
    t.set_defaults(func=cmd_train)

    for name, func, text in (
        ("eval", cmd_eval, "metrics of a saved model on a cohort"),
        ("explain", cmd_explain, "attention report, importance ranking and embedding export"),
    ):
        e = sub.add_parser(name, help=text)
        e.add_argument("--model", required=True, help="model artifact JSON")
        e.add_argument("--data", required=True)
        e.add_argument("--schema")
        e.add_argument("--out", help="output directory (default: the model's directory)")
        if name == "explain":
            e.add_argument("--aggregate", choices=("mean", "median"), default="mean")
        e.set_defaults(func=func)

    c = sub.add_parser("gradcheck", help="finite-difference check of the backward pass")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--configs", type=int, default=20)
    c.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FeatAttnError as exc:
        print(f"featattn {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"featattn {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
