"""Command-line surface: features, train, report, export-embeddings.

Machine-readable output goes to stdout; warnings and logs go to stderr.
Exit code 0 means no errors. Every training run embeds its resolved
config and seed in the report for auditability.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from baomi import data, dsp, training
from baomi.fusion import BanditState, FusionConfig
from baomi.training import TrainConfig


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _fail(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


# -- features ------------------------------------------------------------------

def cmd_features(args) -> int:
    rows = data.read_manifest(args.manifest)
    kept, skipped = data.filter_unknown(rows)
    for rid in skipped:
        _warn(f"skipping recording {rid!r} with label unknown")
    if not kept:
        _fail("manifest has no present/absent rows")
        return 1
    clips, errors = [], []
    for row in kept:
        try:
            clips.append(dsp.load_wav(row.wav_path, recording_id=row.recording_id))
        except (OSError, ValueError) as exc:
            errors.append(f"{row.wav_path}: {exc}")
    if errors:
        for e in errors:
            _fail(e)
        return 1
    clips = dsp.pad_to_max(clips)
    cfg = dsp.SpectralConfig()
    extract = dsp.mfcc if args.kind == "mfcc" else dsp.lfcc
    records = [
        data.FeatureRecord(row.recording_id, data.label_value(row.raw_label),
                           extract(clip, cfg))
        for row, clip in zip(kept, clips)
    ]
    data.write_fvec(records, args.out)
    print(f"wrote {len(records)} records of dimension "
          f"{records[0].values.size} to {args.out}")
    return 0


# -- train -----------------------------------------------------------------------

def _train_config(args) -> TrainConfig:
    fusion = FusionConfig(
        n_heads=args.heads,
        head_dim=args.head_dim,
        gamma=args.gamma,
        eps=args.eps,
        bandit_update_every=args.bandit_every,
        shared_head_weights=args.shared_head_weights,
    )
    return TrainConfig(
        model=args.model,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        lr=args.lr,
        n_folds=args.folds,
        fusion=fusion,
    )


def render_report(report: dict) -> str:
    lines = [f"{'fold':>6}  {'acc':>7}  {'ma_f1':>7}  {'wa_f1':>7}"]
    for frag in report["folds"]:
        lines.append(
            f"{frag['fold']:>6}  {frag['acc']:>7.2f}  "
            f"{frag['ma_f1']:>7.2f}  {frag['wa_f1']:>7.2f}"
        )
    mean = report["mean"]
    lines.append(
        f"{'mean':>6}  {mean['acc']:>7.2f}  {mean['ma_f1']:>7.2f}  "
        f"{mean['wa_f1']:>7.2f}"
    )
    return "\n".join(lines)


def validate_report(report: dict) -> None:
    for key in ("config", "seed", "folds", "mean"):
        if key not in report:
            raise ValueError(f"report missing key {key!r}")
    if not isinstance(report["folds"], list) or not report["folds"]:
        raise ValueError("report has an empty folds array")
    for frag in report["folds"]:
        for key in ("fold", "acc", "ma_f1", "wa_f1", "confusion"):
            if key not in frag:
                raise ValueError(f"fold entry missing key {key!r}")
    for key in ("acc", "ma_f1", "wa_f1"):
        if key not in report["mean"]:
            raise ValueError(f"mean entry missing key {key!r}")


def cmd_train(args) -> int:
    config = _train_config(args)
    records_a = data.read_fvec(args.a)
    records_b = None
    if config.is_fusion:
        if args.b is None:
            _fail(f"model {config.model!r} needs both --a and --b feature files")
            return 1
        records_b = data.read_fvec(args.b)
    elif args.b is not None:
        _fail(f"model {config.model!r} takes a single --a feature file")
        return 1

    report, results = training.run_cv(config, records_a, records_b)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report, indent=2))
    if records_b is not None:
        records_a, records_b = training.align_records(records_a, records_b)
    else:
        records_a = sorted(records_a, key=lambda r: r.recording_id)
    dims = {"dim_a": records_a[0].values.size}
    if records_b is not None:
        dims["dim_b"] = records_b[0].values.size
    for result in results:
        ckpt = out_dir / f"fold{result.fold}.ckpt"
        training.save_checkpoint(
            ckpt, config.model, dims, result.state_dict,
            bandit_state=result.bandit_state, train_config=config,
        )
        if config.model == "baomi":
            training.write_head_weight_csv(
                out_dir / f"head_weights_fold{result.fold}.csv",
                result.weight_rows,
            )
    if args.export_embeddings:
        model = training.build_model(
            config, dims["dim_a"], dims.get("dim_b"), np.random.default_rng(0),
        )
        model.load_state_dict(results[0].state_dict)
        training.export_embeddings(
            model, config, records_a, records_b,
            out_dir / "embeddings.csv", results[0].bandit_state,
        )
    print(render_report(report))
    print(f"report: {report_path}", file=sys.stderr)
    return 0


# -- report ------------------------------------------------------------------------

def cmd_report(args) -> int:
    with open(args.report, encoding="utf-8") as f:
        report = json.load(f)
    validate_report(report)
    print(render_report(report))
    return 0


# -- export-embeddings ----------------------------------------------------------------

def cmd_export_embeddings(args) -> int:
    sidecar, state_dict = training.load_checkpoint(args.checkpoint)
    config = TrainConfig(**{
        **sidecar["train_config"],
        "fusion": FusionConfig(**sidecar["train_config"]["fusion"]),
    })
    records_a = data.read_fvec(args.a)
    records_b = data.read_fvec(args.b) if args.b else None
    if config.is_fusion and records_b is None:
        _fail(f"checkpoint is a {config.model!r} model; pass --b as well")
        return 1
    if records_b is not None:
        records_a, records_b = training.align_records(records_a, records_b)
    else:
        records_a = sorted(records_a, key=lambda r: r.recording_id)
    model = training.build_model(
        config, sidecar["dims"]["dim_a"], sidecar["dims"].get("dim_b"),
        np.random.default_rng(0),
    )
    model.load_state_dict(state_dict)
    bandit = (
        BanditState.from_json(sidecar["bandit_state"])
        if sidecar.get("bandit_state")
        else None
    )
    training.export_embeddings(model, config, records_a, records_b,
                               args.out, bandit)
    print(f"wrote embeddings for {len(records_a)} records to {args.out}")
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="baomi", description="Heart murmur classification pipeline"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="extract MFCC/LFCC vectors to an .fvec file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--kind", choices=("mfcc", "lfcc"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="five-fold cross-validation training")
    p.add_argument("--model", choices=training.MODEL_KINDS, required=True)
    p.add_argument("--a", required=True, help="feature file (branch A / only input)")
    p.add_argument("--b", help="second feature file for fusion models")
    p.add_argument("--out", default="runs", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--head-dim", type=int, default=32)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--bandit-every", type=int, default=1,
                   help="bandit update period in batches; 0 disables")
    p.add_argument("--shared-head-weights", action="store_true")
    p.add_argument("--export-embeddings", action="store_true",
                   help="also write penultimate embeddings from the fold-0 model")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("report", help="render a report JSON as a text table")
    p.add_argument("report")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("export-embeddings",
                       help="penultimate embeddings from a saved checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_embeddings)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(str(exc))
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
