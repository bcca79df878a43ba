"""Command line entry point: validate | featurize | train | predict | evaluate | ablate | analyze-features."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from .corpus import LABELS, DataError, grouped_split, load_citation_records, load_fulltexts, load_scaffold_examples
from .evaluation import feature_analysis, feature_report_csv, macro_f1, per_class_prf, run_ablation, tfidf_probe
from .features import FEATURE_NAMES
from .pipeline import ConfigError, Featurizer, RunConfig, featurize_records, load_sectioned, load_static, prepare
from .tfidf import fit_tfidf, l2_normalize, transform
from .training import config_dict, fit_model, history_json, load_checkpoint, predict, save_checkpoint

log = logging.getLogger("citepurpose")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _out_dir(config: RunConfig) -> Path:
    config.output_dir.mkdir(parents=True, exist_ok=True)
    return config.output_dir


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def cmd_validate(config: RunConfig, args) -> dict:
    records = load_citation_records(config.citations)
    docs = load_fulltexts(config.fulltext_dir) if config.fulltext_dir else {}
    papers = sorted({r.citing_paper_id for r in records})
    report = {
        **config.provenance(),
        "records": len(records),
        "labeled": sum(r.label is not None for r in records),
        "label_counts": {lab.value: n for lab, n in sorted(Counter(r.label for r in records if r.label).items(), key=lambda kv: kv[0].index)},
        "citing_papers": len(papers),
        "fulltext_docs": len(docs),
        "papers_without_fulltext": [p for p in papers if p not in docs],
    }
    for key, task in (("worthiness", "worthiness"), ("sections", "section")):
        path = getattr(config, key)
        report[f"{task}_examples"] = len(load_scaffold_examples(path, task)) if path else 0
    if config.word_vectors:
        table = load_static(config)
        report["word_vectors"] = {"size": len(table), "dim": table.dim}
    _write_json(_out_dir(config) / "validate.json", report)
    print(json.dumps(report, sort_keys=True, indent=1))
    return report


def cmd_featurize(config: RunConfig, args) -> None:
    prep = prepare(config)
    out = _out_dir(config)
    by_id = {f.record.record_id: f for f in prep.train_feats + prep.val_feats}
    buf = io.StringIO()
    buf.write(f"# {config.provenance_line()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["record_id", *FEATURE_NAMES])
    for rec in prep.records:
        w.writerow([rec.record_id, *by_id[rec.record_id].hand.as_tuple()])
    (out / "features.csv").write_text(buf.getvalue(), encoding="utf-8")
    prep.featurizer.tfidf.save(out / "tfidf.json", **config.provenance())
    if args.export_vectors:
        with open(out / "tfidf_vectors.jsonl", "w", encoding="utf-8") as fh:
            for rec in prep.records:
                v = transform(prep.featurizer.tfidf, by_id[rec.record_id].window)
                if prep.featurizer.l2:
                    v = l2_normalize(v)
                fh.write(json.dumps({"record_id": rec.record_id, "vector": v.pairs()}) + "\n")
    print(f"wrote {out / 'features.csv'} and {out / 'tfidf.json'}")


def cmd_train(config: RunConfig, args) -> None:
    prep = prepare(config)
    result = fit_model(config.train, prep.data)
    out = _out_dir(config)
    meta = {
        **config.provenance(),
        "config": config.inputs,
        "train_config": config_dict(config.train),
        "best_epoch": result.best_epoch,
        "featurizer": prep.featurizer.to_meta(),
    }
    save_checkpoint(out / "model.ckpt.json", result.model, meta)
    (out / "history.json").write_text(history_json(result.history, **config.provenance()), encoding="utf-8")
    last = result.history[result.best_epoch - 1]
    print(f"best epoch {result.best_epoch}: val macro-F1 {last['val_macro_f1']}, checkpoint {out / 'model.ckpt.json'}")


def _load_model(config: RunConfig, args):
    path = Path(args.checkpoint) if args.checkpoint else config.output_dir / "model.ckpt.json"
    if not path.exists():
        raise ConfigError(f"checkpoint {path} not found; run `train` first")
    static = load_static(config)
    model, doc = load_checkpoint(path, static.matrix)
    return model, Featurizer.from_meta(doc["featurizer"], static)


def cmd_predict(config: RunConfig, args) -> None:
    model, featurizer = _load_model(config, args)
    records = load_citation_records(args.input or config.citations)
    feats = featurize_records(records, load_sectioned(config))
    labels, probs = predict(model, featurizer.encode_purpose(feats))
    buf = io.StringIO()
    buf.write(f"# {config.provenance_line()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["record_id", "predicted_label", *(f"p_{l.value}" for l in LABELS)])
    for rec, lab, p in zip(records, labels, probs):
        w.writerow([rec.record_id, lab.value, *(repr(float(x)) for x in p)])
    out = _out_dir(config) / "predictions.csv"
    out.write_text(buf.getvalue(), encoding="utf-8")
    print(f"wrote {len(records)} predictions to {out}")


def cmd_evaluate(config: RunConfig, args) -> dict:
    model, featurizer = _load_model(config, args)
    prep_records = load_citation_records(config.citations)
    split = grouped_split(prep_records, config.val_fraction, config.seed)
    val = [r for r in prep_records if r.record_id in split.val_ids]
    feats = featurize_records(val, load_sectioned(config))
    labels, _ = predict(model, featurizer.encode_purpose(feats))
    golds = [r.label for r in val]
    prf = per_class_prf(labels, golds)
    metrics = {
        **config.provenance(),
        "split": "validation",
        "n": len(val),
        "macro_f1": macro_f1(labels, golds),
        "per_class": {lab.value: dict(zip(("precision", "recall", "f1"), map(float, prf[i]))) for i, lab in enumerate(LABELS)},
    }
    _write_json(_out_dir(config) / "metrics.json", metrics)
    print(f"validation macro-F1 {metrics['macro_f1']:.4f} on {len(val)} records")
    return metrics


def cmd_ablate(config: RunConfig, args) -> None:
    prep = prepare(config)
    report = run_ablation(config.train, prep.data)
    out = _out_dir(config)
    (out / "ablation.csv").write_text(report.to_csv(config.provenance_line()), encoding="utf-8")
    _write_json(out / "ablation.json", {**config.provenance(), **report.to_dict()})
    print(report.to_csv(), end="")


def cmd_analyze_features(config: RunConfig, args) -> None:
    records = load_citation_records(config.citations)
    feats = featurize_records(records, load_sectioned(config))
    labeled = [f for f in feats if f.record.label is not None]
    X = np.array([f.hand.as_array() for f in labeled])
    y = [f.record.label for f in labeled]
    rows = feature_analysis(X, y)
    tfidf = fit_tfidf([f.window for f in labeled], config.tfidf_max_features)
    V = np.zeros((len(labeled), tfidf.dim))
    for i, f in enumerate(labeled):
        v = transform(tfidf, f.window)
        v = l2_normalize(v) if config.tfidf_l2 else v
        V[i, v.indices] = v.values
    rows.append(tfidf_probe(V, y, [f.record.citing_paper_id for f in labeled], seed=config.seed, val_fraction=config.val_fraction))
    out = _out_dir(config)
    (out / "feature_report.csv").write_text(feature_report_csv(rows, config.provenance_line()), encoding="utf-8")
    _write_json(out / "feature_report.json", {**config.provenance(), "rows": [r.to_dict() for r in rows]})
    print(feature_report_csv(rows), end="")


COMMANDS = {
    "validate": cmd_validate,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "analyze-features": cmd_analyze_features,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run config JSON")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default=None, help="override the output directory")
    common.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="citepurpose", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "featurize":
            p.add_argument("--export-vectors", action="store_true", help="also write tfidf_vectors.jsonl")
        if name in ("predict", "evaluate"):
            p.add_argument("--checkpoint", default=None, help="default: <out>/model.ckpt.json")
        if name == "predict":
            p.add_argument("--input", default=None, help="records to classify (default: config citations)")
    return parser


def _fail(args, code: int, exc: BaseException) -> int:
    if getattr(args, "json_errors", False):
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = RunConfig.load(args.config, seed=args.seed, out=args.out)
        COMMANDS[args.command](config, args)
    except (ConfigError, DataError) as exc:
        return _fail(args, EXIT_CONFIG, exc)
    except Exception as exc:  # noqa: BLE001
        log.debug("command failed", exc_info=True)
        return _fail(args, EXIT_RUNTIME, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
