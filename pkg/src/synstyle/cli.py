"""Command-line entry points for the full experiment pipeline.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure (a NaN anywhere in a loss aborts the run loudly).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .classifier import ClassifierConfig, SyntaxClassifier, TextCnnClassifier, pretrain, syntax_probe
from .config import ExperimentConfig, config_snapshot, load_config
from .errors import ConfigError, DataError, NumericError
from .fileio import atomic_write_text
from .generator import (SacgModel, ablation_variant, required_guidance_arch, train,
                        transfer_corpus)
from .grammar import SyntheticGrammar, generate_synthetic
from .metrics import evaluate_corpus, train_lm
from .syntax import corpus_jsonl, read_corpus, read_references, read_trees, sentence_adjacency
from .vocab import Vocab


def _load_split(path, max_len: int):
    corpus = read_corpus(path)
    if not corpus:
        raise DataError(f"{path}: empty corpus")
    for i, s in enumerate(corpus):
        if len(s) > max_len:
            raise DataError(f"{path}: sentence {i} has {len(s)} tokens, max_len is {max_len}")
    return corpus


def _write_run_manifest(path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# gen-data


def cmd_gen_data(args) -> int:
    grammar = SyntheticGrammar()
    items = generate_synthetic(grammar, args.count, args.seed)
    rng = np.random.default_rng(args.seed + 1)
    by_style = ([it for it in items if it[0].style == 0], [it for it in items if it[0].style == 1])
    splits = {"train": [], "dev": [], "test": []}
    for group in by_style:
        n = len(group)
        n_train, n_dev = int(0.8 * n), int(0.1 * n)
        splits["train"].extend(group[:n_train])
        splits["dev"].extend(group[n_train:n_train + n_dev])
        splits["test"].extend(group[n_train + n_dev:])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, group in splits.items():
        order = rng.permutation(len(group))
        group = [group[i] for i in order]
        splits[name] = group
        atomic_write_text(out / f"{name}.jsonl", corpus_jsonl([s for s, _ in group]))
    refs_lines = "".join(json.dumps({"refs": [ref.text]}, sort_keys=True) + "\n"
                         for _, ref in splits["test"])
    atomic_write_text(out / "test.refs.jsonl", refs_lines)
    trees_lines = "".join(ref.ctree.serialize() + "\n" for _, ref in splits["test"])
    atomic_write_text(out / "test.ref_trees.txt", trees_lines)
    counts = {name: len(group) for name, group in splits.items()}
    print(f"wrote {counts} sentences to {out}")
    return 0


# ---------------------------------------------------------------------------
# train-classifier


def cmd_train_classifier(args) -> int:
    cfg = load_config(args.config)
    grammar = SyntheticGrammar()
    train_corpus = _load_split(cfg.train, cfg.max_len)
    dev_corpus = _load_split(cfg.dev, cfg.max_len)
    vocab = Vocab.from_corpus(train_corpus)
    ccfg = cfg.classifier_config(len(vocab))
    arch = cfg.classifier_arch
    model = (SyntaxClassifier if arch == "syntax" else TextCnnClassifier)(ccfg, vocab)
    started = time.monotonic()
    log = pretrain(model, train_corpus, dev_corpus, ccfg, grammar)
    elapsed = time.monotonic() - started
    out = Path(cfg.out_dir)
    ckpt_path = out / f"classifier-{arch}"
    log_path = out / f"classifier-{arch}.log.jsonl"
    ckpt.save_classifier(model, ckpt_path)
    atomic_write_text(log_path, "".join(json.dumps(asdict(rec), sort_keys=True) + "\n" for rec in log))
    _write_run_manifest(out / f"classifier-{arch}.run.json", {
        "command": "train-classifier",
        "config": config_snapshot(cfg),
        "seed": cfg.seed,
        "checkpoint": str(ckpt_path),
        "training_log": str(log_path),
        "frozen": model.frozen,
        "epochs_run": len(log),
        "final_val_accuracy": log[-1].val_accuracy,
        "wall_clock_seconds": elapsed,
    })
    print(f"classifier-{arch}: val acc {log[-1].val_accuracy:.4f} after {len(log)} epochs "
          f"({elapsed:.1f}s) -> {ckpt_path}")
    return 0


# ---------------------------------------------------------------------------
# train-sacg


def cmd_train_sacg(args) -> int:
    cfg = load_config(args.config)
    grammar = SyntheticGrammar()
    guide = ckpt.load_classifier(args.classifier)
    needed = required_guidance_arch(args.ablation)
    if guide.arch != needed:
        raise ConfigError(f"ablation {args.ablation!r} needs a {needed!r} guidance classifier, "
                          f"got {guide.arch!r} from {args.classifier}")
    if not guide.frozen:
        raise ConfigError(f"guidance classifier at {args.classifier} is not frozen")
    train_corpus = _load_split(cfg.train, cfg.max_len)
    dev_corpus = _load_split(cfg.dev, cfg.max_len)
    vocab = Vocab.from_corpus(train_corpus)
    if vocab.tokens != guide.vocab.tokens:
        raise ConfigError("training corpus vocabulary differs from the classifier's; "
                          "train both on the same data")
    scfg = ablation_variant(args.ablation, cfg.sacg_config(len(vocab)))
    model = SacgModel(scfg, vocab)
    hash_before = ckpt.params_hash(args.classifier)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / f"sacg-{scfg.variant}.log.jsonl"
    records = []
    started = time.monotonic()

    def on_epoch(rec):
        records.append(rec)
        atomic_write_text(log_path, "".join(json.dumps(asdict(r), sort_keys=True) + "\n" for r in records))
        print(f"epoch {rec.epoch}: loss={rec.loss:.3f} rec={rec.loss_rec:.3f} "
              f"cla={rec.loss_cla:.3f} acc={rec.val_accuracy:.3f} self-bleu={rec.val_self_bleu:.1f}")

    log = train(model, guide, train_corpus, dev_corpus, grammar, on_epoch=on_epoch)
    elapsed = time.monotonic() - started
    ckpt_path = out / f"sacg-{scfg.variant}"
    ckpt.save_generator(model, ckpt_path)
    hash_after = ckpt.params_hash(args.classifier)
    _write_run_manifest(out / f"sacg-{scfg.variant}.run.json", {
        "command": "train-sacg",
        "config": config_snapshot(cfg),
        "lambda": scfg.lambda_weight,
        "ablation": scfg.variant,
        "seed": cfg.seed,
        "checkpoint": str(ckpt_path),
        "training_log": str(log_path),
        "guidance_classifier": str(args.classifier),
        "classifier_hash_before": hash_before,
        "classifier_hash_after": hash_after,
        "wall_clock_seconds": elapsed,
    })
    if hash_before != hash_after:
        raise NumericError("guidance classifier checkpoint changed during training")
    print(f"sacg-{scfg.variant}: acc={log[-1].val_accuracy:.3f} "
          f"self-bleu={log[-1].val_self_bleu:.1f} ({elapsed:.1f}s) -> {ckpt_path}")
    return 0


# ---------------------------------------------------------------------------
# transfer


def cmd_transfer(args) -> int:
    model = ckpt.load_generator(args.model)
    grammar = SyntheticGrammar()
    corpus = read_corpus(args.input)
    if not corpus:
        raise DataError(f"{args.input}: empty corpus")
    transferred = transfer_corpus(model, corpus, grammar, target_style=args.target_style)
    atomic_write_text(args.out, corpus_jsonl(transferred))
    print(f"transferred {len(transferred)} sentences to style {args.target_style} -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args) -> int:
    model = ckpt.load_generator(args.model)
    clf = ckpt.load_classifier(args.classifier)
    if not clf.frozen:
        raise ConfigError(f"evaluation classifier at {args.classifier} is not frozen")
    grammar = SyntheticGrammar()
    test_corpus = read_corpus(args.test)
    if not test_corpus:
        raise DataError(f"{args.test}: empty corpus")
    lm_corpus = read_corpus(args.lm_train) if args.lm_train else test_corpus
    lm = train_lm(lm_corpus)
    references = read_references(args.refs) if args.refs else None
    ref_trees = read_trees(args.trees) if args.trees else None

    def transfer_fn(s):
        return model.transfer(s, sentence_adjacency(s), 1 - s.style)

    started = time.monotonic()
    transferred = [transfer_fn(s) for s in test_corpus]
    report = evaluate_corpus(transfer_fn, clf, lm, test_corpus, references=references,
                             ref_trees=ref_trees, grammar=grammar, transferred=transferred)
    elapsed = time.monotonic() - started
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "report.json", report.to_json())
    atomic_write_text(out / "report.txt", report.format_table())
    atomic_write_text(out / "transferred.jsonl", corpus_jsonl(transferred))
    _write_run_manifest(out / "evaluate.run.json", {
        "command": "evaluate",
        "model": str(args.model),
        "classifier": str(args.classifier),
        "test": str(args.test),
        "refs": str(args.refs) if args.refs else None,
        "trees": str(args.trees) if args.trees else None,
        "report": str(out / "report.json"),
        "wall_clock_seconds": elapsed,
    })
    sys.stdout.write(report.format_table())
    return 0


# ---------------------------------------------------------------------------
# probe


def cmd_probe(args) -> int:
    clf = ckpt.load_classifier(args.classifier)
    grammar = SyntheticGrammar()
    corpus = read_corpus(args.test)
    if not corpus:
        raise DataError(f"{args.test}: empty corpus")
    report = syntax_probe(clf, corpus, args.seed, grammar)
    payload = json.dumps(asdict(report), sort_keys=True, indent=2) + "\n"
    if args.out:
        atomic_write_text(args.out, payload)
    sys.stdout.write(payload)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synstyle",
                                     description="Syntax-aware text style transfer workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the synthetic two-style corpus")
    p.add_argument("--out", required=True, help="output directory for the corpus files")
    p.add_argument("--count", type=int, default=2500, help="total sentences (80/10/10 split)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-classifier", help="pretrain and freeze a style classifier")
    p.add_argument("--config", required=True, help="experiment config file")
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("train-sacg", help="train the style-transfer generator")
    p.add_argument("--config", required=True)
    p.add_argument("--classifier", required=True, help="frozen guidance classifier checkpoint")
    p.add_argument("--ablation", default="full",
                   choices=["full", "no_syntax_encoder", "no_syntax_both"])
    p.set_defaults(func=cmd_train_sacg)

    p = sub.add_parser("transfer", help="rewrite a corpus into a fixed target style")
    p.add_argument("--model", required=True, help="generator checkpoint")
    p.add_argument("--input", required=True, help="input corpus JSONL")
    p.add_argument("--target-style", type=int, required=True, choices=[0, 1])
    p.add_argument("--out", required=True, help="output corpus JSONL")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("evaluate", help="run the automatic metric suite")
    p.add_argument("--model", required=True, help="generator checkpoint")
    p.add_argument("--classifier", required=True, help="frozen classifier checkpoint")
    p.add_argument("--test", required=True, help="test corpus JSONL")
    p.add_argument("--refs", help="reference JSONL ({'refs': [...]} per line)")
    p.add_argument("--trees", help="reference trees, one bracketed tree per line")
    p.add_argument("--lm-train", help="corpus for the fluency language model "
                                      "(defaults to the test originals)")
    p.add_argument("--out", required=True, help="output directory for the report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("probe", help="word-order sensitivity probe for a classifier")
    p.add_argument("--classifier", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional report file")
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
