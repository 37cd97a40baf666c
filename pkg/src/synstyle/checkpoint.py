"""Model checkpoints: a JSON manifest plus one binary parameter blob.

A checkpoint is a directory holding `manifest.json` (model kind, config,
vocabulary, frozen flag, and per-parameter name/shape/byte-offset entries)
and `params.bin` (little-endian float64, row-major, in manifest order).
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .classifier import Classifier, ClassifierConfig, SyntaxClassifier, TextCnnClassifier
from .errors import DataError
from .fileio import atomic_write_bytes, atomic_write_text, sha256_file
from .generator import SacgConfig, SacgModel
from .vocab import Vocab

MANIFEST = "manifest.json"
BLOB = "params.bin"
FORMAT = "synstyle-checkpoint-v1"


def _save(path, kind: str, arch: str, config, vocab: Vocab, params: dict, frozen: bool) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    chunks = []
    offset = 0
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name].data, dtype="<f8")
        raw = arr.tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(raw)
        offset += len(raw)
    manifest = {
        "format": FORMAT,
        "kind": kind,
        "arch": arch,
        "frozen": frozen,
        "config": asdict(config),
        "vocab": list(vocab.tokens),
        "params": entries,
    }
    atomic_write_bytes(path / BLOB, b"".join(chunks))
    atomic_write_text(path / MANIFEST, json.dumps(manifest, sort_keys=True, indent=1) + "\n")


def _load(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    manifest_path = path / MANIFEST
    if not manifest_path.exists():
        raise DataError(f"no checkpoint manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != FORMAT:
        raise DataError(f"unsupported checkpoint format {manifest.get('format')!r}")
    blob = (path / BLOB).read_bytes()
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=start).reshape(shape)
        arrays[entry["name"]] = np.array(arr, dtype=np.float64)
    return manifest, arrays


def _restore_params(model, arrays: dict[str, np.ndarray]) -> None:
    params = model.params()
    missing = sorted(set(params) ^ set(arrays))
    if missing:
        raise DataError(f"checkpoint parameter names do not match the model: {missing}")
    for name, tensor in params.items():
        if tensor.data.shape != arrays[name].shape:
            raise DataError(f"parameter {name}: checkpoint shape {arrays[name].shape} "
                            f"!= model shape {tensor.data.shape}")
        tensor.data = arrays[name].copy()


def save_classifier(model: Classifier, path) -> None:
    _save(path, "classifier", model.arch, model.config, model.vocab, model.params(), model.frozen)


def load_classifier(path) -> Classifier:
    manifest, arrays = _load(path)
    if manifest["kind"] != "classifier":
        raise DataError(f"expected a classifier checkpoint, found kind {manifest['kind']!r}")
    config = ClassifierConfig(**manifest["config"])
    vocab = Vocab(tuple(manifest["vocab"]))
    cls = SyntaxClassifier if manifest["arch"] == "syntax" else TextCnnClassifier
    model = cls(config, vocab)
    _restore_params(model, arrays)
    if manifest["frozen"]:
        model.freeze()
    return model


def save_generator(model: SacgModel, path) -> None:
    _save(path, "generator", model.config.variant, model.config, model.vocab, model.params(), False)


def load_generator(path) -> SacgModel:
    manifest, arrays = _load(path)
    if manifest["kind"] != "generator":
        raise DataError(f"expected a generator checkpoint, found kind {manifest['kind']!r}")
    config = SacgConfig(**manifest["config"])
    model = SacgModel(config, Vocab(tuple(manifest["vocab"])))
    _restore_params(model, arrays)
    return model


def params_hash(path) -> str:
    """SHA-256 of the parameter blob; freeze checks compare these."""
    return sha256_file(Path(path) / BLOB)
