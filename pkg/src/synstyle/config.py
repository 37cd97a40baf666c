"""Experiment configuration: flat key = value sections, strictly validated.

Unknown sections or keys are rejected so typos never pass silently. The
defaults reproduce the published training setup where it is stated: 300-d
embeddings, one Bi-LSTM layer plus two GCN layers, 500-d latent, 200-d style
codes, learning rate 1e-5, and balance weight 1.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

from .classifier import ClassifierConfig
from .errors import ConfigError
from .generator import SacgConfig


@dataclass
class ExperimentConfig:
    # [data]
    train: str = "data/train.jsonl"
    dev: str = "data/dev.jsonl"
    test: str = "data/test.jsonl"
    max_len: int = 64
    # [classifier]
    classifier_arch: str = "syntax"
    embed_dim: int = 300
    lstm_hidden: int = 250
    gcn_layers: int = 2
    gcn_dim: int = 500
    classifier_epochs: int = 8
    classifier_batch_size: int = 1
    classifier_learning_rate: float = 1e-5
    activation: str = "relu"
    patience: int = 5
    # [sacg]
    latent_dim: int = 500
    style_code_dim: int = 200
    decoder_hidden: int = 500
    lambda_weight: float = 1.0
    temperature: float = 0.5
    max_decode_len: int = 20
    sacg_epochs: int = 10
    sacg_batch_size: int = 1
    sacg_learning_rate: float = 1e-5
    # [run]
    seed: int = 0
    out_dir: str = "runs/exp"
    adjacency_orientation: str = "row-dependent"

    def classifier_config(self, vocab_size: int, arch: str | None = None) -> ClassifierConfig:
        return ClassifierConfig(
            vocab_size=vocab_size,
            embed_dim=self.embed_dim,
            lstm_hidden=self.lstm_hidden,
            gcn_layers=self.gcn_layers,
            gcn_dim=self.gcn_dim,
            epochs=self.classifier_epochs,
            batch_size=self.classifier_batch_size,
            seed=self.seed,
            learning_rate=self.classifier_learning_rate,
            activation=self.activation,
            patience=self.patience,
        )

    def sacg_config(self, vocab_size: int, variant: str = "full") -> SacgConfig:
        return SacgConfig(
            vocab_size=vocab_size,
            embed_dim=self.embed_dim,
            lstm_hidden=self.lstm_hidden,
            gcn_layers=self.gcn_layers,
            latent_dim=self.latent_dim,
            style_code_dim=self.style_code_dim,
            decoder_hidden=self.decoder_hidden,
            lambda_weight=self.lambda_weight,
            temperature=self.temperature,
            max_decode_len=self.max_decode_len,
            learning_rate=self.sacg_learning_rate,
            epochs=self.sacg_epochs,
            batch_size=self.sacg_batch_size,
            seed=self.seed,
            activation=self.activation,
            variant=variant,
        )


# section -> key -> (attribute, type)
_SCHEMA: dict[str, dict[str, tuple[str, type]]] = {
    "data": {
        "train": ("train", str),
        "dev": ("dev", str),
        "test": ("test", str),
        "max_len": ("max_len", int),
    },
    "classifier": {
        "arch": ("classifier_arch", str),
        "embed_dim": ("embed_dim", int),
        "lstm_hidden": ("lstm_hidden", int),
        "gcn_layers": ("gcn_layers", int),
        "gcn_dim": ("gcn_dim", int),
        "epochs": ("classifier_epochs", int),
        "batch_size": ("classifier_batch_size", int),
        "learning_rate": ("classifier_learning_rate", float),
        "activation": ("activation", str),
        "patience": ("patience", int),
    },
    "sacg": {
        "latent_dim": ("latent_dim", int),
        "style_code_dim": ("style_code_dim", int),
        "decoder_hidden": ("decoder_hidden", int),
        "lambda": ("lambda_weight", float),
        "temperature": ("temperature", float),
        "max_decode_len": ("max_decode_len", int),
        "epochs": ("sacg_epochs", int),
        "batch_size": ("sacg_batch_size", int),
        "learning_rate": ("sacg_learning_rate", float),
    },
    "run": {
        "seed": ("seed", int),
        "out_dir": ("out_dir", str),
        "adjacency_orientation": ("adjacency_orientation", str),
    },
}


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as e:
        raise ConfigError(f"cannot parse {path}: {e}") from None
    cfg = ExperimentConfig()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]; known: {sorted(_SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]; "
                                  f"known: {sorted(_SCHEMA[section])}")
            attr, typ = _SCHEMA[section][key]
            try:
                value = typ(raw) if typ is not int else int(raw, 10)
            except ValueError:
                raise ConfigError(f"{path}: key {key!r} in [{section}] must be {typ.__name__}, "
                                  f"got {raw!r}") from None
            setattr(cfg, attr, value)
    _validate(cfg, path)
    return cfg


def _validate(cfg: ExperimentConfig, path) -> None:
    if cfg.classifier_arch not in ("syntax", "textcnn"):
        raise ConfigError(f"{path}: classifier arch must be 'syntax' or 'textcnn', got {cfg.classifier_arch!r}")
    if cfg.adjacency_orientation not in ("row-dependent", "row-head"):
        raise ConfigError(f"{path}: adjacency_orientation must be 'row-dependent' or 'row-head'")
    positive = ["max_len", "embed_dim", "lstm_hidden", "gcn_layers", "gcn_dim", "classifier_epochs",
                "classifier_batch_size", "latent_dim", "style_code_dim", "decoder_hidden",
                "max_decode_len", "sacg_epochs", "sacg_batch_size"]
    for name in positive:
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{path}: {name} must be positive")
    for name in ("classifier_learning_rate", "sacg_learning_rate", "temperature"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{path}: {name} must be positive")
    if cfg.lambda_weight < 0:
        raise ConfigError(f"{path}: lambda must be >= 0")


def config_snapshot(cfg: ExperimentConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
