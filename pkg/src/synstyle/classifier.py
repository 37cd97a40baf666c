"""Syntax-aware style classifier and the TextCNN ablation baseline.

The syntax-aware model follows embedding -> Bi-LSTM -> GCN stack over the
dependency adjacency -> scaled dot-product attention with mean aggregation
-> fully connected softmax. After pretraining the model is frozen: its
parameters stop requiring gradients and later training must not touch them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import OptimizerState, Tape, Tensor
from .errors import DataError, NumericError, ShapeError, UnparseableError
from .grammar import SyntheticGrammar, toy_parse
from .layers import BiLstm, GcnLayer, Linear, activation_fn, attention_pool, conv_max, soft_embed, uniform_param
from .syntax import AdjacencyMatrix, Sentence, build_adjacency, permute_tokens
from .vocab import Vocab


@dataclass(frozen=True)
class ClassifierConfig:
    vocab_size: int
    embed_dim: int = 300
    lstm_hidden: int = 250  # per direction; the concatenated state feeds the GCN
    gcn_layers: int = 2
    gcn_dim: int = 500
    num_styles: int = 2
    epochs: int = 8
    batch_size: int = 1
    seed: int = 0
    learning_rate: float = 1e-5
    activation: str = "relu"
    patience: int = 5

    def __post_init__(self):
        for name in ("vocab_size", "embed_dim", "lstm_hidden", "gcn_layers", "gcn_dim",
                     "num_styles", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


class SyntaxClassifier:
    """Figure-style pipeline over a sentence and its dependency adjacency."""

    arch = "syntax"

    def __init__(self, config: ClassifierConfig, vocab: Vocab, rng: np.random.Generator | None = None):
        if config.vocab_size != len(vocab):
            raise ValueError(f"config vocab_size {config.vocab_size} != vocabulary size {len(vocab)}")
        rng = rng or np.random.default_rng(config.seed)
        self.config = config
        self.vocab = vocab
        self.frozen = False
        self.embedding = uniform_param((config.vocab_size, config.embed_dim), rng)
        self.bilstm = BiLstm(config.embed_dim, config.lstm_hidden, rng)
        dims = [2 * config.lstm_hidden] + [config.gcn_dim] * config.gcn_layers
        self.gcn = [GcnLayer(dims[i], dims[i + 1], rng, config.activation) for i in range(config.gcn_layers)]
        self.fc = Linear(config.gcn_dim, config.num_styles, rng)

    def params(self) -> dict[str, Tensor]:
        out = {"embedding": self.embedding, **self.bilstm.params("bilstm"), **self.fc.params("fc")}
        for i, layer in enumerate(self.gcn):
            out.update(layer.params(f"gcn.{i}"))
        return out

    def freeze(self) -> None:
        self.frozen = True
        for p in self.params().values():
            p.requires_grad = False
            p.grad = None

    def bilstm_encode(self, s: Sentence) -> Tensor:
        """Rows are the concatenated forward/backward LSTM states per token."""
        if len(s.tokens) == 0:
            raise DataError("cannot encode an empty sentence")
        ids = self.vocab.encode(s.tokens)
        return self.bilstm(ad.embedding_lookup(self.embedding, ids))

    def features_from_states(self, h: Tensor, a: AdjacencyMatrix) -> Tensor:
        if a.n != h.data.shape[0]:
            raise ShapeError(f"adjacency is {a.n}x{a.n} but there are {h.data.shape[0]} token states")
        a_t = Tensor(a.entries)
        for layer in self.gcn:
            h = layer(h, a_t)
        return attention_pool(h)

    def _probs_from_embeddings(self, emb: Tensor, a: AdjacencyMatrix) -> Tensor:
        h = self.bilstm(emb)
        pooled = self.features_from_states(h, a)
        logits = self.fc(ad.reshape(pooled, (1, -1)))
        return ad.reshape(ad.softmax(logits), (-1,))

    def classify(self, s: Sentence, a: AdjacencyMatrix) -> Tensor:
        """Probability vector over styles."""
        ids = self.vocab.encode(s.tokens)
        return self._probs_from_embeddings(ad.embedding_lookup(self.embedding, ids), a)

    def classify_soft(self, token_probs: Tensor, a: AdjacencyMatrix) -> Tensor:
        """Same pipeline, but each token is a probability mix of embeddings."""
        return self._probs_from_embeddings(soft_embed(self.embedding, token_probs), a)


def gcn_layer(h: Tensor, a: AdjacencyMatrix, w: Tensor, b: Tensor, activation: str = "relu") -> Tensor:
    """One graph-convolution step in matrix form: sigma(A H W + b)."""
    a_t = Tensor(a.entries) if isinstance(a, AdjacencyMatrix) else a
    act = activation_fn(activation)
    return act(ad.add_bias(ad.matmul(ad.matmul(a_t, h), w), b))


class TextCnnClassifier:
    """Syntax-free baseline: filter widths 3/4/5, 100 maps each, max pooling."""

    arch = "textcnn"
    widths = (3, 4, 5)
    maps_per_width = 100

    def __init__(self, config: ClassifierConfig, vocab: Vocab, rng: np.random.Generator | None = None):
        if config.vocab_size != len(vocab):
            raise ValueError(f"config vocab_size {config.vocab_size} != vocabulary size {len(vocab)}")
        rng = rng or np.random.default_rng(config.seed)
        self.config = config
        self.vocab = vocab
        self.frozen = False
        self.embedding = uniform_param((config.vocab_size, config.embed_dim), rng)
        self.filters = [(uniform_param((w * config.embed_dim, self.maps_per_width), rng),
                         uniform_param((self.maps_per_width,), rng)) for w in self.widths]
        self.fc = Linear(len(self.widths) * self.maps_per_width, config.num_styles, rng)

    def params(self) -> dict[str, Tensor]:
        out = {"embedding": self.embedding, **self.fc.params("fc")}
        for width, (w, b) in zip(self.widths, self.filters):
            out[f"conv{width}.w"] = w
            out[f"conv{width}.b"] = b
        return out

    def freeze(self) -> None:
        self.frozen = True
        for p in self.params().values():
            p.requires_grad = False
            p.grad = None

    def _probs_from_embeddings(self, emb: Tensor) -> Tensor:
        feats = [conv_max(emb, w, b, width) for width, (w, b) in zip(self.widths, self.filters)]
        pooled = ad.concat(feats, axis=-1)
        logits = self.fc(ad.reshape(pooled, (1, -1)))
        return ad.reshape(ad.softmax(logits), (-1,))

    def classify(self, s: Sentence, a: AdjacencyMatrix | None = None) -> Tensor:
        ids = self.vocab.encode(s.tokens)
        return self._probs_from_embeddings(ad.embedding_lookup(self.embedding, ids))

    def classify_soft(self, token_probs: Tensor, a: AdjacencyMatrix | None = None) -> Tensor:
        return self._probs_from_embeddings(soft_embed(self.embedding, token_probs))


Classifier = SyntaxClassifier | TextCnnClassifier


def parse_or_self_loops(tokens, grammar: SyntheticGrammar | None = None) -> AdjacencyMatrix:
    """toy_parse adjacency with the self-loop-only fallback."""
    try:
        heads, _ = toy_parse(tokens, grammar)
    except UnparseableError:
        return AdjacencyMatrix.self_loops(len(tokens))
    return build_adjacency(heads)


def classifier_adjacency(model: Classifier, s: Sentence, grammar: SyntheticGrammar | None = None) -> AdjacencyMatrix:
    if model.arch == "textcnn":
        return AdjacencyMatrix.self_loops(len(s))
    if s.dep_heads is not None:
        return build_adjacency(s.dep_heads)
    return parse_or_self_loops(s.tokens, grammar)


def accuracy(model: Classifier, corpus, grammar: SyntheticGrammar | None = None) -> float:
    if not corpus:
        raise DataError("cannot compute accuracy on an empty corpus")
    hits = 0
    for s in corpus:
        probs = model.classify(s, classifier_adjacency(model, s, grammar))
        hits += int(np.argmax(probs.data) == s.style)
    return hits / len(corpus)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    val_accuracy: float


def pretrain(model: Classifier, train_corpus, val_corpus, config: ClassifierConfig | None = None,
             grammar: SyntheticGrammar | None = None) -> list[EpochRecord]:
    """Minimize cross-entropy against gold style labels; freeze when done.

    Early stopping keeps the parameters of the best validation epoch.
    """
    cfg = config or model.config
    styles = {s.style for s in train_corpus}
    if styles != {0, 1}:
        raise DataError(f"pretraining needs both styles, found {sorted(styles)}")
    if model.frozen:
        raise ValueError("model is frozen; cannot pretrain")
    params = model.params()
    state = OptimizerState(learning_rate=cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    adjacencies = [classifier_adjacency(model, s, grammar) for s in train_corpus]
    log: list[EpochRecord] = []
    best_acc, best_snapshot, since_best = -1.0, None, 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_corpus))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            with Tape():
                losses = [ad.cross_entropy(model.classify(train_corpus[i], adjacencies[i]), train_corpus[i].style)
                          for i in batch]
                loss = ad.scale(losses[0] if len(losses) == 1 else
                                _sum_scalars(losses), 1.0 / len(batch))
            if not math.isfinite(float(loss.data)):
                raise NumericError(f"non-finite pretraining loss at epoch {epoch}")
            ad.backward(loss)
            ad.optimizer_step(params, state)
            total += float(loss.data) * len(batch)
        val_acc = accuracy(model, val_corpus, grammar)
        log.append(EpochRecord(epoch, total / len(train_corpus), val_acc))
        if val_acc > best_acc:
            best_acc = val_acc
            best_snapshot = {k: p.data.copy() for k, p in params.items()}
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    if best_snapshot is not None:
        for k, p in params.items():
            p.data = best_snapshot[k]
    model.freeze()
    return log


def _sum_scalars(ts: list[Tensor]) -> Tensor:
    total = ts[0]
    for t in ts[1:]:
        total = ad.add(total, t)
    return total


@dataclass(frozen=True)
class ProbeReport:
    accuracy_original: float
    accuracy_permuted: float
    delta: float
    arch: str = ""
    count: int = 0


def syntax_probe(model: Classifier, corpus, seed: int, grammar: SyntheticGrammar | None = None) -> ProbeReport:
    """Accuracy on original vs token-shuffled inputs.

    Permuted sentences are re-parsed with the grammar parser and fall back to
    a self-loop-only adjacency when they no longer parse.
    """
    acc_orig = accuracy(model, corpus, grammar)
    permuted = [permute_tokens(s, seed + i) for i, s in enumerate(corpus)]
    acc_perm = accuracy(model, permuted, grammar)
    return ProbeReport(acc_orig, acc_perm, acc_orig - acc_perm, model.arch, len(corpus))
