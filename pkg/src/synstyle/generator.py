"""Style-transfer generator: syntax-aware encoder, style codes, LSTM decoder.

The encoder reuses the classifier's feature-extractor architecture (with its
own weights); the decoder is a single-layer LSTM whose initial state is an
affine map of [latent ; style code]. Training combines teacher-forced
reconstruction with a classification loss on Gumbel-Softmax "soft" sentences
scored by a frozen style classifier, so gradients reach the generator through
the soft token path only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .autodiff import OptimizerState, Tape, Tensor
from .classifier import Classifier, parse_or_self_loops
from .errors import DataError, NumericError, ShapeError
from .grammar import SyntheticGrammar
from .layers import BiLstm, GcnLayer, GruCell, Linear, LstmCell, attention_pool, soft_embed, uniform_param
from .syntax import AdjacencyMatrix, Sentence, build_adjacency
from .vocab import Vocab

VARIANTS = ("full", "no_syntax_encoder", "no_syntax_both")
LOGIT_MASK = -1e9


@dataclass(frozen=True)
class SacgConfig:
    vocab_size: int
    embed_dim: int = 300
    lstm_hidden: int = 250
    gcn_layers: int = 2
    latent_dim: int = 500
    style_code_dim: int = 200
    decoder_hidden: int = 500
    lambda_weight: float = 1.0
    temperature: float = 0.5
    max_decode_len: int = 20
    learning_rate: float = 1e-5
    epochs: int = 10
    batch_size: int = 1
    seed: int = 0
    activation: str = "relu"
    variant: str = "full"

    def __post_init__(self):
        if self.lambda_weight < 0:
            raise ValueError(f"lambda_weight must be >= 0, got {self.lambda_weight}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; known: {VARIANTS}")


def ablation_variant(kind: str, config: SacgConfig) -> SacgConfig:
    """Configure a model variant: swap the syntax encoder for a GRU, and for
    `no_syntax_both` expect a TextCNN guidance classifier as well."""
    if kind not in VARIANTS:
        raise ValueError(f"unknown ablation kind {kind!r}; known: {VARIANTS}")
    return replace(config, variant=kind)


def required_guidance_arch(kind: str) -> str:
    if kind not in VARIANTS:
        raise ValueError(f"unknown ablation kind {kind!r}; known: {VARIANTS}")
    return "textcnn" if kind == "no_syntax_both" else "syntax"


class SacgModel:
    def __init__(self, config: SacgConfig, vocab: Vocab, rng: np.random.Generator | None = None):
        if config.vocab_size != len(vocab):
            raise ValueError(f"config vocab_size {config.vocab_size} != vocabulary size {len(vocab)}")
        rng = rng or np.random.default_rng(config.seed)
        self.config = config
        self.vocab = vocab
        self.embedding = uniform_param((config.vocab_size, config.embed_dim), rng)
        if config.variant == "full":
            self.bilstm = BiLstm(config.embed_dim, config.lstm_hidden, rng)
            dims = [2 * config.lstm_hidden] + [config.latent_dim] * config.gcn_layers
            self.gcn = [GcnLayer(dims[i], dims[i + 1], rng, config.activation)
                        for i in range(config.gcn_layers)]
            self.gru = None
        else:
            self.bilstm = None
            self.gcn = []
            self.gru = GruCell(config.embed_dim, config.latent_dim, rng)
        self.style_codes = uniform_param((2, config.style_code_dim), rng)
        self.dec_init = Linear(config.latent_dim + config.style_code_dim, 2 * config.decoder_hidden, rng)
        self.dec_cell = LstmCell(config.embed_dim, config.decoder_hidden, rng)
        self.out_proj = Linear(config.decoder_hidden, config.vocab_size, rng)
        # generated text never contains padding or a second BOS
        mask = np.zeros(config.vocab_size)
        mask[vocab.pad_id] = LOGIT_MASK
        mask[vocab.bos_id] = LOGIT_MASK
        self._logit_mask = Tensor(mask)
        self._bos_row = None

    def params(self) -> dict[str, Tensor]:
        out = {"embedding": self.embedding, "style_codes": self.style_codes,
               **self.dec_init.params("dec.init"), **self.dec_cell.params("dec.lstm"),
               **self.out_proj.params("dec.out")}
        if self.gru is not None:
            out.update(self.gru.params("enc.gru"))
        else:
            out.update(self.bilstm.params("enc.bilstm"))
            for i, layer in enumerate(self.gcn):
                out.update(layer.params(f"enc.gcn.{i}"))
        return out

    # -- encoder ------------------------------------------------------------

    def encode(self, s: Sentence, a: AdjacencyMatrix) -> Tensor:
        """Latent sentence representation, shape (1, latent_dim)."""
        ids = self.vocab.encode(s.tokens)
        emb = ad.embedding_lookup(self.embedding, ids)
        if self.gru is not None:
            return self.gru.last_state(emb)
        h = self.bilstm(emb)
        a_t = Tensor(a.entries)
        for layer in self.gcn:
            h = layer(h, a_t)
        return ad.reshape(attention_pool(h), (1, -1))

    # -- decoder ------------------------------------------------------------

    def _initial_state(self, z: Tensor, style: int) -> tuple[Tensor, Tensor]:
        code = ad.take_rows(self.style_codes, [int(style)])
        hc = self.dec_init(ad.concat([z, code], axis=-1))
        d = self.config.decoder_hidden
        return ad.slice_cols(hc, 0, d), ad.slice_cols(hc, d, 2 * d)

    def _step_logits(self, inp: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor, Tensor]:
        h, c = self.dec_cell.step(inp, h, c)
        logits = ad.add(self.out_proj(h), ad.reshape(self._logit_mask, (1, -1)))
        return logits, h, c

    def decode_reconstruct(self, z: Tensor, style: int, s: Sentence) -> Tensor:
        """Teacher-forced probability rows, one per gold token plus the EOS step."""
        if len(s.tokens) > self.config.max_decode_len:
            raise DataError(f"sentence of {len(s.tokens)} tokens exceeds max decode length "
                            f"{self.config.max_decode_len}")
        gold = self.vocab.encode(s.tokens)
        h, c = self._initial_state(z, style)
        rows = []
        prev = self.vocab.bos_id
        for g in gold + [self.vocab.eos_id]:
            inp = ad.take_rows(self.embedding, [prev])
            logits, h, c = self._step_logits(inp, h, c)
            rows.append(ad.softmax(logits))
            prev = g
        return rows[0] if len(rows) == 1 else ad.concat(rows, axis=0)

    def decode_transfer_soft(self, z: Tensor, target_style: int, temperature: float,
                             rng: np.random.Generator | None,
                             max_len: int | None = None) -> tuple[Tensor, list[int]]:
        """Autoregressive soft decoding for classifier guidance.

        Each step feeds the next input as the Gumbel-Softmax-weighted mix of
        embeddings, so gradients flow through the whole generated sequence.
        Returns (stacked soft rows, hard argmax token ids); stops at the EOS
        argmax (never at step 0) or at the length limit. The EOS step itself
        is not part of the soft sentence.
        """
        limit = max_len or self.config.max_decode_len
        h, c = self._initial_state(z, target_style)
        inp = ad.take_rows(self.embedding, [self.vocab.bos_id])
        soft_rows: list[Tensor] = []
        hard: list[int] = []
        for t in range(limit):
            logits, h, c = self._step_logits(inp, h, c)
            probs = ad.gumbel_softmax(ad.reshape(logits, (-1,)), temperature, rng)
            w = int(np.argmax(probs.data))
            if w == self.vocab.eos_id and t > 0:
                break
            if w == self.vocab.eos_id:  # degenerate first step: keep decoding
                w = int(np.argsort(probs.data)[-2])
            soft_rows.append(ad.reshape(probs, (1, -1)))
            hard.append(w)
            inp = soft_embed(self.embedding, soft_rows[-1])
        soft = soft_rows[0] if len(soft_rows) == 1 else ad.concat(soft_rows, axis=0)
        return soft, hard

    def transfer(self, s: Sentence, a: AdjacencyMatrix, target_style: int) -> Sentence:
        """Greedy argmax decoding with no noise; returns the transferred sentence."""
        z = self.encode(s, a)
        h, c = self._initial_state(z, target_style)
        prev = self.vocab.bos_id
        tokens: list[str] = []
        for t in range(self.config.max_decode_len):
            inp = ad.take_rows(self.embedding, [prev])
            logits, h, c = self._step_logits(inp, h, c)
            order = np.argsort(logits.data[0])
            w = int(order[-1])
            if w == self.vocab.eos_id:
                if t == 0:
                    w = int(order[-2])
                else:
                    break
            tokens.append(self.vocab.tokens[w])
            prev = w
        return Sentence(tuple(tokens), target_style)


# ---------------------------------------------------------------------------
# losses


def loss_rec(prob_rows: Tensor, s: Sentence, vocab: Vocab) -> Tensor:
    """Negative log-likelihood of the gold tokens (EOS included) under the rows."""
    gold = vocab.encode(s.tokens) + [vocab.eos_id]
    if prob_rows.data.shape[0] != len(gold):
        raise ShapeError(f"{prob_rows.data.shape[0]} probability rows vs {len(gold)} gold steps")
    return ad.nll_rows(prob_rows, gold)


def loss_cla(classifier: Classifier, soft_sentence: Tensor, adjacency: AdjacencyMatrix | None,
             target_style: int) -> Tensor:
    """Cross-entropy of the frozen classifier on a soft sentence vs the target style."""
    if not classifier.frozen:
        raise ValueError("guidance classifier must be frozen before generator training")
    probs = classifier.classify_soft(soft_sentence, adjacency)
    return ad.cross_entropy(probs, target_style)


@dataclass
class StepLosses:
    loss: float
    loss_rec: float
    loss_cla: float


def train_step(model: SacgModel, classifier: Classifier, batch: list[Sentence],
               state: OptimizerState, rng: np.random.Generator,
               grammar: SyntheticGrammar | None = None,
               adjacencies: list[AdjacencyMatrix] | None = None) -> StepLosses:
    """One optimizer update on a batch: L = L_rec + lambda * L_cla."""
    if not classifier.frozen:
        raise ValueError("guidance classifier must be frozen before generator training")
    cfg = model.config
    if model.vocab.tokens != classifier.vocab.tokens:
        raise DataError("generator and guidance classifier use different vocabularies")
    params = model.params()
    with Tape():
        rec_terms, cla_terms = [], []
        for i, s in enumerate(batch):
            a = adjacencies[i] if adjacencies is not None else _sentence_adjacency(s, grammar)
            z = model.encode(s, a)
            rec_terms.append(loss_rec(model.decode_reconstruct(z, s.style, s), s, model.vocab))
            target = 1 - s.style
            soft, hard = model.decode_transfer_soft(z, target, cfg.temperature, rng)
            a_soft = (parse_or_self_loops(model.vocab.decode(hard), grammar)
                      if classifier.arch == "syntax" else None)
            cla_terms.append(loss_cla(classifier, soft, a_soft, target))
        rec = ad.scale(_sum(rec_terms), 1.0 / len(batch))
        cla = ad.scale(_sum(cla_terms), 1.0 / len(batch))
        total = ad.add(rec, ad.scale(cla, cfg.lambda_weight))
    rec_v, cla_v, total_v = float(rec.data), float(cla.data), float(total.data)
    if not math.isfinite(total_v):
        raise NumericError(f"non-finite generator loss: rec={rec_v}, cla={cla_v}")
    ad.backward(total)
    ad.optimizer_step(params, state)
    return StepLosses(total_v, rec_v, cla_v)


def _sum(ts: list[Tensor]) -> Tensor:
    total = ts[0]
    for t in ts[1:]:
        total = ad.add(total, t)
    return total


def _sentence_adjacency(s: Sentence, grammar: SyntheticGrammar | None) -> AdjacencyMatrix:
    if s.dep_heads is not None:
        return build_adjacency(s.dep_heads)
    return parse_or_self_loops(s.tokens, grammar)


# ---------------------------------------------------------------------------
# training loop


@dataclass
class SacgEpochRecord:
    epoch: int
    loss: float
    loss_rec: float
    loss_cla: float
    val_accuracy: float
    val_self_bleu: float


def transfer_corpus(model: SacgModel, corpus, grammar: SyntheticGrammar | None = None,
                    target_style: int | None = None) -> list[Sentence]:
    """Transfer every sentence (toward the opposite style unless fixed)."""
    out = []
    for s in corpus:
        a = _sentence_adjacency(s, grammar)
        out.append(model.transfer(s, a, target_style if target_style is not None else 1 - s.style))
    return out


def train(model: SacgModel, classifier: Classifier, train_corpus: list[Sentence],
          dev_corpus: list[Sentence], grammar: SyntheticGrammar | None = None,
          on_epoch=None) -> list[SacgEpochRecord]:
    """Full training loop with per-epoch validation ACC and self-BLEU."""
    from .metrics import self_bleu, transfer_accuracy

    cfg = model.config
    rng = np.random.default_rng(cfg.seed)
    adjacencies = [_sentence_adjacency(s, grammar) for s in train_corpus]
    state = OptimizerState(learning_rate=cfg.learning_rate)
    log: list[SacgEpochRecord] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_corpus))
        tot = rec = cla = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            losses = train_step(model, classifier, [train_corpus[i] for i in idx], state, rng,
                                grammar, [adjacencies[i] for i in idx])
            tot += losses.loss * len(idx)
            rec += losses.loss_rec * len(idx)
            cla += losses.loss_cla * len(idx)
        transferred = transfer_corpus(model, dev_corpus, grammar)
        targets = [1 - s.style for s in dev_corpus]
        acc = transfer_accuracy(classifier, transferred, targets, grammar)
        sb = self_bleu(transferred, dev_corpus)
        n = len(train_corpus)
        record = SacgEpochRecord(epoch, tot / n, rec / n, cla / n, acc, sb)
        log.append(record)
        if on_epoch is not None:
            on_epoch(record)
    return log
