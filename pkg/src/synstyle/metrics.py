"""Automatic evaluation: ACC, BLEU family, cosine similarity, word overlap,
n-gram perplexity, G-Score aggregation, and corpus-level reports.

The fluency scorer is an interpolated order-3 n-gram language model trained
on the experiment's own training split; its absolute perplexities are only
meaningful relative to each other.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .classifier import Classifier, classifier_adjacency
from .errors import DataError, UnparseableError
from .grammar import SyntheticGrammar, toy_parse
from .syntax import ConstituencyTree, Sentence
from .treedist import ted, ted_mean
from .vocab import BOS, EOS, UNK

MAX_BLEU_ORDER = 4


def _tokens(x) -> tuple[str, ...]:
    return tuple(x.tokens) if isinstance(x, Sentence) else tuple(x)


# ---------------------------------------------------------------------------
# transfer accuracy


def transfer_accuracy(classifier: Classifier, transferred, target_styles,
                      grammar: SyntheticGrammar | None = None) -> float:
    """Fraction of transferred sentences the classifier assigns the target style."""
    transferred = list(transferred)
    if not transferred:
        raise DataError("cannot compute transfer accuracy on an empty corpus")
    if len(transferred) != len(target_styles):
        raise DataError(f"{len(transferred)} sentences vs {len(target_styles)} target labels")
    hits = 0
    for s, target in zip(transferred, target_styles):
        probs = classifier.classify(s, classifier_adjacency(classifier, s, grammar))
        hits += int(np.argmax(probs.data) == target)
    return hits / len(transferred)


# ---------------------------------------------------------------------------
# BLEU


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypotheses, reference_sets) -> float:
    """Corpus BLEU on a 0-100 scale.

    Uniform weights over n-grams up to min(4, shortest hypothesis length);
    counts are clipped against the best-matching reference; the brevity
    penalty uses the closest-length reference (ties broken toward the
    shorter one); zero-match orders get add-one smoothing.
    """
    hyps = [_tokens(h) for h in hypotheses]
    refs = [[_tokens(r) for r in rs] for rs in reference_sets]
    if len(hyps) != len(refs):
        raise DataError(f"{len(hyps)} hypotheses vs {len(refs)} reference sets")
    if not hyps:
        raise DataError("cannot compute BLEU on an empty corpus")
    for i, (h, rs) in enumerate(zip(hyps, refs)):
        if not h:
            raise DataError(f"empty hypothesis at position {i}")
        if not rs:
            raise DataError(f"empty reference set at position {i}")
    max_order = min(MAX_BLEU_ORDER, min(len(h) for h in hyps))
    matched = [0] * max_order
    total = [0] * max_order
    hyp_len = 0
    ref_len = 0
    for h, rs in zip(hyps, refs):
        hyp_len += len(h)
        ref_len += min((len(r) for r in rs), key=lambda L: (abs(L - len(h)), L))
        for n in range(1, max_order + 1):
            counts = _ngrams(h, n)
            best = Counter()
            for r in rs:
                rc = _ngrams(r, n)
                for gram in counts:
                    best[gram] = max(best[gram], rc[gram])
            matched[n - 1] += sum(min(c, best[g]) for g, c in counts.items())
            total[n - 1] += sum(counts.values())
    log_sum = 0.0
    for m, t in zip(matched, total):
        p = m / t if m > 0 else 1.0 / (t + 1)
        log_sum += math.log(p)
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_sum / max_order)


def self_bleu(transferred, originals) -> float:
    """BLEU of each transferred sentence against its own source sentence."""
    return bleu(transferred, [[_tokens(o)] for o in originals])


# ---------------------------------------------------------------------------
# embedding cosine and word overlap


def sentence_embedding(tokens, table: np.ndarray, vocab) -> np.ndarray:
    ids = vocab.encode(_tokens(tokens))
    return table[ids].mean(axis=0)


def cosine_similarity(s, s_transferred, embedding_table, vocab) -> float:
    """Cosine of mean-pooled token embeddings; zero vectors compare as 0."""
    table = embedding_table.data if hasattr(embedding_table, "data") else np.asarray(embedding_table)
    a = sentence_embedding(s, table, vocab)
    b = sentence_embedding(s_transferred, table, vocab)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def word_overlap(s, s_transferred, stopwords=()) -> float:
    """Jaccard overlap of unigram token sets, after stopword removal."""
    drop = set(stopwords)
    a = set(_tokens(s)) - drop
    b = set(_tokens(s_transferred)) - drop
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


# ---------------------------------------------------------------------------
# n-gram language model and perplexity


class NGramLM:
    """Interpolated n-gram model with add-k smoothing at the unigram floor.

    Interpolation weights are renormalized over the orders whose context was
    observed, so conditional probabilities always sum to 1 over the
    prediction vocabulary (which contains <unk> and <eos> but never <bos>).
    """

    ADD_K = 0.01
    WEIGHTS = (0.5, 0.3, 0.2)  # trigram, bigram, unigram

    def __init__(self, order: int = 3):
        if order < 1 or order > len(self.WEIGHTS):
            raise ValueError(f"order must be in [1, {len(self.WEIGHTS)}], got {order}")
        self.order = order
        self.counts: list[Counter] = [Counter() for _ in range(order)]
        self.context_totals: list[Counter] = [Counter() for _ in range(order)]
        self.words: tuple[str, ...] = ()
        self._index: dict[str, int] = {}
        self._uniform = False

    @classmethod
    def train(cls, corpus, order: int = 3) -> "NGramLM":
        sentences = [_tokens(s) for s in corpus]
        if not sentences:
            raise DataError("cannot train a language model on an empty corpus")
        lm = cls(order)
        vocab_words = sorted({w for s in sentences for w in s})
        lm.words = tuple(vocab_words) + (UNK, EOS)
        lm._index = {w: i for i, w in enumerate(lm.words)}
        for s in sentences:
            seq = [w if w in lm._index else UNK for w in s] + [EOS]
            padded = [BOS] * (order - 1) + seq
            for i in range(order - 1, len(padded)):
                for n in range(1, order + 1):
                    if n - 1 > i:
                        break
                    gram = tuple(padded[i - n + 1:i + 1])
                    lm.counts[n - 1][gram] += 1
                    lm.context_totals[n - 1][gram[:-1]] += 1
        return lm

    @classmethod
    def uniform(cls, words) -> "NGramLM":
        """Diagnostic constructor: every token has probability 1/len(words)."""
        lm = cls(1)
        lm.words = tuple(words)
        lm._index = {w: i for i, w in enumerate(lm.words)}
        lm._uniform = True
        return lm

    @property
    def vocab_size(self) -> int:
        return len(self.words)

    def prob(self, word: str, context: tuple[str, ...]) -> float:
        if self._uniform:
            return 1.0 / len(self.words)
        w = word if word in self._index else UNK
        v = len(self.words)
        unigram = (self.counts[0][(w,)] + self.ADD_K) / (self.context_totals[0][()] + self.ADD_K * v)
        components = [unigram]
        weights = [self.WEIGHTS[self.order - 1]]
        for n in range(2, self.order + 1):
            ctx = tuple(context[-(n - 1):])
            if len(ctx) < n - 1:
                continue
            ctx_total = self.context_totals[n - 1][ctx]
            if ctx_total > 0:
                components.append(self.counts[n - 1][ctx + (w,)] / ctx_total)
                weights.append(self.WEIGHTS[self.order - n])
        scale = sum(weights)
        return sum(wt * p for wt, p in zip(weights, components)) / scale


def train_lm(corpus, order: int = 3) -> NGramLM:
    return NGramLM.train(corpus, order)


def perplexity(lm: NGramLM, sentence) -> float:
    """exp of the average negative log-probability, EOS step included."""
    tokens = _tokens(sentence)
    if not tokens:
        raise DataError("cannot score an empty sentence")
    seq = list(tokens) + [EOS]
    context = [BOS] * (lm.order - 1)
    log_sum = 0.0
    for w in seq:
        log_sum += math.log(lm.prob(w, tuple(context)))
        context = (context + [w if w in lm._index else UNK])[-(lm.order - 1):] if lm.order > 1 else []
    return math.exp(-log_sum / len(seq))


def corpus_perplexity(lm: NGramLM, sentences) -> float:
    sentences = list(sentences)
    if not sentences:
        raise DataError("cannot score an empty corpus")
    return sum(perplexity(lm, s) for s in sentences) / len(sentences)


# ---------------------------------------------------------------------------
# G-Score


def gscore(acc_percent: float, bleu_like: float, cs: float, wo: float, ppl: float) -> float:
    """Geometric mean of ACC (percent), the applicable BLEU variant, CS, WO,
    and inverse perplexity: five factors."""
    values = {"acc_percent": acc_percent, "bleu": bleu_like, "cs": cs, "wo": wo, "ppl": ppl}
    bad = {k: v for k, v in values.items() if v <= 0}
    if bad:
        raise ValueError(f"gscore needs positive inputs, got {bad}")
    product = acc_percent * bleu_like * cs * wo / ppl
    return product ** (1.0 / 5.0)


# ---------------------------------------------------------------------------
# corpus evaluation


@dataclass
class EvalReport:
    acc_percent: float
    cs: float
    wo: float
    ppl: float
    g_score: float
    bleu: float | None = None
    self_bleu: float | None = None
    ted_mean: float | None = None
    count: int = 0

    @property
    def bleu_like(self) -> float:
        return self.bleu if self.bleu is not None else self.self_bleu

    def to_dict(self) -> dict:
        return {
            "acc_percent": self.acc_percent,
            "bleu": self.bleu,
            "self_bleu": self.self_bleu,
            "cs": self.cs,
            "wo": self.wo,
            "ppl": self.ppl,
            "g_score": self.g_score,
            "ted_mean": self.ted_mean,
            "count": self.count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def format_table(self) -> str:
        bleu_header = "BLEU" if self.bleu is not None else "self-BLEU"
        headers = ["ACC(%)", bleu_header, "CS", "WO", "PPL", "G-Score"]
        cells = [f"{self.acc_percent:.1f}", f"{self.bleu_like:.1f}", f"{self.cs:.3f}",
                 f"{self.wo:.3f}", f"{self.ppl:.1f}", f"{self.g_score:.2f}"]
        if self.ted_mean is not None:
            headers.append("TED")
            cells.append(f"{self.ted_mean:.1f}")
        widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
        head = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
        row = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        return head + "\n" + row + "\n"


def generated_tree(tokens, grammar: SyntheticGrammar | None = None) -> ConstituencyTree:
    """Parse with the grammar; unparseable output gets a flat single-level tree."""
    try:
        _, tree = toy_parse(tokens, grammar)
    except UnparseableError:
        tree = ConstituencyTree("S", tuple(ConstituencyTree(t) for t in tokens))
    return tree


def evaluate_corpus(transfer_fn, classifier: Classifier, lm: NGramLM, corpus,
                    references=None, ref_trees=None,
                    grammar: SyntheticGrammar | None = None, stopwords=(),
                    transferred: list[Sentence] | None = None) -> EvalReport:
    """Transfer every sentence toward the opposite style and score everything.

    With `references` the content metric is BLEU against them (and the
    report's self_bleu is absent); without, it is self-BLEU against the
    sources. TED appears only when reference trees are supplied. A
    precomputed `transferred` list short-circuits the transfer calls.
    """
    corpus = list(corpus)
    if not corpus:
        raise DataError("cannot evaluate an empty corpus")
    if transferred is None:
        transferred = [transfer_fn(s) for s in corpus]
    elif len(transferred) != len(corpus):
        raise DataError(f"{len(transferred)} transferred sentences vs {len(corpus)} sources")
    targets = [1 - s.style for s in corpus]
    acc = transfer_accuracy(classifier, transferred, targets, grammar)
    report = EvalReport(
        acc_percent=100.0 * acc,
        cs=float(np.mean([cosine_similarity(s, t, classifier.embedding, classifier.vocab)
                          for s, t in zip(corpus, transferred)])),
        wo=float(np.mean([word_overlap(s, t, stopwords) for s, t in zip(corpus, transferred)])),
        ppl=corpus_perplexity(lm, transferred),
        g_score=0.0,
        count=len(corpus),
    )
    if references is not None:
        if len(references) != len(corpus):
            raise DataError(f"{len(references)} reference sets vs {len(corpus)} sentences")
        report.bleu = bleu(transferred, references)
    else:
        report.self_bleu = self_bleu(transferred, corpus)
    report.g_score = gscore(report.acc_percent, report.bleu_like, report.cs, report.wo, report.ppl)
    if ref_trees is not None:
        if len(ref_trees) != len(corpus):
            raise DataError(f"{len(ref_trees)} reference trees vs {len(corpus)} sentences")
        report.ted_mean = ted_mean((generated_tree(t.tokens, grammar), rt)
                                   for t, rt in zip(transferred, ref_trees))
    return report
