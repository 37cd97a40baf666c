"""Syntax-aware text style transfer at desk scale.

The package trains a dependency-GCN style classifier, uses it (frozen) to
guide a Gumbel-Softmax encoder-decoder generator, and scores transfers with
the usual automatic metrics: transfer accuracy, BLEU/self-BLEU, embedding
cosine similarity, word overlap, n-gram perplexity, their geometric mean
(G-Score), and constituency tree edit distance.
"""

from .classifier import (ClassifierConfig, ProbeReport, SyntaxClassifier, TextCnnClassifier,
                         pretrain, syntax_probe)
from .generator import SacgConfig, SacgModel, ablation_variant, train, transfer_corpus
from .grammar import SyntheticGrammar, generate_synthetic, toy_parse
from .metrics import (EvalReport, NGramLM, bleu, cosine_similarity, evaluate_corpus, gscore,
                      perplexity, self_bleu, train_lm, transfer_accuracy, word_overlap)
from .syntax import (AdjacencyMatrix, ConstituencyTree, Sentence, build_adjacency, parse_conllu,
                     parse_ptb_tree, permute_tokens, read_corpus)
from .treedist import ted, ted_mean
from .vocab import Vocab

__version__ = "0.1.0"

__all__ = [
    "AdjacencyMatrix", "ClassifierConfig", "ConstituencyTree", "EvalReport", "NGramLM",
    "ProbeReport", "SacgConfig", "SacgModel", "Sentence", "SyntaxClassifier",
    "SyntheticGrammar", "TextCnnClassifier", "Vocab", "ablation_variant", "bleu",
    "build_adjacency", "cosine_similarity", "evaluate_corpus", "generate_synthetic", "gscore",
    "parse_conllu", "parse_ptb_tree", "permute_tokens", "perplexity", "pretrain",
    "read_corpus", "self_bleu", "syntax_probe", "ted", "ted_mean", "toy_parse", "train",
    "train_lm", "transfer_accuracy", "transfer_corpus", "word_overlap",
]
