"""Deterministic two-style synthetic grammar with ground-truth transfers.

Style 0:  "the <adj0> <noun> <verb> <adv0> ."
Style 1:  "<adv1> , the <adj1> <noun> <verb> ."

The styles differ lexically (disjoint marker lexicons, index-paired between
styles) and syntactically (adverb fronting with a comma), so a classifier can
exploit either cue. Every template instance carries a fixed dependency head
pattern and constituency skeleton, and flipping the style of an instance is
an involution that preserves the shared noun and verb.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnparseableError
from .syntax import ConstituencyTree, Sentence

STYLE0_ADJ = ("nice", "cool", "big", "old", "new", "odd", "tiny", "loud", "soft", "warm", "cold", "plain")
STYLE1_ADJ = ("remarkable", "admirable", "exquisite", "elegant", "profound", "notable",
              "splendid", "gracious", "eminent", "stately", "refined", "superb")
STYLE0_ADV = ("today", "now", "fast", "loudly", "softly", "early", "late", "often",
              "daily", "nearby", "alone", "again")
STYLE1_ADV = ("moreover", "indeed", "certainly", "notably", "consequently", "furthermore",
              "accordingly", "evidently", "undoubtedly", "nevertheless", "likewise", "thus")
NOUNS = ("cat", "dog", "bird", "horse", "teacher", "farmer", "writer", "doctor",
         "river", "garden", "engine", "market", "singer", "child", "sailor", "painter")
VERBS = ("sleeps", "runs", "sings", "waits", "works", "plays", "reads", "speaks",
         "moves", "rests", "turns", "falls", "grows", "stands", "listens", "smiles")

HEADS_STYLE0 = (2, 2, 3, -1, 3, 3)
HEADS_STYLE1 = (5, 5, 4, 4, 5, -1, 5)


def _leaf(tok: str) -> ConstituencyTree:
    return ConstituencyTree(tok)


def _tree_style0(tokens) -> ConstituencyTree:
    the, adj, noun, verb, adv, dot = tokens
    return ConstituencyTree("S", (
        ConstituencyTree("NP", (
            ConstituencyTree("DT", (_leaf(the),)),
            ConstituencyTree("JJ", (_leaf(adj),)),
            ConstituencyTree("NN", (_leaf(noun),)),
        )),
        ConstituencyTree("VP", (
            ConstituencyTree("VB", (_leaf(verb),)),
            ConstituencyTree("ADVP", (ConstituencyTree("RB", (_leaf(adv),)),)),
        )),
        ConstituencyTree("PUNCT", (_leaf(dot),)),
    ))


def _tree_style1(tokens) -> ConstituencyTree:
    adv, comma, the, adj, noun, verb, dot = tokens
    return ConstituencyTree("S", (
        ConstituencyTree("ADVP", (ConstituencyTree("RB", (_leaf(adv),)),)),
        ConstituencyTree("PUNCT", (_leaf(comma),)),
        ConstituencyTree("NP", (
            ConstituencyTree("DT", (_leaf(the),)),
            ConstituencyTree("JJ", (_leaf(adj),)),
            ConstituencyTree("NN", (_leaf(noun),)),
        )),
        ConstituencyTree("VP", (ConstituencyTree("VB", (_leaf(verb),)),)),
        ConstituencyTree("PUNCT", (_leaf(dot),)),
    ))


@dataclass(frozen=True)
class SyntheticGrammar:
    """Two templates with per-slot lexicons and a deterministic style flip."""

    adjectives: tuple[tuple[str, ...], tuple[str, ...]] = (STYLE0_ADJ, STYLE1_ADJ)
    adverbs: tuple[tuple[str, ...], tuple[str, ...]] = (STYLE0_ADV, STYLE1_ADV)
    nouns: tuple[str, ...] = NOUNS
    verbs: tuple[str, ...] = VERBS

    def words(self) -> set[str]:
        out = {"the", ",", "."}
        for lex in (*self.adjectives, *self.adverbs, self.nouns, self.verbs):
            out.update(lex)
        return out

    def instance(self, style: int, adj_i: int, noun_i: int, verb_i: int, adv_i: int) -> Sentence:
        noun, verb = self.nouns[noun_i], self.verbs[verb_i]
        if style == 0:
            tokens = ("the", self.adjectives[0][adj_i], noun, verb, self.adverbs[0][adv_i], ".")
            return Sentence(tokens, 0, HEADS_STYLE0, _tree_style0(tokens))
        tokens = (self.adverbs[1][adv_i], ",", "the", self.adjectives[1][adj_i], noun, verb, ".")
        return Sentence(tokens, 1, HEADS_STYLE1, _tree_style1(tokens))

    def match(self, tokens) -> tuple[int, tuple[int, int, int, int]] | None:
        """Return (style, slot indices) for an exact template instance, else None.

        Slot words must come from the lexicon of the matched style; this is
        the strict match used by the ground-truth flip.
        """
        t = tuple(tokens)
        for style in (0, 1):
            adj_lex, adv_lex = self.adjectives[style], self.adverbs[style]
            if style == 0:
                ok = (len(t) == 6 and t[0] == "the" and t[5] == "."
                      and t[1] in adj_lex and t[2] in self.nouns and t[3] in self.verbs and t[4] in adv_lex)
                if ok:
                    return 0, (adj_lex.index(t[1]), self.nouns.index(t[2]), self.verbs.index(t[3]), adv_lex.index(t[4]))
            else:
                ok = (len(t) == 7 and t[1] == "," and t[2] == "the" and t[6] == "."
                      and t[3] in adj_lex and t[4] in self.nouns and t[5] in self.verbs and t[0] in adv_lex)
                if ok:
                    return 1, (adj_lex.index(t[3]), self.nouns.index(t[4]), self.verbs.index(t[5]), adv_lex.index(t[0]))
        return None

    def flip(self, tokens) -> tuple[str, ...]:
        """Ground-truth style transfer of a template instance (an involution)."""
        m = self.match(tokens)
        if m is None:
            raise UnparseableError(f"not a template instance: {' '.join(tokens)}")
        style, (adj_i, noun_i, verb_i, adv_i) = m
        return self.instance(1 - style, adj_i, noun_i, verb_i, adv_i).tokens


def toy_parse(tokens, grammar: SyntheticGrammar | None = None) -> tuple[tuple[int, ...], ConstituencyTree]:
    """Deterministic (dep_heads, constituency tree) for a template-shaped sentence.

    Slot matching is style-agnostic (a marker word from either style fits its
    slot), mirroring a parser that does not care about register; only the
    template shape must match.
    """
    g = grammar or SyntheticGrammar()
    t = tuple(tokens)
    adj = set(g.adjectives[0]) | set(g.adjectives[1])
    adv = set(g.adverbs[0]) | set(g.adverbs[1])
    nouns, verbs = set(g.nouns), set(g.verbs)
    if (len(t) == 6 and t[0] == "the" and t[5] == "."
            and t[1] in adj and t[2] in nouns and t[3] in verbs and t[4] in adv):
        return HEADS_STYLE0, _tree_style0(t)
    if (len(t) == 7 and t[1] == "," and t[2] == "the" and t[6] == "."
            and t[0] in adv and t[3] in adj and t[4] in nouns and t[5] in verbs):
        return HEADS_STYLE1, _tree_style1(t)
    raise UnparseableError(f"no template matches: {' '.join(t)}")


def generate_synthetic(grammar: SyntheticGrammar, count: int, seed: int) -> list[tuple[Sentence, Sentence]]:
    """Balanced labeled corpus; each item pairs a sentence with its flip reference."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    items: list[tuple[Sentence, Sentence]] = []
    for k in range(count):
        style = k % 2
        adj_i = int(rng.integers(len(grammar.adjectives[style])))
        adv_i = int(rng.integers(len(grammar.adverbs[style])))
        noun_i = int(rng.integers(len(grammar.nouns)))
        verb_i = int(rng.integers(len(grammar.verbs)))
        s = grammar.instance(style, adj_i, noun_i, verb_i, adv_i)
        ref = grammar.instance(1 - style, adj_i, noun_i, verb_i, adv_i)
        items.append((s, ref))
    order = rng.permutation(count)
    return [items[i] for i in order]
