"""Sentences, dependency adjacency matrices, constituency trees, and file readers.

Tokenization is lowercase whitespace splitting everywhere; data files are
expected to carry punctuation as separate tokens.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ShapeError

ROOT = -1  # head index marking the dependency root


def tokenize(text: str) -> tuple[str, ...]:
    return tuple(text.lower().split())


def validate_heads(heads, n: int | None = None) -> tuple[int, ...]:
    """Check a head-index list is a single-rooted acyclic dependency tree."""
    heads = tuple(int(h) for h in heads)
    if n is not None and len(heads) != n:
        raise DataError(f"expected {n} head entries, got {len(heads)}")
    n = len(heads)
    roots = [i for i, h in enumerate(heads) if h == ROOT]
    if len(roots) != 1:
        raise DataError(f"dependency tree must have exactly one root, found {len(roots)}")
    for i, h in enumerate(heads):
        if h == ROOT:
            continue
        if not 0 <= h < n:
            raise DataError(f"head index {h} of token {i} out of range [0, {n})")
        if h == i:
            raise DataError(f"token {i} is its own head")
    for i in range(n):
        seen = set()
        j = i
        while heads[j] != ROOT:
            if j in seen:
                raise DataError(f"dependency cycle through token {i}")
            seen.add(j)
            j = heads[j]
    return heads


@dataclass(frozen=True)
class ConstituencyTree:
    """Ordered labeled tree; leaves carry tokens, internal nodes carry categories."""

    label: str
    children: tuple["ConstituencyTree", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.label]
        out: list[str] = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def serialize(self) -> str:
        if self.is_leaf:
            return self.label
        return "(" + " ".join([self.label] + [c.serialize() for c in self.children]) + ")"


def parse_ptb_tree(text: str) -> ConstituencyTree:
    """Parse one bracketed tree, e.g. "(S (NP a) (VP b))"."""
    toks: list[str] = []
    for piece in text.replace("(", " ( ").replace(")", " ) ").split():
        toks.append(piece)
    pos = 0

    def parse_node() -> ConstituencyTree:
        nonlocal pos
        if pos >= len(toks):
            raise DataError("unbalanced parentheses: unexpected end of input")
        if toks[pos] == "(":
            pos += 1
            if pos >= len(toks) or toks[pos] in "()":
                raise DataError("empty node: '(' must be followed by a label")
            label = toks[pos]
            pos += 1
            children = []
            while pos < len(toks) and toks[pos] != ")":
                children.append(parse_node())
            if pos >= len(toks):
                raise DataError("unbalanced parentheses: missing ')'")
            pos += 1
            if not children:
                raise DataError(f"empty node: category {label!r} has no children")
            return ConstituencyTree(label, tuple(children))
        if toks[pos] == ")":
            raise DataError("unbalanced parentheses: unexpected ')'")
        leaf = ConstituencyTree(toks[pos])
        pos += 1
        return leaf

    if not toks:
        raise DataError("empty tree string")
    tree = parse_node()
    if pos != len(toks):
        raise DataError("unbalanced parentheses: trailing input after tree")
    if tree.is_leaf:
        raise DataError("a tree must have at least one internal node")
    return tree


@dataclass(frozen=True)
class Sentence:
    """Token sequence with a style label and optional parses."""

    tokens: tuple[str, ...]
    style: int
    dep_heads: tuple[int, ...] | None = None
    ctree: ConstituencyTree | None = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if len(self.tokens) < 1:
            raise DataError("a sentence needs at least one token")
        if self.style not in (0, 1):
            raise DataError(f"style must be 0 or 1, got {self.style}")
        if self.dep_heads is not None:
            object.__setattr__(self, "dep_heads", validate_heads(self.dep_heads, len(self.tokens)))
        if self.ctree is not None and self.ctree.leaves() != list(self.tokens):
            raise DataError("constituency tree leaves do not match the token sequence")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class AdjacencyMatrix:
    """n x n binary dependency structure with self-loops on the diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ShapeError(f"adjacency must be square, got shape {e.shape}")
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def self_loops(cls, n: int) -> "AdjacencyMatrix":
        """Identity fallback for sentences without a usable parse."""
        return cls(np.eye(n))


def build_adjacency(dep_heads, orientation: str = "row-dependent") -> AdjacencyMatrix:
    """Dependency edges plus self-loops.

    With the default orientation, rows index dependents and columns index
    heads: entries[i][h] = 1 where h is the head of token i.
    `orientation="row-head"` gives the transpose.
    """
    if orientation not in ("row-dependent", "row-head"):
        raise ValueError(f"unknown adjacency orientation {orientation!r}")
    heads = validate_heads(dep_heads)
    n = len(heads)
    a = np.eye(n)
    for i, h in enumerate(heads):
        if h != ROOT:
            a[i, h] = 1.0
    if orientation == "row-head":
        a = a.T.copy()
    return AdjacencyMatrix(a)


def sentence_adjacency(s: Sentence, orientation: str = "row-dependent") -> AdjacencyMatrix:
    """Adjacency from the sentence's parse, or self-loops only when absent."""
    if s.dep_heads is None:
        return AdjacencyMatrix.self_loops(len(s))
    return build_adjacency(s.dep_heads, orientation)


def permute_tokens(s: Sentence, seed: int) -> Sentence:
    """Uniform non-identity shuffle of the tokens; parses are dropped."""
    n = len(s.tokens)
    if n < 2:
        raise DataError("cannot permute a single-token sentence")
    rng = np.random.default_rng(seed)
    while True:
        perm = rng.permutation(n)
        if not np.array_equal(perm, np.arange(n)):
            break
    return Sentence(tuple(s.tokens[i] for i in perm), s.style)


# ---------------------------------------------------------------------------
# CoNLL-U


def parse_conllu(text: str) -> list[Sentence]:
    """Read CoNLL-U content: FORM and HEAD columns become tokens and heads.

    Multiword-token ranges and empty nodes are skipped; heads are converted
    from 1-based (0 = root) to 0-based with -1 marking the root.
    """
    sentences: list[Sentence] = []
    tokens: list[str] = []
    heads: list[int] = []
    start_line = 1

    def flush(line_no: int) -> None:
        nonlocal tokens, heads
        if tokens:
            try:
                sentences.append(Sentence(tuple(tokens), 0, tuple(heads)))
            except DataError as e:
                raise DataError(f"sentence ending at line {line_no}: {e}") from None
            tokens, heads = [], []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush(line_no)
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise DataError(f"line {line_no}: expected 10 tab-separated columns, got {len(cols)}")
        token_id = cols[0]
        if "-" in token_id or "." in token_id:
            continue
        try:
            head = int(cols[6])
        except ValueError:
            raise DataError(f"line {line_no}: HEAD column is not an integer: {cols[6]!r}") from None
        tokens.append(cols[1].lower())
        heads.append(head - 1 if head > 0 else ROOT)
    flush(line_no if text.strip() else 0)
    return sentences


# ---------------------------------------------------------------------------
# corpus JSONL


def sentence_to_record(s: Sentence) -> dict:
    rec: dict = {"text": s.text, "style": s.style}
    if s.dep_heads is not None:
        rec["dep_heads"] = list(s.dep_heads)
    if s.ctree is not None:
        rec["ctree"] = s.ctree.serialize()
    return rec


def sentence_from_record(rec: dict) -> Sentence:
    tokens = tokenize(rec["text"])
    heads = tuple(rec["dep_heads"]) if "dep_heads" in rec and rec["dep_heads"] is not None else None
    ctree = parse_ptb_tree(rec["ctree"]) if rec.get("ctree") else None
    return Sentence(tokens, int(rec["style"]), heads, ctree)


def read_corpus(path) -> list[Sentence]:
    out = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(sentence_from_record(json.loads(line)))
        except (json.JSONDecodeError, KeyError, DataError, TypeError, ValueError) as e:
            raise DataError(f"{path}:{line_no}: {e}") from None
    return out


def corpus_jsonl(sentences) -> str:
    return "".join(json.dumps(sentence_to_record(s), sort_keys=True) + "\n" for s in sentences)


def read_references(path) -> list[list[tuple[str, ...]]]:
    """Reference JSONL: one {"refs": [str, ...]} object per corpus line."""
    out = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            refs = json.loads(line)["refs"]
            parsed = [tokenize(r) for r in refs]
        except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as e:
            raise DataError(f"{path}:{line_no}: {e}") from None
        if not parsed:
            raise DataError(f"{path}:{line_no}: empty reference set")
        out.append(parsed)
    return out


def read_trees(path) -> list[ConstituencyTree]:
    """Bracketed trees, one per line, aligned with a corpus by line number."""
    out = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(parse_ptb_tree(line))
        except DataError as e:
            raise DataError(f"{path}:{line_no}: {e}") from None
    return out
