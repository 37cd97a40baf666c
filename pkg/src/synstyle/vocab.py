"""Token vocabulary shared by the classifier and the generator."""
from __future__ import annotations

from dataclasses import dataclass

PAD, UNK, BOS, EOS = "<pad>", "<unk>", "<bos>", "<eos>"
SPECIALS = (PAD, UNK, BOS, EOS)


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if tuple(self.tokens[:4]) != SPECIALS:
            raise ValueError("vocabulary must start with the special tokens")
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.tokens)})

    @classmethod
    def from_corpus(cls, sentences) -> "Vocab":
        words = sorted({w for s in sentences for w in s.tokens})
        return cls(SPECIALS + tuple(words))

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, tokens) -> list[int]:
        idx = self._index
        unk = idx[UNK]
        return [idx.get(w, unk) for w in tokens]

    def decode(self, ids) -> list[str]:
        return [self.tokens[i] for i in ids]

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def unk_id(self) -> int:
        return 1

    @property
    def bos_id(self) -> int:
        return 2

    @property
    def eos_id(self) -> int:
        return 3
