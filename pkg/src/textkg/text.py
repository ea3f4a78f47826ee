"""Tokenization and vocabulary management for entity descriptions."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, GraphParseError

PAD, UNK, CLS, SEP = 0, 1, 2, 3
RESERVED = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)

# Words the convolutional encoder drops; the other encoders keep raw input.
STOP_WORDS = frozenset(
    """a about above after again all also an and any are as at be because been
    before being below between both but by did do does down during each few for
    from further had has have having he her here him his how i if in into is it
    its just me more most my no nor not of off on once only or other our out
    over own s same she so some such t than that the their them then there
    these they this those through to too under until up very was we were what
    when where which while who why will with you your""".split()
)


def split_words(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation; keeps digits."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    """Dense token -> index map with fixed reserved slots at the front."""

    tokens: tuple[str, ...]
    index: dict = field(repr=False, compare=False, default=None)
    stop_ids: frozenset = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if tuple(self.tokens[: len(RESERVED)]) != RESERVED:
            raise ContractError("vocabulary must start with the reserved tokens")
        idx = {}
        for i, tok in enumerate(self.tokens):
            if tok in idx:
                raise ContractError(f"duplicate vocabulary token {tok!r}")
            idx[tok] = i
        object.__setattr__(self, "index", idx)
        object.__setattr__(
            self,
            "stop_ids",
            frozenset(idx[t] for t in STOP_WORDS if t in idx),
        )

    def __len__(self):
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self.index.get(token, UNK)

    @property
    def n_content(self) -> int:
        return len(self.tokens) - len(RESERVED)


def build_vocabulary(texts, min_count: int = 1, max_size: int | None = None) -> Vocabulary:
    """Vocabulary from a corpus: most frequent first, ties by first appearance."""
    counts = Counter()
    first_seen = {}
    for text in texts:
        for tok in split_words(text):
            counts[tok] += 1
            first_seen.setdefault(tok, len(first_seen))
    kept = [t for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda t: (-counts[t], first_seen[t]))
    if max_size is not None:
        kept = kept[:max_size]
    return Vocabulary(RESERVED + tuple(kept))


def load_vocabulary(path) -> Vocabulary:
    """One token per line; indices follow the reserved block in line order."""
    toks = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.rstrip("\n")
            if not tok:
                continue
            if "\t" in tok or " " in tok:
                raise GraphParseError(f"{path}:{lineno}: token contains whitespace")
            toks.append(tok)
    return Vocabulary(RESERVED + tuple(toks))


def save_vocabulary(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tok in vocab.tokens[len(RESERVED):]:
            fh.write(tok + "\n")


@dataclass(frozen=True)
class TokenSeq:
    """Padded index sequence: [CLS] content... [SEP] [PAD]...; mask marks non-PAD."""

    ids: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if self.ids.shape != self.mask.shape:
            raise ContractError("token ids and mask must have equal length")

    @property
    def n_content(self) -> int:
        # positions minus CLS and SEP
        return int(self.mask.sum()) - 2

    def content_ids(self) -> np.ndarray:
        return self.ids[1 : 1 + self.n_content]


def tokenize(text: str, vocab: Vocabulary, max_len: int) -> TokenSeq:
    """Map text to a fixed-length TokenSeq of ``max_len`` positions.

    Content is truncated to ``max_len - 2`` tokens to leave room for the
    CLS/SEP wrappers; unknown words map to UNK and the tail is PAD.
    """
    if max_len < 3:
        raise ContractError("max_len must be at least 3 (CLS + token + SEP)")
    words = split_words(text)[: max_len - 2]
    ids = np.full(max_len, PAD, dtype=np.int64)
    ids[0] = CLS
    for i, w in enumerate(words):
        ids[1 + i] = vocab.id_of(w)
    ids[1 + len(words)] = SEP
    mask = np.zeros(max_len, dtype=np.int64)
    mask[: len(words) + 2] = 1
    return TokenSeq(ids=ids, mask=mask)


def load_word_vectors(path) -> dict[str, np.ndarray]:
    """Whitespace-separated ``token f1 ... fn`` lines -> {token: vector}."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise GraphParseError(f"{path}:{lineno}: expected token and values")
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise GraphParseError(
                    f"{path}:{lineno}: vector length {vec.size} != {dim}"
                )
            vectors[parts[0]] = vec
    return vectors
