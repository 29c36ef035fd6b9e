"""Character n-gram language models trained from weighted word lists.

Models use the board's symbol set as their alphabet: single lowercase
letters plus the two markers ``BOS`` and ``EOS``. ``BOS`` only ever pads
contexts and is never emitted.
"""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

BOS = "BOS"
EOS = "EOS"
LETTERS = tuple(string.ascii_lowercase)
DEFAULT_ALPHABET = (BOS,) + LETTERS + (EOS,)


@dataclass(frozen=True)
class Vocabulary:
    """Weighted list of words. Weights live in [0, 1]."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        for word, weight in self.entries:
            if not word:
                raise ValueError("vocabulary contains an empty word")
            if not all(ch in LETTERS for ch in word):
                raise ValueError(f"word {word!r} has characters outside a-z")
            if not (math.isfinite(weight) and 0.0 <= weight <= 1.0):
                raise ValueError(f"weight for {word!r} must be in [0, 1], got {weight}")

    @property
    def words(self) -> list[str]:
        return [w for w, _ in self.entries]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.entries], dtype=float)

    @cached_property
    def _lookup(self) -> dict[str, float]:
        return dict(self.entries)

    def weight_of(self, word: str) -> float:
        return self._lookup[word]

    def __contains__(self, word) -> bool:
        return word in self._lookup

    def __len__(self) -> int:
        return len(self.entries)


def load_vocabulary(path) -> Vocabulary:
    """Read a ``word<TAB>weight`` file; ``#`` lines and blank lines are skipped."""
    entries = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'word<TAB>weight'")
        word = parts[0].strip().lower()
        if any(ch.isspace() for ch in word):
            raise ValueError(f"{path}:{lineno}: multiword name {word!r} is not allowed")
        entries.append((word, float(parts[1])))
    return Vocabulary(tuple(entries))


def default_vocabulary() -> Vocabulary:
    """The bundled list of 100 flower names with colorfulness weights."""
    return load_vocabulary(Path(__file__).parent / "data" / "flowers.tsv")


def tokenize(word: str, alphabet: Sequence[str] = DEFAULT_ALPHABET) -> list[str]:
    known = set(alphabet) - {BOS, EOS}
    for ch in word:
        if ch not in known:
            raise ValueError(f"word {word!r} contains unknown character {ch!r}")
    return list(word)


class NgramModel:
    """Order-``n`` character model with add-alpha smoothing.

    ``counts`` maps a context (tuple of ``order - 1`` symbols) to a vector of
    weighted counts aligned with ``alphabet``. Instances are treated as
    immutable once built.
    """

    def __init__(self, order: int, alphabet: Sequence[str], counts: dict, alpha: float = 1e-3):
        if order < 1:
            raise ValueError("order must be >= 1")
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        alphabet = tuple(alphabet)
        if alphabet.count(BOS) != 1 or alphabet.count(EOS) != 1:
            raise ValueError("alphabet needs exactly one BOS and one EOS")
        self.order = order
        self.alphabet = alphabet
        self.alpha = float(alpha)
        self.counts = {tuple(k): np.asarray(v, dtype=float) for k, v in counts.items()}
        self._index = {s: i for i, s in enumerate(alphabet)}
        self._emit = np.array([s != BOS for s in alphabet])
        self._cache: dict[tuple, np.ndarray] = {}

    def index(self, symbol: str) -> int:
        return self._index[symbol]

    def context_key(self, context: Sequence[str]) -> tuple[str, ...]:
        for s in context:
            if s not in self._index:
                raise ValueError(f"unknown symbol {s!r} in context")
        n = self.order - 1
        if n == 0:
            return ()
        tail = tuple(context)[-n:]
        return (BOS,) * (n - len(tail)) + tail

    def next_char_dist(self, context: Sequence[str]) -> np.ndarray:
        key = self.context_key(context)
        cached = self._cache.get(key)
        if cached is not None:
            return cached.copy()
        counts = self.counts.get(key)
        n_emit = int(self._emit.sum())
        probs = np.zeros(len(self.alphabet))
        total = 0.0 if counts is None else float(counts[self._emit].sum())
        denom = total + self.alpha * n_emit
        if denom > 0:
            c = np.zeros(len(self.alphabet)) if counts is None else counts
            probs[self._emit] = (c[self._emit] + self.alpha) / denom
        else:
            # unseen context without smoothing
            probs[self._emit] = 1.0 / n_emit
        self._cache[key] = probs
        return probs.copy()

    def to_json(self) -> str:
        table = []
        for key in sorted(self.counts):
            row = self.counts[key]
            table.append([list(key), {self.alphabet[i]: float(row[i]) for i in np.flatnonzero(row)}])
        doc = {"order": self.order, "alphabet": list(self.alphabet), "alpha": self.alpha, "counts": table}
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NgramModel":
        doc = json.loads(text)
        alphabet = tuple(doc["alphabet"])
        index = {s: i for i, s in enumerate(alphabet)}
        counts = {}
        for key, row in doc["counts"]:
            vec = np.zeros(len(alphabet))
            for sym, val in row.items():
                vec[index[sym]] = val
            counts[tuple(key)] = vec
        return cls(doc["order"], alphabet, counts, doc["alpha"])


class FusedCharModel:
    """Normalized weighted geometric mean of several n-gram models."""

    def __init__(self, components: Sequence[NgramModel], exponents: Sequence[float]):
        if len(components) != len(exponents) or not components:
            raise ValueError("need one positive exponent per component")
        exponents = [float(e) for e in exponents]
        if any(e <= 0 for e in exponents) or abs(sum(exponents) - 1.0) > 1e-9:
            raise ValueError("exponents must be positive and sum to 1")
        alphabet = components[0].alphabet
        if any(m.alphabet != alphabet for m in components):
            raise ValueError("fused models must share one alphabet")
        self.components = list(components)
        self.exponents = exponents
        self.alphabet = alphabet
        self._index = components[0]._index

    def index(self, symbol: str) -> int:
        return self._index[symbol]

    def next_char_dist(self, context: Sequence[str]) -> np.ndarray:
        logp = np.zeros(len(self.alphabet))
        with np.errstate(divide="ignore"):
            for model, e in zip(self.components, self.exponents):
                logp += e * np.log(model.next_char_dist(context))
        top = logp.max()
        if not np.isfinite(top):
            raise ValueError(f"components share no support after context {list(context)!r}")
        probs = np.exp(logp - top)
        return probs / probs.sum()


def _count_ngrams(words: Sequence[str], multiplicity: np.ndarray, order: int, alphabet):
    index = {s: i for i, s in enumerate(alphabet)}
    counts: dict[tuple, np.ndarray] = {}
    for word, m in zip(words, multiplicity):
        if m == 0:
            continue
        padded = [BOS] * (order - 1) + tokenize(word, alphabet) + [EOS]
        for t in range(order - 1, len(padded)):
            key = tuple(padded[t - order + 1:t])
            row = counts.get(key)
            if row is None:
                row = counts[key] = np.zeros(len(alphabet))
            row[index[padded[t]]] += m
    return counts


def train_weighted(
    vocab: Vocabulary,
    order: int = 6,
    alpha: float = 1e-3,
    mode: str = "expectation",
    count: int = 100_000,
    seed: int = 0,
    alphabet: Sequence[str] = DEFAULT_ALPHABET,
) -> NgramModel:
    """Train an n-gram model on ``count`` weighted draws from ``vocab``.

    ``mode="sample"`` draws whole words at random in proportion to their
    weight; ``mode="expectation"`` uses the expected multiplicities
    ``count * w / sum(w)`` instead, which is exact and seed-free.
    """
    if len(vocab) == 0:
        raise ValueError("empty vocabulary")
    if order < 1:
        raise ValueError("order must be >= 1")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if count < 1:
        raise ValueError("count must be >= 1")
    for word in vocab.words:
        tokenize(word, alphabet)
    w = vocab.weights
    if w.sum() <= 0:
        raise ValueError("vocabulary weights are all zero")
    w = w / w.sum()
    if mode == "sample":
        rng = np.random.default_rng(seed)
        draws = rng.choice(len(w), size=count, p=w)
        mult = np.bincount(draws, minlength=len(w)).astype(float)
    elif mode == "expectation":
        mult = count * w
    else:
        raise ValueError(f"unknown corpus mode {mode!r}")
    counts = _count_ngrams(vocab.words, mult, order, tuple(alphabet))
    return NgramModel(order, alphabet, counts, alpha)


def next_char_dist(model, context: Sequence[str]) -> np.ndarray:
    return model.next_char_dist(context)


def fuse_char_models(models: Sequence[NgramModel], exponents: Sequence[float]) -> FusedCharModel:
    return FusedCharModel(models, exponents)


def sequence_logprob(model, word: str) -> float:
    """Natural-log probability of ``word`` followed by EOS.

    Returns ``-inf`` when any step has zero probability.
    """
    tokens = tokenize(word, model.alphabet) + [EOS]
    total = 0.0
    for t, sym in enumerate(tokens):
        p = model.next_char_dist(tokens[:t])[model.index(sym)]
        if p <= 0.0:
            return -math.inf
        total += math.log(p)
    return total


def perplexity(model, words: Iterable[str]) -> float:
    """Character-level perplexity over ``words``, counting the EOS step."""
    words = list(words)
    if not words:
        raise ValueError("perplexity needs at least one word")
    total_lp = 0.0
    total_len = 0
    for word in words:
        lp = sequence_logprob(model, word)
        if lp == -math.inf:
            raise ValueError(f"word {word!r} has zero probability under the model")
        total_lp += lp
        total_len += len(word) + 1
    return math.exp(-total_lp / total_len)
