"""Backoff n-gram language models with interpolated modified Kneser-Ney.

Probabilities are stored as log10 values, ARPA style. Sentences are padded
with a single ``<s>`` and a trailing ``</s>``; an n-gram window never
extends past either boundary, so histories at the sentence start are
simply shorter (the usual SRILM/KenLM convention).
"""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ArgumentError, NumericalError

log = logging.getLogger(__name__)

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
LOG_ZERO = -99.0  # ARPA convention for p(<s>)
FALLBACK_DISCOUNT = 0.75

Ngram = tuple


def _pad(sentence: Sequence[str]) -> tuple[str, ...]:
    return (BOS, *sentence, EOS)


@dataclass
class CountTable:
    """Raw n-gram counts for orders ``1..order``.

    ``counts[k - 1]`` maps k-tuples to integer counts.
    """

    order: int
    counts: list[dict[tuple, int]]

    def __getitem__(self, k: int) -> dict[tuple, int]:
        return self.counts[k - 1]

    def sorted_items(self, k: int):
        return sorted(self.counts[k - 1].items())


def _count_chunk(sentences, order):
    tables = [Counter() for _ in range(order)]
    for sent in sentences:
        padded = _pad(sent)
        n = len(padded)
        for k in range(1, order + 1):
            table = tables[k - 1]
            for i in range(n - k + 1):
                table[padded[i:i + k]] += 1
    return tables


def count_ngrams(corpus: Iterable[Sequence[str]], order: int, threads: int = 1) -> CountTable:
    if order < 1:
        raise ArgumentError(f"order must be >= 1, got {order}")
    sentences = [tuple(s) for s in corpus]
    if not sentences:
        raise ArgumentError("cannot count an empty corpus")
    if threads <= 1 or len(sentences) < 2 * threads:
        tables = _count_chunk(sentences, order)
    else:
        step = -(-len(sentences) // threads)
        chunks = [sentences[i:i + step] for i in range(0, len(sentences), step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _count_chunk(c, order), chunks))
        tables = [Counter() for _ in range(order)]
        for part in parts:  # fixed chunk order keeps the merge deterministic
            for k in range(order):
                tables[k].update(part[k])
    # key-sorted dicts: identical layout regardless of chunking
    return CountTable(order, [dict(sorted(t.items())) for t in tables])


@dataclass
class NGramModel:
    """Backoff model: ``probs[k-1][ngram]`` and ``backoffs[k-1][ngram]`` in log10."""

    order: int
    probs: list[dict[tuple, float]]
    backoffs: list[dict[tuple, float]]
    warnings: list[str] = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.vocab = frozenset(w for (w,) in self.probs[0])

    @classmethod
    def uniform(cls, words: Iterable[str]) -> "NGramModel":
        words = list(words)
        lp = -math.log10(len(words))
        return cls(1, [{(w,): lp for w in words}], [{}])

    @property
    def counts(self) -> list[int]:
        return [len(p) for p in self.probs]

    def predictable(self) -> list[str]:
        """Words the model can emit: the vocabulary minus ``<s>``."""
        return sorted(w for w in self.vocab if w != BOS)

    def map_word(self, w: str) -> str:
        return w if w in self.vocab or UNK not in self.vocab else UNK

    def logprob(self, context: Sequence[str], word: str) -> float:
        """log10 p(word | context) by the standard backoff recursion."""
        word = self.map_word(word)
        n = self.order - 1
        ctx = tuple(self.map_word(w) for w in context[len(context) - n:]) if n else ()
        bow = 0.0
        for start in range(len(ctx) + 1):
            h = ctx[start:]
            p = self.probs[len(h)].get(h + (word,))
            if p is not None:
                return bow + p
            if h:
                bow += self.backoffs[len(h) - 1].get(h, 0.0)
        return -math.inf

    def prob(self, context: Sequence[str], word: str) -> float:
        return 10.0 ** self.logprob(context, word)

    def sentence_logprobs(self, sentence: Sequence[str]):
        """Yield (word, log10 p) for every scored position incl. ``</s>``."""
        hist = [BOS]
        for w in (*sentence, EOS):
            yield w, self.logprob(hist, w)
            hist.append(w)


def _discounts(adjusted: dict[tuple, int], k: int, warnings: list[str], fixed=None):
    if fixed is not None:
        return (0.0, fixed, fixed, fixed)
    coc = Counter(c for c in adjusted.values() if 1 <= c <= 4)
    n1, n2, n3, n4 = (coc[i] for i in (1, 2, 3, 4))
    has3 = any(c >= 3 for c in adjusted.values())
    if n1 and n2 and (n3 or not has3):
        y = n1 / (n1 + 2 * n2)
        d1 = 1 - 2 * y * n2 / n1
        d2 = 2 - 3 * y * n3 / n2
        d3 = 3 - 4 * y * n4 / n3 if n3 else 3.0
        if d1 > 0 and d2 > 0 and d3 > 0:
            return (0.0, d1, d2, d3)
    msg = (f"order {k}: count-of-counts n1={n1} n2={n2} n3={n3} n4={n4} cannot "
           f"support modified KN discounts; using D={FALLBACK_DISCOUNT}")
    log.warning(msg)
    warnings.append(msg)
    d = FALLBACK_DISCOUNT
    return (0.0, d, d, d)


def adjusted_counts(counts: CountTable) -> list[dict[tuple, int]]:
    """KN counts: raw at the top order and for ``<s>``-initial n-grams,
    distinct left-extension counts otherwise."""
    order = counts.order
    adj = [None] * order
    adj[order - 1] = dict(counts[order])
    for k in range(order - 1, 0, -1):
        left = Counter(g[1:] for g in counts[k + 1])
        adj[k - 1] = {g: (c if g[0] == BOS else left[g]) for g, c in counts[k].items()}
    return adj


def estimate_kn(counts: CountTable, fixed_discount: float | None = None) -> NGramModel:
    """Interpolated modified Kneser-Ney (Chen & Goodman) with ``<unk>``.

    The unigram level interpolates with a uniform distribution over the
    vocabulary plus ``<unk>`` (excluding ``<s>``), so ``<unk>`` receives
    exactly that share of the unigram interpolation mass.
    ``fixed_discount`` replaces the three count-of-count discounts at
    every order with one constant (plain interpolated KN).
    """
    if fixed_discount is not None and not 0 < fixed_discount < 1:
        raise ArgumentError("fixed discount must lie in (0, 1)")
    order = counts.order
    warnings: list[str] = []
    adj = adjusted_counts(counts)
    adj[0].pop((BOS,), None)

    vocab = {g[0] for g in adj[0]}
    vocab.add(UNK)
    uniform = 1.0 / len(vocab)

    probs: list[dict[tuple, float]] = []
    gammas: list[dict[tuple, float]] = []
    for k in range(1, order + 1):
        table = adj[k - 1]
        disc = _discounts(table, k, warnings, fixed_discount)
        totals = defaultdict(int)
        mass = defaultdict(float)
        for g, c in table.items():
            h = g[:-1]
            totals[h] += c
            mass[h] += disc[min(c, 3)]
        gamma = {h: mass[h] / totals[h] for h in totals}
        lower = probs[-1] if probs else None
        level = {}
        for g, c in table.items():
            h = g[:-1]
            p_low = uniform if lower is None else lower[g[1:]]
            level[g] = max(c - disc[min(c, 3)], 0.0) / totals[h] + gamma[h] * p_low
        if k == 1:
            level.setdefault((UNK,), gamma[()] * uniform)
        probs.append(level)
        gammas.append(gamma)

    log_probs = []
    log_bows = []
    for k in range(1, order + 1):
        lp = {}
        for g, p in probs[k - 1].items():
            if p <= 0.0:
                raise NumericalError(f"non-positive probability for {' '.join(g)}")
            lp[g] = math.log10(p)
        if k == 1 and BOS in {g[0] for g in counts[1]}:
            lp[(BOS,)] = LOG_ZERO
        log_probs.append(dict(sorted(lp.items())))
        bows = {}
        if k < order:
            for h, gm in gammas[k].items():
                bows[h] = math.log10(gm) if gm > 0 else LOG_ZERO
        log_bows.append(dict(sorted(bows.items())))
    return NGramModel(order, log_probs, log_bows, warnings)


def train(corpus: Iterable[Sequence[str]], order: int, threads: int = 1) -> NGramModel:
    return estimate_kn(count_ngrams(corpus, order, threads))


@dataclass(frozen=True)
class Perplexity:
    value: float
    tokens_scored: int
    oov_count: int
    logprob: float

    def as_record(self) -> dict:
        return {"ppl": float(f"{self.value:.6g}"), "logprob": float(f"{self.logprob:.6g}"),
                "tokens": self.tokens_scored, "oovs": self.oov_count}


def perplexity_from_logprobs(logprobs: Iterable[float], oov_count=0) -> Perplexity:
    total = 0.0
    n = 0
    for lp in logprobs:
        total += lp
        n += 1
    if n == 0:
        raise ArgumentError("no scorable tokens")
    return Perplexity(10.0 ** (-total / n), n, oov_count, total)


def perplexity(model, corpus: Iterable[Sequence[str]], oov_policy: str = "skip") -> Perplexity:
    """Per-token perplexity; ``</s>`` is scored and ``<s>`` only conditioned on.

    ``model`` is anything with ``logprob(context, word)`` and a ``vocab``.
    With ``oov_policy="skip"`` out-of-vocabulary tokens are counted but not
    scored; ``"score_as_unk"`` scores them as ``<unk>``.
    """
    if oov_policy not in ("skip", "score_as_unk"):
        raise ArgumentError(f"unknown oov policy {oov_policy!r}")
    vocab = model.vocab
    scores = []
    oovs = 0
    seen_any = False
    for sent in corpus:
        seen_any = True
        hist = [BOS]
        for w in (*sent, EOS):
            if w not in vocab:
                oovs += 1
                if oov_policy == "skip":
                    hist.append(w)
                    continue
            scores.append(model.logprob(hist, w))
            hist.append(w)
    if not seen_any:
        raise ArgumentError("empty evaluation corpus")
    return perplexity_from_logprobs(scores, oovs)


def read_corpus(path) -> list[tuple[str, ...]]:
    with open(path, encoding="utf-8") as f:
        return [tuple(line.split()) for line in f]
