"""Hard word clustering with the exchange algorithm (mkcls criterion).

The objective is the class-bigram log-likelihood of the corpus under the
maximum-likelihood class model::

    sum_{c,d} N(c,d) log N(c,d) - 2 sum_c N(c) log N(c) + sum_w N(w) log N(w)

with bigrams taken inside sentences (no boundary symbols) and ``N(c)``
the summed unigram count of the words in class ``c``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ArgumentError, FormatError, NumericalError
from .ngramlm import UNK

TIE_EPS = 1e-12
MONOTONE_TOL = 1e-7


def _xlogx(x):
    return x * math.log(x) if x > 0 else 0.0


@dataclass
class WordClustering:
    K: int
    assignment: dict[str, int]

    def class_of(self, word: str) -> int:
        c = self.assignment.get(word)
        return self.assignment[UNK] if c is None else c

    def classes(self) -> list[list[str]]:
        out = [[] for _ in range(self.K)]
        for w, c in sorted(self.assignment.items()):
            out[c].append(w)
        return out

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for w in sorted(self.assignment, key=lambda s: s.encode("utf-8")):
                f.write(f"{w}\t{self.assignment[w]}\n")

    @classmethod
    def read(cls, path) -> "WordClustering":
        assignment = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise FormatError("expected word<TAB>classID", lineno, path)
                try:
                    c = int(parts[1])
                except ValueError:
                    raise FormatError(f"bad class id {parts[1]!r}", lineno, path) from None
                if c < 0:
                    raise FormatError("negative class id", lineno, path)
                assignment[parts[0]] = c
        if not assignment:
            raise FormatError("empty classes file", None, path)
        if UNK not in assignment:
            raise FormatError(f"classes file has no {UNK} entry", None, path)
        return cls(max(assignment.values()) + 1, assignment)


@dataclass
class ClusterObjective:
    value: float
    trace: list[float] = field(default_factory=list)  # objective after each accepted move


class _Stats:
    """Word-level sufficient statistics in CSR form for the kernels."""

    def __init__(self, corpus):
        uni = Counter()
        bi = Counter()
        for sent in corpus:
            uni.update(sent)
            bi.update(zip(sent, sent[1:]))
        # frequency rank, ties bytewise
        self.words = sorted(uni, key=lambda w: (-uni[w], w.encode("utf-8")))
        index = {w: i for i, w in enumerate(self.words)}
        V = len(self.words)
        self.index = index
        self.wcount = np.array([uni[w] for w in self.words], dtype=np.float64)
        self.selfcnt = np.zeros(V)
        left = [[] for _ in range(V)]
        right = [[] for _ in range(V)]
        for (u, v), n in sorted(bi.items()):
            iu, iv = index[u], index[v]
            if iu == iv:
                self.selfcnt[iu] += n
            else:
                right[iu].append((iv, n))
                left[iv].append((iu, n))
        self.lptr, self.lidx, self.lcnt = _csr(left)
        self.rptr, self.ridx, self.rcnt = _csr(right)
        self.bigrams = bi
        self.unigrams = uni


def _csr(rows):
    ptr = np.zeros(len(rows) + 1, dtype=np.int_)
    ptr[1:] = np.cumsum([len(r) for r in rows])
    idx = np.array([j for r in rows for j, _ in r], dtype=np.int_)
    cnt = np.array([n for r in rows for _, n in r], dtype=np.float64)
    return ptr, idx, cnt


def _class_counts(stats: _Stats, assign, K):
    N = np.zeros((K, K))
    for (u, v), n in stats.bigrams.items():
        N[assign[stats.index[u]], assign[stats.index[v]]] += n
    Nc = np.zeros(K)
    np.add.at(Nc, assign, stats.wcount)
    return N, Nc


def objective_value(N, Nc, wcount) -> float:
    N = np.asarray(N, dtype=np.float64)
    pos = N[N > 0]
    nc = Nc[Nc > 0]
    wc = wcount[wcount > 0]
    return float(np.sum(pos * np.log(pos)) - 2 * np.sum(nc * np.log(nc)) + np.sum(wc * np.log(wc)))


def clustering_objective(corpus, assignment: dict[str, int]) -> float:
    """Objective of an arbitrary assignment, straight from the definition."""
    uni = Counter()
    cb = Counter()
    for sent in corpus:
        uni.update(sent)
        cb.update((assignment[u], assignment[v]) for u, v in zip(sent, sent[1:]))
    cu = Counter()
    for w, n in uni.items():
        cu[assignment[w]] += n
    return (sum(_xlogx(n) for n in cb.values()) - 2 * sum(_xlogx(n) for n in cu.values())
            + sum(_xlogx(n) for n in uni.values()))


def induce_classes(corpus, K: int, iters: int = 10, seed: int = 0, backend=None):
    """Exchange-algorithm clustering into ``K`` classes.

    Words start in frequency-ranked round-robin order; each sweep visits
    the vocabulary in an order permuted by ``seed`` (seed 0 keeps the
    frequency order for the first sweep too). Returns the clustering and
    its objective, including the objective after every accepted move.
    """
    if K < 1:
        raise ArgumentError(f"K must be >= 1, got {K}")
    corpus = [tuple(s) for s in corpus]
    if not any(corpus):
        raise ArgumentError("cannot cluster an empty corpus")
    impl = kernels.get_backend(backend)
    stats = _Stats(corpus)
    V = len(stats.words)
    assign = np.arange(V, dtype=np.int_) % K
    N, Nc = _class_counts(stats, assign, K)
    value = objective_value(N, Nc, stats.wcount)
    trace = [value]
    rng = np.random.default_rng(seed)
    allow_empty = K > V
    for sweep in range(iters):
        if seed == 0 and sweep == 0:
            order = np.arange(V, dtype=np.int_)
        else:
            order = rng.permutation(V).astype(np.int_)
        deltas = impl.exchange_sweep(order, assign, N, Nc, stats.wcount,
                                     stats.lptr, stats.lidx, stats.lcnt,
                                     stats.rptr, stats.ridx, stats.rcnt,
                                     stats.selfcnt, allow_empty, TIE_EPS)
        for d in deltas:
            if d < -MONOTONE_TOL * max(1.0, abs(value)):
                raise NumericalError(f"exchange move decreased the objective by {-d}")
            value += d
            trace.append(value)
        if not deltas:
            break
    # recompute from scratch to shed accumulated rounding
    N, Nc = _class_counts(stats, assign, K)
    value = objective_value(N, Nc, stats.wcount)

    assignment = {w: int(assign[i]) for i, w in enumerate(stats.words)}
    if UNK not in assignment:
        assignment[UNK] = V % K
    return WordClustering(K, assignment), ClusterObjective(value, trace)


def map_corpus(corpus, clustering: WordClustering):
    return [tuple(f"C{clustering.class_of(w)}" for w in sent) for sent in corpus]
