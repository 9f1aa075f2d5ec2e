"""Unsupervised transliteration mining and generation.

A word pair is explained either by the transliteration component, a joint
character model over units ``(s, t)`` where each side is one character or
empty, or by the non-transliteration component, a product of independent
source and target character unigrams. EM fits the unit probabilities and
the prior ``lam`` of the transliteration component; the unigram tables
are estimated once and stay fixed.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ArgumentError, FormatError, NumericalError

EMPTY = ""
EMPTY_MARK = "∅"
TRANSLIT = "transliteration"
NON_TRANSLIT = "non-transliteration"


@dataclass
class TransliterationModel:
    multigram_probs: dict[tuple[str, str], float]
    lam: float
    src_unigrams: dict[str, float]
    tgt_unigrams: dict[str, float]
    loglik_trace: list[float] = field(default_factory=list, compare=False)

    def log_ntr(self, src: str, tgt: str) -> float:
        s = 0.0
        for table, word in ((self.src_unigrams, src), (self.tgt_unigrams, tgt)):
            for ch in word:
                p = table.get(ch, 0.0)
                if p <= 0:
                    return -math.inf
                s += math.log(p)
        return s

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("\\lambda\n")
            f.write(f"{self.lam!r}\n")
            f.write("\\units\n")
            for (s, t), p in sorted(self.multigram_probs.items()):
                f.write(f"{s or EMPTY_MARK}\t{t or EMPTY_MARK}\t{p!r}\n")
            for name, table in (("src_unigrams", self.src_unigrams), ("tgt_unigrams", self.tgt_unigrams)):
                f.write(f"\\{name}\n")
                for ch, p in sorted(table.items()):
                    f.write(f"{ch}\t{p!r}\n")
            f.write("\\end\n")

    @classmethod
    def read(cls, path) -> "TransliterationModel":
        sections = {"lambda": [], "units": [], "src_unigrams": [], "tgt_unigrams": []}
        current = None
        ended = False
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("\\") and line[1:] in sections:
                    current = line[1:]
                    continue
                if line == "\\end":
                    ended = True
                    break
                if current is None:
                    raise FormatError("data before the first section", lineno, path)
                sections[current].append((lineno, line.split("\t")))
        if not ended:
            raise FormatError("missing \\end", None, path)

        def num(tok, lineno):
            try:
                return float(tok)
            except ValueError:
                raise FormatError(f"not a number: {tok!r}", lineno, path) from None

        if len(sections["lambda"]) != 1:
            raise FormatError("\\lambda needs exactly one value", None, path)
        lineno, parts = sections["lambda"][0]
        lam = num(parts[0], lineno)
        units = {}
        for lineno, parts in sections["units"]:
            if len(parts) != 3:
                raise FormatError("expected src<TAB>tgt<TAB>prob", lineno, path)
            s, t = (EMPTY if x == EMPTY_MARK else x for x in parts[:2])
            units[(s, t)] = num(parts[2], lineno)
        tables = []
        for name in ("src_unigrams", "tgt_unigrams"):
            table = {}
            for lineno, parts in sections[name]:
                if len(parts) != 2:
                    raise FormatError("expected char<TAB>prob", lineno, path)
                table[parts[0]] = num(parts[1], lineno)
            tables.append(table)
        return cls(units, lam, tables[0], tables[1])


@dataclass(frozen=True)
class MinedPair:
    src_word: str
    tgt_word: str
    posterior: float
    label: str


def pair_likelihood_tr(model: TransliterationModel, src: str, tgt: str) -> float:
    """Sum over all monotone segmentations into units, by dynamic programming."""
    if not src or not tgt:
        raise ArgumentError("words must be non-empty")
    P = model.multigram_probs
    n, m = len(src), len(tgt)
    A = [[0.0] * (m + 1) for _ in range(n + 1)]
    A[0][0] = 1.0
    for i in range(n + 1):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            a = 0.0
            if i and j:
                a += A[i - 1][j - 1] * P.get((src[i - 1], tgt[j - 1]), 0.0)
            if i:
                a += A[i - 1][j] * P.get((src[i - 1], EMPTY), 0.0)
            if j:
                a += A[i][j - 1] * P.get((EMPTY, tgt[j - 1]), 0.0)
            A[i][j] = a
    return A[n][m]


def _unigrams(words) -> dict[str, float]:
    c = Counter()
    for w in words:
        c.update(w)
    total = sum(c.values())
    return {ch: n / total for ch, n in sorted(c.items())}


class _Lattice:
    __slots__ = ("sub", "dele", "ins", "log_ntr")

    def __init__(self, src, tgt, index, log_ntr):
        self.sub = np.array([[index[(a, b)] for b in tgt] for a in src], dtype=np.intc)
        self.dele = np.array([index[(a, EMPTY)] for a in src], dtype=np.intc)
        self.ins = np.array([index[(EMPTY, b)] for b in tgt], dtype=np.intc)
        self.log_ntr = log_ntr


def lattice_units(src: str, tgt: str):
    for a in src:
        for b in tgt:
            yield (a, b)
        yield (a, EMPTY)
    for b in tgt:
        yield (EMPTY, b)


def init_model(pairs) -> TransliterationModel:
    units = sorted({u for s, t in pairs for u in lattice_units(s, t)})
    p = 1.0 / len(units)
    return TransliterationModel({u: p for u in units}, 0.5,
                                _unigrams(s for s, _ in pairs), _unigrams(t for _, t in pairs))


def mine(pairs, iters: int = 10, threshold: float = 0.5, backend=None):
    """EM transliteration mining over candidate ``(src, tgt)`` pairs.

    Returns the trained model and one :class:`MinedPair` per input pair,
    in input order. The data log-likelihood (natural log) after every
    iteration is kept in ``model.loglik_trace``; EM never lets it drop.
    """
    pairs = [(s, t) for s, t in pairs]
    if len(pairs) < 2:
        raise ArgumentError("need at least two word pairs")
    if iters < 1:
        raise ArgumentError("iters must be >= 1")
    if any(not s or not t for s, t in pairs):
        raise ArgumentError("empty word in input pairs")
    impl = kernels.get_backend(backend)
    model = init_model(pairs)
    units = sorted(model.multigram_probs)
    index = {u: i for i, u in enumerate(units)}
    lattices = [_Lattice(s, t, index, model.log_ntr(s, t)) for s, t in pairs]
    probs = np.array([model.multigram_probs[u] for u in units])
    lam = model.lam
    prev = -math.inf
    trace = []
    for _ in range(iters):
        counts = np.zeros(len(units))
        ll, zs = _estep(impl, lattices, probs, lam, counts)
        if ll < prev - 1e-9 * max(1.0, abs(prev)):
            raise NumericalError(f"EM log-likelihood decreased: {prev} -> {ll}")
        total = counts.sum()
        if total > 0:
            probs = counts / total
        lam = float(np.mean(zs))
        trace.append(ll)
        prev = ll
    # posteriors under the final parameters
    ll, zs = _estep(impl, lattices, probs, lam, np.zeros(len(units)))
    trace.append(ll)
    model = TransliterationModel({u: float(p) for u, p in zip(units, probs)}, lam,
                                 model.src_unigrams, model.tgt_unigrams, trace)
    mined = [MinedPair(s, t, float(z), TRANSLIT if z > threshold else NON_TRANSLIT)
             for (s, t), z in zip(pairs, zs)]
    return model, mined


def _estep(impl, lattices, probs, lam, counts):
    log_lam = math.log(lam) if lam > 0 else -1e300
    log_rest = math.log1p(-lam) if lam < 1 else -1e300
    ll = 0.0
    zs = np.empty(len(lattices))
    for k, lat in enumerate(lattices):
        lt, z = impl.lattice_estep(lat.sub, lat.dele, lat.ins, probs, counts,
                                   log_lam, log_rest, lat.log_ntr)
        ll += _logaddexp(log_lam + lt, log_rest + lat.log_ntr)
        zs[k] = z
    return ll, zs


def _logaddexp(a, b):
    mx = max(a, b)
    if mx == -math.inf:
        return -math.inf
    return mx + math.log(math.exp(a - mx) + math.exp(b - mx))


def posterior(model: TransliterationModel, src: str, tgt: str) -> float:
    ptr = pair_likelihood_tr(model, src, tgt)
    lt = math.log(ptr) if ptr > 0 else -math.inf
    a = math.log(model.lam) + lt if model.lam > 0 and ptr > 0 else -math.inf
    b = math.log1p(-model.lam) + model.log_ntr(src, tgt) if model.lam < 1 else -math.inf
    if a == -math.inf and b == -math.inf:
        return 0.0
    return math.exp(a - _logaddexp(a, b))


def transliterate(model: TransliterationModel, src_word: str, k: int = 5,
                  beam: int = 200, max_insert: int = 1):
    """Top-``k`` target strings for ``src_word`` by summed derivation probability.

    Source characters are consumed left to right. Before each source
    character and at the end, at most ``max_insert`` consecutive
    insertion units may be used. Scores are natural-log probabilities;
    ties are broken by target string. The beam keeps the ``beam`` best
    partial hypotheses after each source position.
    """
    if k < 1:
        raise ArgumentError("k must be >= 1")
    if not src_word:
        raise ArgumentError("empty source word")
    by_src = defaultdict(list)
    inserts = []
    for (s, t), p in sorted(model.multigram_probs.items()):
        if p <= 0:
            continue
        if s == EMPTY:
            inserts.append((t, p))
        else:
            by_src[s].append((t, p))
    if any(ch not in by_src for ch in src_word):
        return []

    def insert_closure(states):
        # states: {target prefix: prob}; adds up to max_insert insertions
        out = defaultdict(float)
        frontier = dict(states)
        for y, p in frontier.items():
            out[y] += p
        for _ in range(max_insert):
            nxt = defaultdict(float)
            for y, p in frontier.items():
                for t, q in inserts:
                    nxt[y + t] += p * q
            for y, p in nxt.items():
                out[y] += p
            frontier = nxt
        return out

    states = {"": 1.0}
    for ch in src_word:
        states = insert_closure(states)
        nxt = defaultdict(float)
        for y, p in states.items():
            for t, q in by_src[ch]:
                nxt[y + t] += p * q
        states = _prune(nxt, beam)
    states = insert_closure(states)
    results = [(y, math.log(p)) for y, p in states.items() if y and p > 0]
    results.sort(key=lambda r: (-r[1], r[0].encode("utf-8")))
    return results[:k]


def _prune(states, beam):
    if len(states) <= beam:
        return states
    best = heapq.nsmallest(beam, states.items(), key=lambda kv: (-kv[1], kv[0].encode("utf-8")))
    return dict(best)


def synthetic_pairs(n_true=200, n_false=200, seed=0, src_alphabet="abcdefghijklmnopqrst",
                    tgt_alphabet="ابتثجحخدذرزسشصضطظعغف", min_len=3, max_len=8):
    """Seeded corpus of mapped (true) and unrelated (false) word pairs.

    True pairs map every source character through one fixed random
    bijection. Returns ``(pairs, labels)`` with labels True for
    transliterations, shuffled together.
    """
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(tgt_alphabet))
    mapping = {a: tgt_alphabet[perm[i]] for i, a in enumerate(src_alphabet)}

    def word(alphabet):
        n = int(rng.integers(min_len, max_len + 1))
        return "".join(alphabet[int(i)] for i in rng.integers(0, len(alphabet), n))

    items = []
    for _ in range(n_true):
        s = word(src_alphabet)
        items.append((s, "".join(mapping[c] for c in s), True))
    for _ in range(n_false):
        items.append((word(src_alphabet), word(tgt_alphabet), False))
    order = rng.permutation(len(items))
    items = [items[i] for i in order]
    return [(s, t) for s, t, _ in items], [lab for _, _, lab in items]


def read_pairs(path):
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise FormatError("expected src<TAB>tgt", lineno, path)
            pairs.append((parts[0], parts[1]))
    return pairs
