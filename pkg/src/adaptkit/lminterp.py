"""Linear interpolation of n-gram models.

A mixture is a tree of depth <= 2: leaves are :class:`NGramModel` objects,
internal nodes carry simplex weights. Every leaf predicts over its own
vocabulary; a word known to the mixture but not to a leaf gets
probability 0 from that leaf, and a word unknown to every leaf is scored
as ``<unk>`` everywhere. This keeps the mixture a proper distribution
over the union vocabulary, which is what :func:`bake_arpa` relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError, FormatError, NumericalError
from .ngramlm import BOS, EOS, LOG_ZERO, UNK, NGramModel, Perplexity

WEIGHT_SUM_TOL = 1e-9
ROOT = "<root>"


@dataclass
class Leaf:
    model: NGramModel
    name: str = ""


@dataclass
class Node:
    children: list
    weights: list[float]
    name: str = ""

    def __post_init__(self):
        if len(self.children) != len(self.weights) or not self.children:
            raise ArgumentError("a mixture node needs one weight per child")
        w = [float(x) for x in self.weights]
        if min(w) < 0 or abs(sum(w) - 1.0) > WEIGHT_SUM_TOL:
            raise ArgumentError(f"weights must lie on the simplex, got {w}")
        self.weights = w


class MixtureLM:
    """Read-only view over a mixture tree with an ``NGramModel``-like API."""

    def __init__(self, root):
        if isinstance(root, Leaf):
            root = Node([root], [1.0])
        self.root = root
        self.leaves = list(_iter_leaves(root))
        self.order = max(l.model.order for l in self.leaves)
        self.vocab = frozenset().union(*(l.model.vocab for l in self.leaves)) | {UNK}
        if self.depth > 2:
            raise ArgumentError("mixtures deeper than two levels are not supported")

    @property
    def depth(self) -> int:
        return _depth(self.root)

    def map_word(self, w: str) -> str:
        return w if w in self.vocab else UNK

    def leaf_probs(self, context: Sequence[str], word: str) -> np.ndarray:
        word = self.map_word(word)
        out = np.empty(len(self.leaves))
        for i, leaf in enumerate(self.leaves):
            m = leaf.model
            out[i] = 10.0 ** m.logprob(context, word) if word in m.vocab else 0.0
        return out

    def prob(self, context, word) -> float:
        return _node_prob(self.root, self.map_word(word), context)

    def logprob(self, context, word) -> float:
        p = self.prob(context, word)
        return math.log10(p) if p > 0 else -math.inf

    def predictable(self) -> list[str]:
        return sorted(w for w in self.vocab if w != BOS)


def _iter_leaves(node):
    if isinstance(node, Leaf):
        yield node
    else:
        for c in node.children:
            yield from _iter_leaves(c)


def _depth(node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(c) for c in node.children)


def _node_prob(node, word, context) -> float:
    if isinstance(node, Leaf):
        m = node.model
        return 10.0 ** m.logprob(context, word) if word in m.vocab else 0.0
    return sum(w * _node_prob(c, word, context) for c, w in zip(node.children, node.weights) if w > 0)


def mixture_logprob(m: MixtureLM, context: Sequence[str], word: str) -> float:
    return m.logprob(context, word)


@dataclass
class EMTrace:
    loglik: list[float] = field(default_factory=list)  # log10, after each iteration
    iterations: int = 0
    converged: bool = False


def _heldout_events(corpus):
    for sent in corpus:
        hist = [BOS]
        for w in (*sent, EOS):
            yield tuple(hist), w
            hist.append(w)


def prob_matrix(components, heldout, vocab=None) -> np.ndarray:
    """Token-by-component probability matrix for a held-out corpus.

    ``components`` may be NGramModels or mixture nodes; a token outside
    every component's vocabulary is scored as ``<unk>``.
    """
    comps = list(components)
    if vocab is None:
        vocab = frozenset().union(*(_vocab_of(c) for c in comps)) | {UNK}
    rows = []
    for ctx, w in _heldout_events(heldout):
        w = w if w in vocab else UNK
        rows.append([_comp_prob(c, ctx, w) for c in comps])
    if not rows:
        raise ArgumentError("held-out corpus has no scorable tokens")
    return np.asarray(rows, dtype=np.float64)


def _vocab_of(c):
    if isinstance(c, NGramModel):
        return c.vocab
    return frozenset().union(*(l.model.vocab for l in _iter_leaves(c)))


def _comp_prob(c, ctx, w):
    if isinstance(c, NGramModel):
        return 10.0 ** c.logprob(ctx, w) if w in c.vocab else 0.0
    return _node_prob(c, w, ctx)


def em_weights(P: np.ndarray, max_iter=100, tol=1e-6, init=None):
    """Mixture-weight EM on a fixed probability matrix ``P`` (tokens x comps).

    ``tol`` is the minimum gain in mean log10 likelihood per token; the
    loop also stops after ``max_iter`` iterations.
    """
    T, n = P.shape
    w = np.full(n, 1.0 / n) if init is None else np.asarray(init, dtype=np.float64)
    mix = P @ w
    if np.any(mix <= 0):
        bad = int(np.argmax(mix <= 0))
        raise NumericalError(f"held-out token {bad} has zero probability under every component")
    trace = EMTrace()
    ll = float(np.sum(np.log10(mix)))
    for it in range(1, max_iter + 1):
        post = (P * w) / mix[:, None]
        w = post.mean(axis=0)
        w /= w.sum()
        mix = P @ w
        new_ll = float(np.sum(np.log10(mix)))
        trace.loglik.append(new_ll)
        trace.iterations = it
        if new_ll < ll - 1e-12 * max(1.0, abs(ll)):
            raise NumericalError(f"EM likelihood decreased at iteration {it}: {ll} -> {new_ll}")
        gain = (new_ll - ll) / T
        ll = new_ll
        if gain < tol:
            trace.converged = True
            break
    return w, trace


def fit_weights_em(components: Sequence, heldout, max_iter=100, tol=1e-6):
    if not components:
        raise ArgumentError("need at least one component")
    heldout = [tuple(s) for s in heldout]
    if not heldout:
        raise ArgumentError("empty held-out corpus")
    P = prob_matrix(components, heldout)
    w, trace = em_weights(P, max_iter, tol)
    return [float(x) for x in w], trace


def fit_hierarchical(groups, heldout, max_iter=100, tol=1e-6) -> MixtureLM:
    """Two-stage fit: weights within each group, then across frozen groups.

    ``groups`` is a list of ``(name, [NGramModel or (name, NGramModel)])``.
    Both stages use the same held-out corpus.
    """
    if not groups:
        raise ArgumentError("need at least one group")
    heldout = [tuple(s) for s in heldout]
    if not heldout:
        raise ArgumentError("empty held-out corpus")
    all_vocab = frozenset({UNK})
    for _, members in groups:
        if not members:
            raise ArgumentError("empty group")
        for m in members:
            all_vocab |= _as_leaf(m).model.vocab
    nodes = []
    for name, members in groups:
        leaves = [_as_leaf(m) for m in members]
        # a group is fitted as a standalone LM over its own vocabulary
        P = prob_matrix([l.model for l in leaves], heldout)
        w, _ = em_weights(P, max_iter, tol)
        nodes.append(Node(leaves, list(w), name))
    P = prob_matrix(nodes, heldout, all_vocab)
    w, _ = em_weights(P, max_iter, tol)
    return MixtureLM(Node(nodes, list(w), ROOT))


def _as_leaf(m):
    if isinstance(m, Leaf):
        return m
    if isinstance(m, tuple):
        return Leaf(m[1], m[0])
    return Leaf(m)


def flat_mixture(models, weights, names=None) -> MixtureLM:
    names = names or [""] * len(models)
    return MixtureLM(Node([Leaf(m, n) for m, n in zip(models, names)], list(weights)))


def flatten(m: MixtureLM) -> MixtureLM:
    """Collapse a two-level tree into one level with product weights."""
    root = m.root
    if all(isinstance(c, Leaf) for c in root.children):
        return m
    leaves, weights = [], []
    for child, wg in zip(root.children, root.weights):
        if isinstance(child, Leaf):
            leaves.append(child)
            weights.append(wg)
            continue
        for leaf, v in zip(child.children, child.weights):
            leaves.append(leaf)
            weights.append(wg * v)
    s = sum(weights)
    weights = [x / s for x in weights]
    return MixtureLM(Node(leaves, weights, root.name))


def mixture_perplexity(m: MixtureLM, corpus) -> Perplexity:
    P = prob_matrix([m.root], [tuple(s) for s in corpus], m.vocab)[:, 0]
    with np.errstate(divide="ignore"):
        lps = np.log10(P)
    total = float(lps.sum())
    return Perplexity(10.0 ** (-total / len(lps)), len(lps), 0, total)


def bake_arpa(m: MixtureLM, order: int | None = None) -> NGramModel:
    """Statically interpolate a mixture into a single backoff model.

    Every n-gram stored in any leaf (up to ``order``) is stored with its
    exact mixture probability. Backoff weights are then solved per
    context so that each context sums to one over the vocabulary.
    """
    order = order or m.order
    if any(l.model.order > order for l in m.leaves):
        raise ArgumentError("bake order is below a component's order")
    probs: list[dict] = []
    for k in range(1, order + 1):
        grams = set()
        for leaf in m.leaves:
            if k <= leaf.model.order:
                grams.update(leaf.model.probs[k - 1])
        if k == 1:
            grams.add((UNK,))
        level = {}
        for g in sorted(grams):
            if g[-1] == BOS:
                level[g] = LOG_ZERO
                continue
            p = m.prob(g[:-1], g[-1])
            level[g] = math.log10(p) if p > 0 else LOG_ZERO
        probs.append(level)

    backoffs = [dict() for _ in range(order)]
    baked = NGramModel(order, probs, backoffs)
    for k in range(1, order):
        children = {}
        for g, lp in probs[k].items():
            children.setdefault(g[:-1], []).append(g)
        level_bows = {}
        for h, gs in children.items():
            num = 1.0
            den = 1.0
            for g in gs:
                if g[-1] == BOS:
                    continue
                num -= 10.0 ** probs[k][g]
                den -= 10.0 ** baked.logprob(h[1:], g[-1])
            num = max(num, 0.0)
            if den <= 1e-15 or num <= 0.0:
                level_bows[h] = LOG_ZERO if num <= 0.0 else 0.0
            else:
                level_bows[h] = math.log10(num / den)
        backoffs[k - 1].update(sorted(level_bows.items()))
    return NGramModel(order, probs, backoffs)


def write_weights(path_or_file, m: MixtureLM, paths: dict[int, str]) -> None:
    """Write ``group<TAB>model-path<TAB>weight`` lines plus one
    ``group<TAB><root><TAB>weight`` line per group.

    ``paths`` maps ``id(leaf.model)`` to the path it was loaded from.
    """
    root = m.root
    groups = root.children if any(isinstance(c, Node) for c in root.children) else [root]
    gweights = root.weights if groups is root.children else [1.0]
    lines = []
    for gi, (g, gw) in enumerate(zip(groups, gweights)):
        name = g.name if g.name and g.name != ROOT else f"group{gi}"
        if isinstance(g, Leaf):
            g = Node([g], [1.0], name)
        lines.append(f"{name}\t{ROOT}\t{gw!r}")
        for leaf, w in zip(g.children, g.weights):
            lines.append(f"{name}\t{paths[id(leaf.model)]}\t{w!r}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8") as f:
            f.write(text)


def read_weights(path, loader) -> MixtureLM:
    """Rebuild a mixture from a weights file; ``loader(path)`` loads leaves."""
    groups: dict[str, dict] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError("expected group<TAB>model-path<TAB>weight", lineno, path)
            try:
                w = float(parts[2])
            except ValueError:
                raise FormatError(f"bad weight {parts[2]!r}", lineno, path) from None
            g = groups.setdefault(parts[0], {"root": None, "leaves": []})
            if parts[1] == ROOT:
                g["root"] = w
            else:
                g["leaves"].append((parts[1], w))
    if not groups:
        raise FormatError("weights file is empty", None, path)
    cache = {}
    nodes, root_w = [], []
    for name, g in groups.items():
        if g["root"] is None:
            raise FormatError(f"group {name!r} has no {ROOT} line", None, path)
        if not g["leaves"]:
            raise FormatError(f"group {name!r} has no models", None, path)
        leaves = []
        for p, _ in g["leaves"]:
            if p not in cache:
                cache[p] = loader(p)
            leaves.append(Leaf(cache[p], p))
        try:
            nodes.append(Node(leaves, [w for _, w in g["leaves"]], name))
        except ArgumentError as exc:
            raise FormatError(f"group {name!r}: {exc}", None, path) from None
        root_w.append(g["root"])
    try:
        return MixtureLM(Node(nodes, root_w, ROOT))
    except ArgumentError as exc:
        raise FormatError(f"root weights: {exc}", None, path) from None


def read_group_manifest(path) -> list[tuple[str, list[str]]]:
    groups: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError("expected group<TAB>model-path", lineno, path)
            groups.setdefault(parts[0], []).append(parts[1])
    if not groups:
        raise FormatError("group manifest is empty", None, path)
    return list(groups.items())
