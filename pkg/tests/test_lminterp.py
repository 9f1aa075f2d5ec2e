import math
import random

import numpy as np
import pytest

from adaptkit import lminterp as M
from adaptkit import ngramlm as L
from adaptkit.arpa import load_arpa, save_arpa
from adaptkit.errors import ArgumentError, FormatError
from conftest import zipf_corpus


def two_genres(seed, order=2, overlap=0.5):
    """Two toy LMs on partly shared vocabularies plus a held-out set drawn from both."""
    rng = np.random.default_rng(seed)
    a = zipf_corpus(seed, 60, 15, prefix="a")
    b = zipf_corpus(seed + 1, 60, 15, prefix="b")
    shared = zipf_corpus(seed + 2, 30, 10, prefix="s")
    ta = a + shared[: int(30 * overlap)]
    tb = b + shared[int(30 * overlap) // 2:]
    mix = float(rng.uniform(0.2, 0.8))
    held = [s for s in zipf_corpus(seed + 3, 40, 15, prefix="a") if rng.random() < mix]
    held += [s for s in zipf_corpus(seed + 4, 40, 15, prefix="b") if rng.random() > mix]
    held += zipf_corpus(seed + 5, 5, 10, prefix="s")
    return L.train(ta, order), L.train(tb, order), held


def grid_best(P, step=0.001):
    best = (math.inf, None)
    for w in np.arange(0, 1 + step / 2, step):
        mix = w * P[:, 0] + (1 - w) * P[:, 1]
        if np.any(mix <= 0):
            continue
        ppl = 10 ** (-np.mean(np.log10(mix)))
        best = min(best, (ppl, w))
    return best


def golden_best(P, tol=1e-12):
    f = lambda w: -np.mean(np.log10(w * P[:, 0] + (1 - w) * P[:, 1]))
    lo, hi = 0.0, 1.0
    g = (math.sqrt(5) - 1) / 2
    while hi - lo > tol:
        a, b = hi - g * (hi - lo), lo + g * (hi - lo)
        if f(a) < f(b):
            hi = b
        else:
            lo = a
    w = (lo + hi) / 2
    return 10 ** f(w), w


def heldout_ppl(P, w):
    return 10 ** (-np.mean(np.log10(P @ np.asarray(w))))


def assert_monotone(trace):
    ll = trace.loglik
    assert all(b >= a - 1e-12 * max(1.0, abs(a)) for a, b in zip(ll, ll[1:]))


# --- mixture_logprob ---

def test_weight_one_equals_component():
    a, b, held = two_genres(0)
    m = M.flat_mixture([a, b], [1.0, 0.0])
    for ctx, w in list(M._heldout_events(held))[:200]:
        if w in a.vocab:
            assert M.mixture_logprob(m, ctx, w) == pytest.approx(a.logprob(ctx, w), abs=1e-12)


def test_identical_components():
    a, _, held = two_genres(1)
    m = M.flat_mixture([a, a], [0.3, 0.7])
    for ctx, w in list(M._heldout_events(held))[:200]:
        w = w if w in a.vocab else L.UNK
        assert M.mixture_logprob(m, ctx, w) == pytest.approx(a.logprob(ctx, w), abs=1e-12)


def test_half_half_is_average():
    a, b, held = two_genres(2)
    m = M.flat_mixture([a, b], [0.5, 0.5])
    for ctx, w in list(M._heldout_events(held))[:300]:
        w = m.map_word(w)
        pa = a.prob(ctx, w) if w in a.vocab else 0.0
        pb = b.prob(ctx, w) if w in b.vocab else 0.0
        assert M.mixture_logprob(m, ctx, w) == pytest.approx(math.log10(0.5 * pa + 0.5 * pb), abs=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_mixture_is_normalized(order):
    a, b, held = two_genres(3, order)
    m = M.flat_mixture([a, b], [0.35, 0.65])
    for ctx, _ in list(M._heldout_events(held))[:40] + [(("zz", "a1"), None)]:
        assert sum(m.prob(ctx, w) for w in m.predictable()) == pytest.approx(1.0, abs=1e-6)


def test_node_weights_validated():
    a, _, _ = two_genres(0)
    with pytest.raises(ArgumentError):
        M.Node([M.Leaf(a), M.Leaf(a)], [0.7, 0.7])
    with pytest.raises(ArgumentError):
        M.Node([M.Leaf(a)], [1.0, 0.0])


def test_depth_limited():
    a, _, _ = two_genres(0)
    deep = M.Node([M.Node([M.Node([M.Leaf(a)], [1.0])], [1.0])], [1.0])
    with pytest.raises(ArgumentError):
        M.MixtureLM(deep)


# --- EM ---

def test_single_component():
    a, _, held = two_genres(4)
    w, trace = M.fit_weights_em([a], held)
    assert w == [1.0] and trace.iterations == 1 and trace.converged


def test_identical_components_stay_uniform():
    a, _, held = two_genres(5)
    w, _ = M.fit_weights_em([a, a], held)
    assert w == pytest.approx([0.5, 0.5], abs=1e-15)


def test_empty_heldout_rejected():
    a, _, _ = two_genres(0)
    with pytest.raises(ArgumentError):
        M.fit_weights_em([a], [])
    with pytest.raises(ArgumentError):
        M.fit_weights_em([], [("a1",)])


def test_in_genre_component_dominates():
    genre = zipf_corpus(10, 300, 20, prefix="g")
    other = zipf_corpus(11, 300, 20, prefix="o")
    a, b = L.train(genre, 2), L.train(other, 2)
    held = zipf_corpus(12, 60, 20, prefix="g")
    w, trace = M.fit_weights_em([a, b], held, max_iter=5000, tol=1e-12)
    assert w[0] >= 0.95
    assert_monotone(trace)
    P = M.prob_matrix([a, b], held)
    assert heldout_ppl(P, w) <= grid_best(P)[0] + 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_em_matches_grid_and_line_search(seed):
    a, b, held = two_genres(100 + seed)
    w, trace = M.fit_weights_em([a, b], held, max_iter=5000, tol=1e-12)
    assert_monotone(trace)
    P = M.prob_matrix([a, b], held)
    ppl = heldout_ppl(P, w)
    assert ppl <= grid_best(P)[0] + 1e-6
    assert ppl == pytest.approx(golden_best(P)[0], abs=1e-6)
    with np.errstate(divide="ignore"):
        corners = [heldout_ppl(P, [1.0, 0.0]), heldout_ppl(P, [0.0, 1.0])]
    assert ppl <= min(corners) + 1e-9


def test_corner_dominance_with_full_support():
    # both components know every held-out word, so the corners are finite
    shared = zipf_corpus(50, 200, 15)
    a = L.train(shared[:100], 2)
    b = L.train(shared[100:] + [tuple(w for w in a.predictable() if w.startswith("w"))], 2)
    held = zipf_corpus(51, 40, 15)
    w, _ = M.fit_weights_em([a, b], held, max_iter=5000, tol=1e-12)
    P = M.prob_matrix([a, b], held)
    assert np.all(P > 0)
    ppl = heldout_ppl(P, w)
    for comp in (a, b):
        assert ppl <= L.perplexity(comp, held, "score_as_unk").value + 1e-9


def test_em_zero_probability_row():
    with pytest.raises(Exception):
        M.em_weights(np.array([[0.0, 0.0], [0.5, 0.5]]))


# --- hierarchical ---

def _four_models():
    return [(f"m{i}", L.train(zipf_corpus(20 + i, 60, 12, prefix="abcd"[i % 2]), 2)) for i in range(4)]


def test_singleton_groups_equal_flat():
    models = _four_models()
    held = zipf_corpus(30, 30, 12, prefix="a") + zipf_corpus(31, 30, 12, prefix="b")
    h = M.fit_hierarchical([(n, [(n, m)]) for n, m in models], held)
    flat, _ = M.fit_weights_em([m for _, m in models], held)
    assert h.root.weights == pytest.approx(flat, abs=1e-9)


def test_one_group_gives_root_one():
    models = _four_models()
    held = zipf_corpus(32, 30, 12, prefix="a")
    h = M.fit_hierarchical([("all", models)], held)
    flat, _ = M.fit_weights_em([m for _, m in models], held)
    assert h.root.weights == [1.0]
    assert h.root.children[0].weights == pytest.approx(flat, abs=1e-12)


def test_two_groups_beat_every_leaf():
    models = _four_models()
    held = zipf_corpus(33, 30, 12, prefix="a") + zipf_corpus(34, 30, 12, prefix="b")
    h = M.fit_hierarchical([("g1", models[:2]), ("g2", models[2:])], held)
    ppl = M.mixture_perplexity(h, held).value
    for _, m in models:
        assert ppl <= L.perplexity(m, held, "score_as_unk").value + 1e-9


# --- flatten ---

def _tree(models, root_w=(0.6, 0.4), inner=((0.5, 0.5), (1.0,))):
    g1 = M.Node([M.Leaf(models[0][1]), M.Leaf(models[1][1])], list(inner[0]), "g1")
    g2 = M.Node([M.Leaf(models[2][1])], list(inner[1]), "g2")
    return M.MixtureLM(M.Node([g1, g2], list(root_w), M.ROOT))


def random_queries(m, n, seed):
    rng = random.Random(seed)
    words = m.predictable() + ["<s>", "oov"]
    return [(tuple(rng.choice(words) for _ in range(rng.randint(0, 3))), rng.choice(words[:-2] + ["oov"]))
            for _ in range(n)]


def test_flatten_product_weights():
    models = _four_models()
    tree = _tree(models)
    flat = M.flatten(tree)
    assert flat.root.weights == pytest.approx([0.3, 0.3, 0.4], abs=1e-15)
    assert flat.depth == 1
    for ctx, w in random_queries(tree, 1000, 0):
        assert abs(flat.prob(ctx, w) - tree.prob(ctx, w)) <= 1e-12


def test_flatten_identity_cases():
    models = _four_models()
    flat = M.flat_mixture([m for _, m in models], [0.25] * 4)
    assert M.flatten(flat) is flat
    one = M.MixtureLM(M.Node([M.Node([M.Leaf(models[0][1]), M.Leaf(models[1][1])], [0.2, 0.8])], [1.0]))
    assert M.flatten(one).root.weights == [0.2, 0.8]


# --- baking ---

def test_bake_self_mixture_is_identity():
    a, _, _ = two_genres(40)
    baked = M.bake_arpa(M.flat_mixture([a, a], [0.5, 0.5]), 2)
    for k in range(2):
        assert set(baked.probs[k]) == set(a.probs[k])
        for g, lp in a.probs[k].items():
            assert baked.probs[k][g] == pytest.approx(lp, abs=1e-9)
        for h, b in a.backoffs[k].items():
            assert baked.backoffs[k][h] == pytest.approx(b, abs=1e-9)


def test_bake_weight_one():
    a, b, _ = two_genres(41)
    baked = M.bake_arpa(M.flat_mixture([a, b], [1.0, 0.0]), 2)
    for k in range(2):
        for g, lp in a.probs[k].items():
            assert baked.probs[k][g] == pytest.approx(lp, abs=1e-9)


@pytest.mark.parametrize("order", [2, 3])
def test_bake_exact_on_union_and_normalized(order):
    a, b, held = two_genres(42, order)
    m = M.flat_mixture([a, b], [0.3, 0.7])
    baked = M.bake_arpa(m, order)
    for k in range(order):
        union = set(a.probs[k]) | set(b.probs[k])
        assert union <= set(baked.probs[k])
        for g in union:
            if g[-1] == L.BOS:
                continue
            assert baked.logprob(g[:-1], g[-1]) == m.logprob(g[:-1], g[-1])
    contexts = [ctx for ctx, _ in list(M._heldout_events(held))[:50]]
    contexts += [h for k in range(order - 1) for h in baked.backoffs[k]]
    for ctx in contexts:
        assert sum(baked.prob(ctx, w) for w in baked.predictable()) == pytest.approx(1.0, abs=1e-6)


def test_bake_order_too_low():
    a, b, _ = two_genres(0, 3)
    with pytest.raises(ArgumentError):
        M.bake_arpa(M.flat_mixture([a, b], [0.5, 0.5]), 2)


# --- weights file ---

def test_weights_file_roundtrip(tmp_path):
    models = _four_models()
    paths = {}
    for name, m in models:
        p = tmp_path / f"{name}.arpa"
        save_arpa(m, p)
        paths[name] = str(p)
    loaded = [(n, load_arpa(paths[n])) for n, _ in models]
    tree = _tree(loaded, root_w=(0.25, 0.75), inner=((0.125, 0.875), (1.0,)))
    wfile = tmp_path / "w.tsv"
    M.write_weights(wfile, tree, {id(m): paths[n] for n, m in loaded})
    back = M.read_weights(wfile, load_arpa)
    assert back.root.weights == tree.root.weights
    assert [c.weights for c in back.root.children] == [c.weights for c in tree.root.children]
    for ctx, w in random_queries(tree, 200, 1):
        assert back.prob(ctx, w) == tree.prob(ctx, w)


@pytest.mark.parametrize("body", [
    "g\tm.arpa\n",
    "g\tm.arpa\tx\n",
    "g\tm.arpa\t1.0\n",
    "",
])
def test_bad_weights_file(tmp_path, body):
    p = tmp_path / "w.tsv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(FormatError):
        M.read_weights(p, lambda path: L.NGramModel.uniform(["a"]))
