"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--tokens N] [--classes K] [--pairs N] [--repeat R]

Times the exchange clustering sweep and the transliteration E-step on
seeded synthetic data with each available backend and checks that both
backends produce identical results.
"""

import argparse
import statistics
import time

import numpy as np

from adaptkit import kernels, translit, wordclasses


def zipf_corpus(seed, n_tokens, vocab, a=1.05):
    rng = np.random.default_rng(seed)
    p = 1.0 / np.arange(1, vocab + 1) ** a
    p /= p.sum()
    out, total = [], 0
    while total < n_tokens:
        n = int(rng.integers(5, 20))
        out.append(tuple(f"w{i}" for i in rng.choice(vocab, size=n, p=p)))
        total += n
    return out


def timed(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tokens", type=int, default=50_000)
    ap.add_argument("--vocab", type=int, default=5_000)
    ap.add_argument("--classes", type=int, default=50)
    ap.add_argument("--iters", type=int, default=3)
    ap.add_argument("--pairs", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()

    corpus = zipf_corpus(0, a.tokens, a.vocab)
    pairs, _ = translit.synthetic_pairs(a.pairs // 2, a.pairs - a.pairs // 2, seed=0)
    print(f"backends available: {', '.join(sorted(kernels.BACKENDS))} (active: {kernels.BACKEND})")
    rows = {}
    for name in sorted(kernels.BACKENDS):
        tc, (cl, obj) = timed(lambda: wordclasses.induce_classes(corpus, a.classes, a.iters, backend=name), a.repeat)
        tt, (model, _) = timed(lambda: translit.mine(pairs, iters=5, backend=name), a.repeat)
        rows[name] = (tc, tt, cl.assignment, obj.value, model.lam)
        print(f"{name:>7}: exchange K={a.classes} on {sum(map(len, corpus))} tokens x{a.iters} sweeps "
              f"{tc:8.3f}s | translit EM {len(pairs)} pairs x5 {tt:8.3f}s")
    if len(rows) == 2:
        c, p = rows["cython"], rows["python"]
        same = c[2] == p[2] and abs(c[3] - p[3]) <= 1e-9 * abs(p[3]) and abs(c[4] - p[4]) <= 1e-12
        print(f"speedup: exchange {p[0] / c[0]:.1f}x, translit {p[1] / c[1]:.1f}x; identical results: {same}")


if __name__ == "__main__":
    main()
