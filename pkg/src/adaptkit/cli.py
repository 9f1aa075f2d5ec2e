"""Command-line entry point: ``adaptkit <subcommand> [flags]``.

Exit codes: 0 success, 1 argument error, 2 parse/format error,
3 numerical failure. Data goes to files or stdout; diagnostics and the
one-line JSON run manifest go to stderr (or ``--manifest FILE``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import arpa, lminterp, ngramlm, phrasetable, textnorm, translit, tuneselect, wordclasses
from .errors import AdaptKitError, ArgumentError, FormatError, NumericalError

log = logging.getLogger("adaptkit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _g(x) -> str:
    return f"{x:.6g}"


def _read_lines(path):
    if path == "-":
        return sys.stdin.read().splitlines()
    with open(path, encoding="utf-8") as f:
        return f.read().splitlines()


def _open_out(path):
    if path in (None, "-"):
        return _Stdout()
    return open(path, "w", encoding="utf-8", newline="\n")


class _Stdout:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        sys.stdout.flush()
        return False


def _corpus(path):
    return [tuple(line.split()) for line in _read_lines(path)]


# subcommands

def cmd_normalize(a, ctx):
    rules = textnorm.RewriteRuleSet.read(a.rules) if a.rules else None
    emoticons = None if a.no_emoticons else (a.emoticon or list(textnorm.DEFAULT_EMOTICONS))
    markup = list(a.markup or [])
    if a.strip_default_markup:
        markup += textnorm.DEFAULT_MARKUP
    if markup:
        textnorm.compile_patterns(markup)
    if emoticons:
        textnorm.compile_patterns(emoticons)
    with _open_out(a.output) as out:
        for line in _read_lines(a.input):
            out.write(textnorm.normalize_line(
                line, strip_tatweel=a.strip_tatweel, collapse_elongation=a.collapse_elongation,
                normalize_alef_ya=a.normalize_alef_ya, emoticons=emoticons, markup=markup,
                delimiter=a.intended_delimiter, rules=rules) + "\n")


def cmd_lm_train(a, ctx):
    model = ngramlm.train(_corpus(a.corpus), a.order, ctx["threads"])
    ctx["warnings"].extend(model.warnings)
    with _open_out(a.output) as out:
        arpa.write_arpa(model, out)


def _print_record(rec):
    print(json.dumps(rec, ensure_ascii=False, sort_keys=True))


def cmd_lm_ppl(a, ctx):
    model = arpa.load_arpa(a.model)
    ppl = ngramlm.perplexity(model, _corpus(a.corpus), a.oov_policy.replace("-", "_"))
    _print_record({"file": a.corpus, **ppl.as_record()})


def _load_models(paths):
    cache = {}
    for p in paths:
        if p not in cache:
            cache[p] = arpa.load_arpa(p)
    return cache


def cmd_lm_interp(a, ctx):
    models = _load_models(a.models)
    comps = [models[p] for p in a.models]
    weights, trace = lminterp.fit_weights_em(comps, _corpus(a.heldout), a.max_iter, a.tol)
    mix = lminterp.flat_mixture(comps, weights, a.models)
    mix.root.name = a.group
    _write_weights(a.output, mix)
    ppl = lminterp.mixture_perplexity(mix, _corpus(a.heldout))
    _print_record({"weights": [float(_g(w)) for w in weights], "iterations": trace.iterations,
                   "converged": trace.converged, "ppl": float(_g(ppl.value))})


def _write_weights(path, mix):
    ids = {}
    for leaf in mix.leaves:
        ids[id(leaf.model)] = leaf.name
    with _open_out(path) as out:
        lminterp.write_weights(out, mix, ids)


def cmd_lm_hier_interp(a, ctx):
    manifest = lminterp.read_group_manifest(a.manifest)
    models = _load_models([p for _, ps in manifest for p in ps])
    groups = [(name, [(p, models[p]) for p in ps]) for name, ps in manifest]
    mix = lminterp.fit_hierarchical(groups, _corpus(a.heldout), a.max_iter, a.tol)
    _write_weights(a.output, mix)
    ppl = lminterp.mixture_perplexity(mix, _corpus(a.heldout))
    _print_record({"groups": {n.name: float(_g(w)) for n, w in zip(mix.root.children, mix.root.weights)},
                   "ppl": float(_g(ppl.value))})


def cmd_lm_bake(a, ctx):
    mix = lminterp.read_weights(a.weights, arpa.load_arpa)
    baked = lminterp.bake_arpa(mix, a.order)
    with _open_out(a.output) as out:
        arpa.write_arpa(baked, out)


def cmd_classes(a, ctx):
    clustering, obj = wordclasses.induce_classes(_corpus(a.corpus), a.k, a.iters, a.seed)
    clustering.write(a.output)
    _print_record({"K": a.k, "objective": float(_g(obj.value)), "moves": len(obj.trace) - 1})


def cmd_map_classes(a, ctx):
    clustering = wordclasses.WordClustering.read(a.classes)
    with _open_out(a.output) as out:
        for sent in wordclasses.map_corpus(_corpus(a.corpus), clustering):
            out.write(" ".join(sent) + "\n")


def cmd_pt_backoff(a, ctx):
    merged = phrasetable.backoff_merge(phrasetable.read_phrase_table(a.in_domain),
                                       phrasetable.read_phrase_table(a.out_domain))
    _write_table(merged, a.output)


def cmd_pt_merge(a, ctx):
    merged = phrasetable.indicator_merge(phrasetable.read_phrase_table(a.in_domain),
                                         phrasetable.read_phrase_table(a.out_domain))
    _write_table(merged, a.output)


def cmd_rt_merge(a, ctx):
    tol = None if a.sum_tol < 0 else a.sum_tol
    merged = phrasetable.reordering_merge(phrasetable.read_reordering_table(a.in_domain, tol),
                                          phrasetable.read_reordering_table(a.out_domain, tol))
    _write_table(merged, a.output)


def _write_table(table, path):
    if path in (None, "-"):
        sys.stdout.write(table.to_text())
    else:
        phrasetable.write_table(table, path)


def cmd_cat_bitext(a, ctx):
    if len(a.src) != len(a.tgt):
        raise ArgumentError("--src and --tgt must be given the same number of times")
    n = phrasetable.concat_bitexts(zip(a.src, a.tgt), a.out_src, a.out_tgt)
    _print_record({"lines": n})


def cmd_translit_mine(a, ctx):
    pairs = translit.read_pairs(a.pairs)
    model, mined = translit.mine(pairs, a.iters, a.threshold)
    model.write(a.model_out)
    with _open_out(a.output) as out:
        for m in mined:
            out.write(f"{m.src_word}\t{m.tgt_word}\t{m.posterior!r}\t{m.label}\n")
    _print_record({"lambda": float(_g(model.lam)),
                   "transliterations": sum(m.label == translit.TRANSLIT for m in mined),
                   "pairs": len(mined)})


def cmd_translit_gen(a, ctx):
    model = translit.TransliterationModel.read(a.model)
    words = [a.word] if a.word else [w for line in _read_lines(a.words) for w in line.split()]
    with _open_out(a.output) as out:
        for w in words:
            for tgt, lp in translit.transliterate(model, w, a.k, a.beam, a.max_insert):
                out.write(f"{w}\t{tgt}\t{_g(lp)}\n")


def cmd_translit_synth(a, ctx):
    pairs, labels = translit.synthetic_pairs(a.n_true, a.n_false, a.seed)
    with _open_out(a.output) as out:
        for (s, t) in pairs:
            out.write(f"{s}\t{t}\n")
    if a.labels:
        with open(a.labels, "w", encoding="utf-8") as f:
            f.writelines(("1\n" if lab else "0\n") for lab in labels)


def cmd_kde(a, ctx):
    lengths = [len(line.split()) for line in _read_lines(a.corpus)]
    lengths = [n for n in lengths if n > 0]
    dens = tuneselect.kde_lengths(lengths, a.bandwidth, a.grid)
    with _open_out(a.output) as out:
        out.write(dens.to_csv())


def cmd_filter_tune(a, ctx):
    spec = tuneselect.LengthFilterSpec(a.min_len, a.max_len)
    src, tgt = _read_lines(a.src), _read_lines(a.tgt)
    if len(src) != len(tgt):
        raise ArgumentError(f"misaligned bitext: {len(src)} vs {len(tgt)} lines")
    kept = 0
    with _open_out(a.out_src) as fs, _open_out(a.out_tgt) as ft:
        for s, t in zip(src, tgt):
            if spec.accepts(len(s.split())) and spec.accepts(len(t.split())):
                fs.write(s + "\n")
                ft.write(t + "\n")
                kept += 1
    _print_record({"kept": kept, "total": len(src)})


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="adaptkit",
                description="Language-model, phrase-table and preprocessing tools for adapting "
                            "SMT systems to informal Arabic genres.")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $ADAPTKIT_THREADS or 1)")
    p.add_argument("--manifest-out", default=None, help="append the JSON run manifest to this file")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=fn)
        return sp

    s = add("normalize", cmd_normalize, "clean and normalize a text corpus")
    s.add_argument("--input", required=True)
    s.add_argument("--output", default="-")
    s.add_argument("--strip-tatweel", action="store_true")
    s.add_argument("--collapse-elongation", action="store_true")
    s.add_argument("--normalize-alef-ya", action="store_true")
    s.add_argument("--emoticon", action="append", help="emoticon regex (repeatable; default set if omitted)")
    s.add_argument("--no-emoticons", action="store_true")
    s.add_argument("--markup", action="append", help="regex for markup tokens to drop (repeatable)")
    s.add_argument("--strip-default-markup", action="store_true")
    s.add_argument("--intended-delimiter", default=None)
    s.add_argument("--rules", default=None, help="TSV rewrite rules")

    s = add("lm-train", cmd_lm_train, "train a modified Kneser-Ney ARPA model")
    s.add_argument("--corpus", required=True)
    s.add_argument("--order", type=int, default=5)
    s.add_argument("--output", default="-")

    s = add("lm-ppl", cmd_lm_ppl, "perplexity of an ARPA model on a corpus")
    s.add_argument("--model", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--oov-policy", choices=["skip", "score-as-unk"], default="skip")

    for name, fn, help in (("lm-interp", cmd_lm_interp, "fit flat interpolation weights by EM"),
                           ("lm-hier-interp", cmd_lm_hier_interp, "two-level interpolation over model groups")):
        s = add(name, fn, help)
        if name == "lm-interp":
            s.add_argument("--models", nargs="+", required=True)
            s.add_argument("--group", default="all")
        else:
            s.add_argument("--manifest", required=True, help="group<TAB>model-path lines")
        s.add_argument("--heldout", required=True)
        s.add_argument("--output", required=True, help="weights file")
        s.add_argument("--max-iter", type=int, default=100)
        s.add_argument("--tol", type=float, default=1e-6)

    s = add("lm-bake", cmd_lm_bake, "statically interpolate a weights file into one ARPA model")
    s.add_argument("--weights", required=True)
    s.add_argument("--order", type=int, default=None)
    s.add_argument("--output", default="-")

    s = add("classes", cmd_classes, "induce word classes with the exchange algorithm")
    s.add_argument("--corpus", required=True)
    s.add_argument("-k", "--num-classes", dest="k", type=int, default=50)
    s.add_argument("--iters", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", required=True)

    s = add("map-classes", cmd_map_classes, "rewrite a corpus as class-ID tokens")
    s.add_argument("--corpus", required=True)
    s.add_argument("--classes", required=True)
    s.add_argument("--output", default="-")

    for name, fn, help in (("pt-backoff", cmd_pt_backoff, "phrase-table backoff combination"),
                           ("pt-merge", cmd_pt_merge, "phrase-table merge with provenance indicators"),
                           ("rt-merge", cmd_rt_merge, "reordering-table merge")):
        s = add(name, fn, help)
        s.add_argument("--in-domain", required=True)
        s.add_argument("--out-domain", required=True)
        s.add_argument("--output", default="-")
        if name == "rt-merge":
            s.add_argument("--sum-tol", type=float, default=phrasetable.SUM_TOL,
                           help="orientation-block sum tolerance; negative disables the check")

    s = add("cat-bitext", cmd_cat_bitext, "concatenate bitexts in argument order")
    s.add_argument("--src", action="append", required=True)
    s.add_argument("--tgt", action="append", required=True)
    s.add_argument("--out-src", required=True)
    s.add_argument("--out-tgt", required=True)

    s = add("translit-mine", cmd_translit_mine, "mine transliteration pairs with EM")
    s.add_argument("--pairs", required=True, help="src<TAB>tgt lines")
    s.add_argument("--iters", type=int, default=10)
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--model-out", required=True)
    s.add_argument("--output", required=True, help="mined pairs with posteriors and labels")

    s = add("translit-gen", cmd_translit_gen, "top-k transliterations of source words")
    s.add_argument("--model", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--word")
    g.add_argument("--words", help="file of words, whitespace-separated")
    s.add_argument("-k", type=int, default=5)
    s.add_argument("--beam", type=int, default=200)
    s.add_argument("--max-insert", type=int, default=1)
    s.add_argument("--output", default="-")

    s = add("translit-synth", cmd_translit_synth, "write a seeded synthetic mining corpus")
    s.add_argument("--n-true", type=int, default=200)
    s.add_argument("--n-false", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", default="-")
    s.add_argument("--labels", default=None)

    s = add("kde", cmd_kde, "Gaussian KDE of sentence lengths as CSV")
    s.add_argument("--corpus", required=True)
    s.add_argument("--bandwidth", type=float, default=tuneselect.DEFAULT_BANDWIDTH)
    s.add_argument("--grid", type=int, default=tuneselect.DEFAULT_GRID)
    s.add_argument("--output", default="-")

    s = add("filter-tune", cmd_filter_tune, "drop tuning pairs outside length bounds")
    s.add_argument("--src", required=True)
    s.add_argument("--tgt", required=True)
    s.add_argument("--min-len", type=int, default=tuneselect.DEFAULT_MIN_LEN)
    s.add_argument("--max-len", type=int, default=tuneselect.DEFAULT_MAX_LEN)
    s.add_argument("--out-src", required=True)
    s.add_argument("--out-tgt", required=True)
    return p


def _threads(value):
    if value is not None:
        return max(1, value)
    env = os.environ.get("ADAPTKIT_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise ArgumentError(f"ADAPTKIT_THREADS must be an integer, got {env!r}") from None


def dispatch(argv=None) -> int:
    parser = build_parser()
    start = time.time()
    ctx = {"warnings": [], "threads": 1}
    manifest = {"subcommand": None, "params": {}, "status": None}
    code = 0
    args = None
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            raise UsageError("adaptkit: error: no subcommand given")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        ctx["threads"] = _threads(args.threads)
        manifest["subcommand"] = args.command
        manifest["params"] = {k: v for k, v in vars(args).items() if k != "func"}
        manifest["params"]["threads"] = ctx["threads"]
        args.func(args, ctx)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        code = 1
    except FormatError as exc:
        print(f"adaptkit: format error: {exc}", file=sys.stderr)
        code = 2
    except NumericalError as exc:
        print(f"adaptkit: numerical error: {exc}", file=sys.stderr)
        code = 3
    except AdaptKitError as exc:
        print(f"adaptkit: error: {exc}", file=sys.stderr)
        code = exc.exit_code
    except FileNotFoundError as exc:
        print(f"adaptkit: error: {exc}", file=sys.stderr)
        code = 1
    except UnicodeDecodeError as exc:
        print(f"adaptkit: format error: {exc}", file=sys.stderr)
        code = 2
    manifest["status"] = code
    manifest["wall_time"] = round(time.time() - start, 6)
    manifest["warnings"] = ctx["warnings"]
    line = json.dumps(manifest, ensure_ascii=False, sort_keys=True, default=str)
    dest = getattr(args, "manifest_out", None) if args is not None else None
    if dest:
        with open(dest, "a", encoding="utf-8") as f:
            f.write(line + "\n")
    else:
        print(line, file=sys.stderr)
    return code


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
