import re

import pytest

from adaptkit import ngramlm as L
from adaptkit.arpa import format_arpa, load_arpa, parse_arpa, save_arpa
from adaptkit.errors import FormatError
from conftest import TOY_CORPORA, zipf_corpus

SMALL = """
\\data\\
ngram 1=3

\\1-grams:
-0.5\ta
-0.5\tb
-99\t<s>

\\end\\
"""


def test_hand_written_unigram_file():
    m = parse_arpa(SMALL)
    assert m.order == 1
    assert m.logprob([], "a") == -0.5
    assert m.vocab == {"a", "b", "<s>"}


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_roundtrip_is_lossless(order, tmp_path):
    m = L.train(zipf_corpus(order, 80, 20), order)
    p = tmp_path / "m.arpa"
    save_arpa(m, p)
    back = load_arpa(p)
    assert back.probs == m.probs
    assert back.backoffs == m.backoffs
    assert format_arpa(back) == p.read_text(encoding="utf-8")


def test_structure_of_written_file():
    text = format_arpa(L.train(TOY_CORPORA["small"], 3))
    lines = text.splitlines()
    assert lines[1] == "\\data\\" and lines[-1] == "\\end\\"
    counts = [int(x) for x in re.findall(r"^ngram \d+=(\d+)$", text, re.M)]
    for k, n in enumerate(counts, 1):
        body = text.split(f"\\{k}-grams:\n", 1)[1].split("\n\n", 1)[0].splitlines()
        assert len(body) == n
        for row in body:
            fields = row.split("\t")
            assert len(fields[1].split(" ")) == k
            assert len(fields) in ((2,) if k == 3 else (2, 3))
            assert float(fields[0]) <= 0


def _mangle(text, old, new):
    assert old in text
    return text.replace(old, new, 1)


@pytest.mark.parametrize("edit,needle", [
    (lambda t: _mangle(t, "ngram 1=3", "ngram 1=4"), "declares 4"),
    (lambda t: _mangle(t, "-0.5\ta\n", "-0.5\ta\n-0.5\ta\n"), "duplicate"),
    (lambda t: _mangle(t, "-0.5\ta", "0.5\ta"), "> 0"),
    (lambda t: _mangle(t, "\\end\\\n", ""), "end"),
    (lambda t: _mangle(t, "-0.5\ta", "x\ta"), "not a number"),
    (lambda t: _mangle(t, "-0.5\ta", "-0.5\ta\t-0.1"), "highest order"),
])
def test_corrupt_files_report_line(edit, needle):
    with pytest.raises(FormatError) as exc:
        parse_arpa(edit(SMALL))
    assert needle in str(exc.value)


def test_count_mismatch_has_line_number(tmp_path):
    p = tmp_path / "bad.arpa"
    p.write_text(SMALL.replace("ngram 1=3", "ngram 1=2"), encoding="utf-8")
    with pytest.raises(FormatError) as exc:
        load_arpa(p)
    assert exc.value.lineno is not None
    assert str(exc.value).startswith(f"{p}:{exc.value.lineno}:")


def test_missing_prefix_rejected():
    text = SMALL.replace("ngram 1=3", "ngram 1=3\nngram 2=1").replace(
        "\\end\\", "\\2-grams:\n-0.1\tq a\n\n\\end\\")
    with pytest.raises(FormatError, match="prefix"):
        parse_arpa(text)


@pytest.mark.parametrize("order", [2, 3])
def test_loads_in_kenlm(order, tmp_path):
    kenlm = pytest.importorskip("kenlm")
    m = L.train(TOY_CORPORA["zipf"], order)
    p = tmp_path / "m.arpa"
    save_arpa(m, p)
    km = kenlm.Model(str(p))
    assert km.order == order
    for sent in TOY_CORPORA["zipf"][:20] + [("w1", "unseen", "w2")]:
        ours = sum(lp for _, lp in m.sentence_logprobs(sent))
        assert km.score(" ".join(sent), bos=True, eos=True) == pytest.approx(ours, abs=1e-4)
