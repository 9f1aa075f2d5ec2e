"""ARPA text format reader/writer.

Values are written with ``repr`` so a write/read cycle is lossless.
"""

from __future__ import annotations

import io
import math
import re

from .errors import FormatError
from .ngramlm import NGramModel

_COUNT_LINE = re.compile(r"^ngram (\d+)=(\d+)$")
_SECTION = re.compile(r"^\\(\d+)-grams:$")


def _fmt(x: float) -> str:
    if x == 0.0:
        return "0"
    return repr(float(x))


def format_arpa(model: NGramModel) -> str:
    out = io.StringIO()
    write_arpa(model, out)
    return out.getvalue()


def write_arpa(model: NGramModel, f) -> None:
    f.write("\n\\data\\\n")
    for k in range(1, model.order + 1):
        f.write(f"ngram {k}={len(model.probs[k - 1])}\n")
    for k in range(1, model.order + 1):
        f.write(f"\n\\{k}-grams:\n")
        bows = model.backoffs[k - 1]
        for g, lp in model.probs[k - 1].items():
            line = f"{_fmt(lp)}\t{' '.join(g)}"
            if k < model.order and g in bows:
                line += f"\t{_fmt(bows[g])}"
            f.write(line + "\n")
    f.write("\n\\end\\\n")


def save_arpa(model: NGramModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        write_arpa(model, f)


def _number(tok, lineno, path):
    try:
        v = float(tok)
    except ValueError:
        raise FormatError(f"not a number: {tok!r}", lineno, path) from None
    if math.isnan(v):
        raise FormatError("NaN value", lineno, path)
    return v


def read_arpa(f, path=None) -> NGramModel:
    """Parse an ARPA model from a text stream.

    Raises :class:`FormatError` with the offending line number on any
    grammar violation, including section sizes that disagree with the
    ``\\data\\`` header.
    """
    lines = enumerate(f, 1)
    declared: dict[int, int] = {}

    # header: skip anything before \data\
    for lineno, raw in lines:
        if raw.strip() == "\\data\\":
            break
    else:
        raise FormatError("missing \\data\\ header", None, path)

    section = None
    lineno = 0
    for lineno, raw in lines:
        line = raw.strip()
        if not line:
            continue
        m = _COUNT_LINE.match(line)
        if m:
            k, n = int(m.group(1)), int(m.group(2))
            if k != len(declared) + 1:
                raise FormatError(f"unexpected order {k} in \\data\\", lineno, path)
            declared[k] = n
            continue
        section = _SECTION.match(line)
        if section:
            break
        raise FormatError(f"unexpected line in \\data\\ block: {line!r}", lineno, path)
    if not declared:
        raise FormatError("\\data\\ block declares no n-gram counts", lineno, path)
    if section is None:
        raise FormatError("no n-gram sections", lineno, path)

    order = len(declared)
    probs = [dict() for _ in range(order)]
    bows = [dict() for _ in range(order)]
    k = int(section.group(1))
    seen_end = False
    expected_k = 1
    if k != expected_k:
        raise FormatError(f"expected \\{expected_k}-grams:", lineno, path)

    def close(k, lineno):
        if len(probs[k - 1]) != declared[k]:
            raise FormatError(
                f"\\{k}-grams: has {len(probs[k - 1])} entries but \\data\\ declares {declared[k]}",
                lineno, path)

    for lineno, raw in lines:
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped == "\\end\\":
            close(k, lineno)
            seen_end = True
            break
        m = _SECTION.match(stripped)
        if m:
            close(k, lineno)
            k = int(m.group(1))
            expected_k += 1
            if k != expected_k or k > order:
                raise FormatError(f"unexpected section \\{k}-grams:", lineno, path)
            continue
        fields = line.split("\t") if "\t" in line else line.split()
        if "\t" in line:
            if len(fields) not in (2, 3):
                raise FormatError("expected logprob<TAB>ngram[<TAB>backoff]", lineno, path)
            words = tuple(fields[1].split())
            bow = fields[2] if len(fields) == 3 else None
        else:
            # space-separated variant: logprob w1..wk [backoff]
            if len(fields) == k + 1:
                bow = None
            elif len(fields) == k + 2:
                bow = fields[-1]
            else:
                raise FormatError(f"expected {k} words", lineno, path)
            words = tuple(fields[1:k + 1])
        if len(words) != k:
            raise FormatError(f"expected {k} words, found {len(words)}", lineno, path)
        if words in probs[k - 1]:
            raise FormatError(f"duplicate n-gram {' '.join(words)!r}", lineno, path)
        lp = _number(fields[0], lineno, path)
        if lp > 0:
            raise FormatError(f"log probability {lp} > 0", lineno, path)
        probs[k - 1][words] = lp
        if bow is not None:
            if k == order:
                raise FormatError("backoff weight at the highest order", lineno, path)
            bows[k - 1][words] = _number(bow, lineno, path)
    if not seen_end:
        raise FormatError("missing \\end\\ marker", lineno, path)
    if expected_k != order:
        raise FormatError(f"found {expected_k} sections, \\data\\ declares {order}", lineno, path)
    for j in range(2, order + 1):
        for g in probs[j - 1]:
            if g[:-1] not in probs[j - 2]:
                raise FormatError(f"n-gram {' '.join(g)!r} has no stored prefix", None, path)
    return NGramModel(order, probs, bows)


def load_arpa(path) -> NGramModel:
    with open(path, encoding="utf-8") as f:
        return read_arpa(f, path)


def parse_arpa(text: str) -> NGramModel:
    return read_arpa(io.StringIO(text))
