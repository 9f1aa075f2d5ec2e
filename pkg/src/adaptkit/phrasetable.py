"""Moses phrase and reordering tables: parsing and domain-adaptation merges.

Rows keep the exact text of their numeric fields, so an unmodified row
serializes back to the bytes it was read from.
"""

from __future__ import annotations

import gzip
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable

from .errors import ArgumentError, FormatError

SEP = " ||| "
E_STR = repr(math.e)
ONE_STR = "1"
SUM_TOL = 1e-6


def _floats(tokens, what, lineno, path, positive=True):
    out = []
    for tok in tokens:
        try:
            v = float(tok)
        except ValueError:
            raise FormatError(f"non-numeric {what} {tok!r}", lineno, path) from None
        if math.isnan(v) or math.isinf(v) or (positive and v <= 0):
            raise FormatError(f"{what} must be a positive finite number, got {tok!r}", lineno, path)
        out.append(v)
    return tuple(out)


@dataclass(frozen=True)
class PhraseTableRow:
    src: tuple[str, ...]
    tgt: tuple[str, ...]
    feature_text: tuple[str, ...]
    alignment: tuple[tuple[int, int], ...] = ()
    counts_text: tuple[str, ...] | None = None
    extra: tuple[str, ...] = ()  # trailing fields kept verbatim
    has_alignment_field: bool = True

    @property
    def features(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self.feature_text)

    @property
    def counts(self) -> tuple[float, ...] | None:
        return None if self.counts_text is None else tuple(float(x) for x in self.counts_text)

    @property
    def key(self) -> tuple[str, str]:
        return (" ".join(self.src), " ".join(self.tgt))

    def with_features(self, feature_text) -> "PhraseTableRow":
        return replace(self, feature_text=tuple(feature_text))


def parse_row(line: str, lineno: int | None = None, path=None) -> PhraseTableRow:
    line = line.rstrip("\n").rstrip("\r")
    fields = line.split(SEP)
    if len(fields) < 3:
        raise FormatError(f"expected at least 3 '|||' fields, found {len(fields)}", lineno, path)
    src = tuple(fields[0].split(" "))
    tgt = tuple(fields[1].split(" "))
    if not fields[0] or not fields[1] or "" in src or "" in tgt:
        raise FormatError("empty or badly spaced phrase", lineno, path)
    feats = tuple(fields[2].split(" ")) if fields[2] else ()
    if not feats or "" in feats:
        raise FormatError("missing or badly spaced features", lineno, path)
    _floats(feats, "feature", lineno, path)
    alignment = ()
    has_align = len(fields) > 3
    if has_align and fields[3]:
        pts = []
        for tok in fields[3].split(" "):
            i, dash, j = tok.partition("-")
            if not dash or not i.isdigit() or not j.isdigit():
                raise FormatError(f"bad alignment point {tok!r}", lineno, path)
            i, j = int(i), int(j)
            if i >= len(src) or j >= len(tgt):
                raise FormatError(f"alignment point {tok} outside phrase bounds", lineno, path)
            pts.append((i, j))
        alignment = tuple(pts)
    counts = None
    if len(fields) > 4:
        counts = tuple(fields[4].split(" ")) if fields[4] else ()
        if "" in counts:
            raise FormatError("badly spaced counts", lineno, path)
        _floats(counts, "count", lineno, path, positive=False)
    extra = tuple(fields[5:])
    return PhraseTableRow(src, tgt, feats, alignment, counts, extra, has_align)


def serialize_row(row: PhraseTableRow) -> str:
    fields = [" ".join(row.src), " ".join(row.tgt), " ".join(row.feature_text)]
    if row.has_alignment_field or row.counts_text is not None or row.extra:
        fields.append(" ".join(f"{i}-{j}" for i, j in row.alignment))
    if row.counts_text is not None or row.extra:
        fields.append(" ".join(row.counts_text or ()))
    fields.extend(row.extra)
    return SEP.join(fields)


@dataclass
class PhraseTable:
    rows: list[PhraseTableRow]
    feature_count: int

    def __post_init__(self):
        seen = set()
        for r in self.rows:
            if len(r.feature_text) != self.feature_count:
                raise ArgumentError(f"row {r.key} has {len(r.feature_text)} features, "
                                    f"table expects {self.feature_count}")
            if r.key in seen:
                raise ArgumentError(f"duplicate phrase pair {r.key}")
            seen.add(r.key)

    def __len__(self):
        return len(self.rows)

    def sources(self) -> set[str]:
        return {r.key[0] for r in self.rows}

    def sorted(self) -> "PhraseTable":
        return PhraseTable(sorted(self.rows, key=_sort_key), self.feature_count)

    def to_text(self) -> str:
        return "".join(serialize_row(r) + "\n" for r in self.rows)


def _sort_key(row):
    s, t = row.key
    return (s.encode("utf-8"), t.encode("utf-8"))


def open_text(path, mode="r"):
    """Open a possibly gzip-compressed text file (detected by magic bytes)."""
    if "r" in mode:
        with open(path, "rb") as f:
            magic = f.read(2)
        if magic == b"\x1f\x8b":
            return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="\n")
        return open(path, encoding="utf-8", newline="\n")
    if str(path).endswith(".gz"):
        return io.TextIOWrapper(gzip.open(path, "wb"), encoding="utf-8", newline="\n")
    return open(path, "w", encoding="utf-8", newline="\n")


def read_phrase_table(path) -> PhraseTable:
    rows = []
    nfeat = None
    seen = set()
    with open_text(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            row = parse_row(line, lineno, path)
            if nfeat is None:
                nfeat = len(row.feature_text)
            elif len(row.feature_text) != nfeat:
                raise FormatError(f"expected {nfeat} features, found {len(row.feature_text)}", lineno, path)
            if row.key in seen:
                raise FormatError(f"duplicate phrase pair {row.key}", lineno, path)
            seen.add(row.key)
            rows.append(row)
    return PhraseTable(rows, nfeat or 0)


def write_table(table, path) -> None:
    with open_text(path, "w") as f:
        f.write(table.to_text())


def backoff_merge(pt_in: PhraseTable, pt_out: PhraseTable) -> PhraseTable:
    """In-domain rows plus out-of-domain rows for unseen source phrases."""
    if pt_in.feature_count != pt_out.feature_count:
        raise ArgumentError(f"feature counts differ: {pt_in.feature_count} vs {pt_out.feature_count}")
    known = pt_in.sources()
    rows = list(pt_in.rows) + [r for r in pt_out.rows if r.key[0] not in known]
    return PhraseTable(rows, pt_in.feature_count).sorted()


def indicator_merge(pt_in: PhraseTable, pt_out: PhraseTable) -> PhraseTable:
    """Union of pairs with three provenance features (in-only, out-only, both).

    The active indicator is e and the others 1, so after the decoder takes
    logs they read as 1 and 0. Shared pairs keep the in-domain row.
    """
    if pt_in.feature_count != pt_out.feature_count:
        raise ArgumentError(f"feature counts differ: {pt_in.feature_count} vs {pt_out.feature_count}")
    out_keys = {r.key for r in pt_out.rows}
    in_keys = {r.key for r in pt_in.rows}
    rows = []
    for r in pt_in.rows:
        flags = (ONE_STR, ONE_STR, E_STR) if r.key in out_keys else (E_STR, ONE_STR, ONE_STR)
        rows.append(r.with_features(r.feature_text + flags))
    for r in pt_out.rows:
        if r.key not in in_keys:
            rows.append(r.with_features(r.feature_text + (ONE_STR, E_STR, ONE_STR)))
    return PhraseTable(rows, pt_in.feature_count + 3).sorted()


# reordering tables

@dataclass(frozen=True)
class ReorderingRow:
    src: tuple[str, ...]
    tgt: tuple[str, ...]
    prob_text: tuple[str, ...]
    extra: tuple[str, ...] = ()

    @property
    def probs(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self.prob_text)

    @property
    def key(self):
        return (" ".join(self.src), " ".join(self.tgt))


def block_size(arity: int) -> int:
    """Orientation block size: 3 for msd-style models, else 2 (monotonicity)."""
    return 3 if arity % 3 == 0 else 2


def parse_reordering_row(line, lineno=None, path=None, sum_tol=SUM_TOL) -> ReorderingRow:
    line = line.rstrip("\n").rstrip("\r")
    fields = line.split(SEP)
    if len(fields) < 3:
        raise FormatError("expected src ||| tgt ||| probs", lineno, path)
    src, tgt = tuple(fields[0].split(" ")), tuple(fields[1].split(" "))
    if not fields[0] or not fields[1] or "" in src or "" in tgt:
        raise FormatError("empty or badly spaced phrase", lineno, path)
    toks = tuple(fields[2].split(" "))
    if "" in toks:
        raise FormatError("badly spaced probabilities", lineno, path)
    vals = _floats(toks, "probability", lineno, path)
    b = block_size(len(vals))
    if len(vals) % b:
        raise FormatError(f"{len(vals)} probabilities do not form orientation blocks", lineno, path)
    if sum_tol is not None:
        for k in range(0, len(vals), b):
            s = sum(vals[k:k + b])
            if abs(s - 1.0) > sum_tol:
                raise FormatError(f"orientation block sums to {s}", lineno, path)
    return ReorderingRow(src, tgt, toks, tuple(fields[3:]))


def serialize_reordering_row(row: ReorderingRow) -> str:
    return SEP.join([" ".join(row.src), " ".join(row.tgt), " ".join(row.prob_text), *row.extra])


@dataclass
class ReorderingTable:
    rows: list[ReorderingRow]
    arity: int

    def __len__(self):
        return len(self.rows)

    def to_text(self) -> str:
        return "".join(serialize_reordering_row(r) + "\n" for r in self.rows)


def read_reordering_table(path, sum_tol=SUM_TOL) -> ReorderingTable:
    rows = []
    arity = None
    seen = set()
    with open_text(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            row = parse_reordering_row(line, lineno, path, sum_tol)
            if arity is None:
                arity = len(row.prob_text)
            elif len(row.prob_text) != arity:
                raise FormatError(f"expected {arity} probabilities", lineno, path)
            if row.key in seen:
                raise FormatError(f"duplicate phrase pair {row.key}", lineno, path)
            seen.add(row.key)
            rows.append(row)
    return ReorderingTable(rows, arity or 0)


def reordering_merge(rt_in: ReorderingTable, rt_out: ReorderingTable) -> ReorderingTable:
    if rt_in.arity != rt_out.arity and rt_in.rows and rt_out.rows:
        raise ArgumentError(f"orientation models differ: {rt_in.arity} vs {rt_out.arity} probabilities")
    keys = {r.key for r in rt_in.rows}
    rows = list(rt_in.rows) + [r for r in rt_out.rows if r.key not in keys]
    rows.sort(key=lambda r: (r.key[0].encode("utf-8"), r.key[1].encode("utf-8")))
    return ReorderingTable(rows, rt_in.arity or rt_out.arity)


# bitexts

def _count_lines(path) -> int:
    with open_text(path) as f:
        return sum(1 for _ in f)


def concat_bitexts(pairs: Iterable[tuple[str, str]], out_src, out_tgt) -> int:
    """Concatenate aligned (source, target) file pairs in argument order.

    Returns the number of lines written per side.
    """
    pairs = list(pairs)
    if not pairs:
        raise ArgumentError("no input bitexts")
    for s, t in pairs:
        ns, nt = _count_lines(s), _count_lines(t)
        if ns != nt:
            raise ArgumentError(f"{s} has {ns} lines but {t} has {nt}")
    total = 0
    with open_text(out_src, "w") as fs, open_text(out_tgt, "w") as ft:
        for s, t in pairs:
            for dst, src_path in ((fs, s), (ft, t)):
                with open_text(src_path) as f:
                    for line in f:
                        dst.write(line if line.endswith("\n") else line + "\n")
            total += _count_lines(s)
    return total
