"""Cleaning and normalization of informal Arabic/English text.

A sentence is a sequence of whitespace-free, non-empty tokens. Every
function here is pure and returns new tuples.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigError, ArgumentError, FormatError

TATWEEL = "ـ"
ALEF = "ا"
ALEF_VARIANTS = "أإآ"  # hamza above, hamza below, madda
ALEF_MAKSURA = "ى"
YA = "ي"

EMO_PREFIX = "⟦EMO"
EMO_SUFFIX = "⟧"

DEFAULT_EMOTICONS = (
    r"[:;=]['\-^]?[)(\]\[dDpPoO3/\\|*@$]+",
    r"[)(][\-']?[:;=]",
    r"<3+",
    r"\^[_\-.]?\^",
    r"[\U0001F300-\U0001FAFF☀-➿]+",
)
DEFAULT_MARKUP = (r"<[^<>\s]+>", r"\[[^\[\]\s]+\]", r"\([a-z]+\)")

_ALEF_TABLE = str.maketrans({c: ALEF for c in ALEF_VARIANTS})
# runs of >= 3 identical Arabic letters
_ELONGATION = re.compile(r"([ء-ي])\1{2,}")

Sentence = tuple


def tokens(line: str) -> tuple[str, ...]:
    return tuple(line.split())


def normalize_arabic(s: Sequence[str], strip_tatweel=True, collapse_elongation=True,
                     normalize_alef_ya=True) -> tuple[str, ...]:
    out = []
    for tok in s:
        if strip_tatweel:
            tok = tok.replace(TATWEEL, "")
        if normalize_alef_ya:
            tok = tok.translate(_ALEF_TABLE)
            if tok.endswith(ALEF_MAKSURA):
                tok = tok[:-1] + YA
        if collapse_elongation:
            tok = _ELONGATION.sub(r"\1", tok)
        if tok:
            out.append(tok)
    return tuple(out)


@dataclass(frozen=True)
class EmoticonMap:
    placeholders: tuple[tuple[str, str], ...] = ()

    def __len__(self):
        return len(self.placeholders)

    def as_dict(self):
        return dict(self.placeholders)


def compile_patterns(patterns: Iterable[str]) -> list[re.Pattern]:
    compiled = []
    for p in patterns:
        try:
            compiled.append(re.compile(p))
        except re.error as exc:
            raise ConfigError(f"bad pattern {p!r}: {exc}") from None
    return compiled


def _emoticon_regex(patterns):
    compiled = compile_patterns(patterns)
    if not compiled:
        return None
    return re.compile("|".join(f"(?:{c.pattern})" for c in compiled))


def protect_emoticons(s: Sequence[str], patterns: Iterable[str] = DEFAULT_EMOTICONS):
    """Replace emoticons with placeholder strings ``⟦EMOn⟧``.

    Matching is done inside each token; patterns are tried in the given
    order at every position. Returns the rewritten sentence and the
    placeholder map needed by :func:`restore_emoticons`.
    """
    regex = _emoticon_regex(patterns)
    for tok in s:
        if EMO_PREFIX in tok:
            raise ArgumentError(f"input already contains the reserved sentinel {EMO_PREFIX!r}")
    if regex is None:
        return tuple(s), EmoticonMap()

    found = []

    def repl(m):
        ph = f"{EMO_PREFIX}{len(found)}{EMO_SUFFIX}"
        found.append((ph, m.group(0)))
        return ph

    out = tuple(regex.sub(repl, tok) for tok in s)
    return out, EmoticonMap(tuple(found))


def restore_emoticons(s: Sequence[str], emap: EmoticonMap) -> tuple[str, ...]:
    if not emap.placeholders:
        return tuple(s)
    table = emap.as_dict()
    pat = re.compile(re.escape(EMO_PREFIX) + r"\d+" + re.escape(EMO_SUFFIX))
    return tuple(pat.sub(lambda m: table.get(m.group(0), m.group(0)), tok) for tok in s)


def strip_markup(s: Sequence[str], tag_patterns: Iterable[str] = DEFAULT_MARKUP) -> tuple[str, ...]:
    compiled = compile_patterns(tag_patterns)
    return tuple(tok for tok in s if not any(c.fullmatch(tok) for c in compiled))


def select_intended(target_line: str, delimiter: str) -> str:
    """Keep only the first of several alternative translations on a line."""
    if not delimiter:
        raise ArgumentError("delimiter must be non-empty")
    return target_line.split(delimiter, 1)[0].strip()


@dataclass(frozen=True)
class Rule:
    pattern: str
    replacement: str
    at_start: bool = False
    at_end: bool = False

    @classmethod
    def parse(cls, spec: str, replacement: str) -> "Rule":
        at_start = spec.startswith("^")
        at_end = len(spec) > int(at_start) and spec.endswith("$")
        body = spec[int(at_start): len(spec) - int(at_end)]
        if not body:
            raise ConfigError(f"empty rewrite pattern {spec!r}")
        return cls(body, replacement, at_start, at_end)

    def apply(self, word: str) -> str:
        p = self.pattern
        if self.at_start and self.at_end:
            return self.replacement if word == p else word
        if self.at_start:
            return self.replacement + word[len(p):] if word.startswith(p) else word
        if self.at_end:
            return word[: len(word) - len(p)] + self.replacement if word.endswith(p) else word
        # single left-to-right pass, non-overlapping, no rescans of output
        return word.replace(p, self.replacement)


@dataclass(frozen=True)
class RewriteRuleSet:
    rules: tuple[Rule, ...] = ()

    def __len__(self):
        return len(self.rules)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "RewriteRuleSet":
        return cls(tuple(Rule.parse(p, r) for p, r in pairs))

    @classmethod
    def read(cls, path) -> "RewriteRuleSet":
        rules = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n").rstrip("\r")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise FormatError("expected pattern<TAB>replacement", lineno, path)
                try:
                    rules.append(Rule.parse(parts[0], parts[1]))
                except ConfigError as exc:
                    raise FormatError(str(exc), lineno, path) from None
        return cls(tuple(rules))


def apply_char_rules(word: str, rules: RewriteRuleSet) -> str:
    for rule in rules.rules:
        word = rule.apply(word)
    return word


def rewrite_sentence(s: Sequence[str], rules: RewriteRuleSet) -> tuple[str, ...]:
    out = (tok if EMO_PREFIX in tok else apply_char_rules(tok, rules) for tok in s)
    return tuple(tok for tok in out if tok)


def normalize_line(line: str, *, strip_tatweel=False, collapse_elongation=False,
                   normalize_alef_ya=False, emoticons=None, markup=None,
                   delimiter=None, rules=None) -> str:
    """Full cleaning pipeline for one line, used by the ``normalize`` command.

    Emoticons are shielded first and restored last so no later step can
    touch them.
    """
    if delimiter:
        line = select_intended(line, delimiter)
    s = tokens(line)
    emap = EmoticonMap()
    if emoticons:
        s, emap = protect_emoticons(s, emoticons)
    if markup:
        s = strip_markup(s, markup)
    if strip_tatweel or collapse_elongation or normalize_alef_ya:
        s = normalize_arabic(s, strip_tatweel, collapse_elongation, normalize_alef_ya)
    if rules is not None and len(rules):
        s = rewrite_sentence(s, rules)
    return " ".join(restore_emoticons(s, emap))
