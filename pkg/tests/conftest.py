import logging
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from adaptkit import kernels  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(autouse=True)
def _quiet_discount_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="adaptkit.ngramlm")


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    return request.param


def zipf_corpus(seed, n_sent, vocab, max_len=12, a=1.1, prefix="w"):
    """Seeded Zipfian toy corpus, list of token tuples."""
    rng = np.random.default_rng(seed)
    p = 1.0 / np.arange(1, vocab + 1) ** a
    p /= p.sum()
    out = []
    for _ in range(n_sent):
        n = int(rng.integers(1, max_len + 1))
        out.append(tuple(f"{prefix}{i}" for i in rng.choice(vocab, size=n, p=p)))
    return out


# three fixed toy corpora used by the KN oracle checks
TOY_CORPORA = {
    "hand": [tuple("a b a b a c".split())],
    "small": [tuple(s.split()) for s in
              ["a b a b a c", "a b c", "c c a b", "b a", "a c b a c", "the cat sat",
               "the cat ran", "a cat sat on the mat", "the mat", "b b b a"]],
    "zipf": zipf_corpus(7, 100, 25),
}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
