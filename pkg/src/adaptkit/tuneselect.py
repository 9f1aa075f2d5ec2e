"""Sentence-length KDE and length-based filtering of tuning bitexts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

DEFAULT_MIN_LEN = 4
DEFAULT_MAX_LEN = 25
DEFAULT_BANDWIDTH = 0.3
DEFAULT_GRID = 512

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class LengthDensity:
    x: np.ndarray
    density: np.ndarray
    bandwidth: float

    @property
    def sample_points(self):
        return list(zip(self.x.tolist(), self.density.tolist()))

    def integral(self) -> float:
        return float(_trapezoid(self.density, self.x))

    def to_csv(self) -> str:
        lines = ["length,density"]
        lines += [f"{x!r},{d!r}" for x, d in zip(self.x.tolist(), self.density.tolist())]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LengthFilterSpec:
    min_len: int = DEFAULT_MIN_LEN
    max_len: int = DEFAULT_MAX_LEN

    def __post_init__(self):
        if not 1 <= self.min_len <= self.max_len:
            raise ArgumentError(f"need 1 <= min_len <= max_len, got ({self.min_len}, {self.max_len})")

    def accepts(self, n: int) -> bool:
        return self.min_len <= n <= self.max_len


def kde_lengths(lengths, bandwidth: float = DEFAULT_BANDWIDTH, grid: int = DEFAULT_GRID) -> LengthDensity:
    """Gaussian KDE on ``grid`` points over ``[min - 3bw, max + 3bw]``."""
    if bandwidth <= 0:
        raise ArgumentError(f"bandwidth must be positive, got {bandwidth}")
    if grid < 2:
        raise ArgumentError("grid needs at least 2 points")
    data = np.asarray(list(lengths), dtype=np.float64)
    if data.size == 0:
        raise ArgumentError("no lengths given")
    x = np.linspace(data.min() - 3 * bandwidth, data.max() + 3 * bandwidth, grid)
    # chunk over samples to bound memory on large corpora
    dens = np.zeros(grid)
    for start in range(0, data.size, 4096):
        u = (x[:, None] - data[None, start:start + 4096]) / bandwidth
        dens += np.exp(-0.5 * u * u).sum(axis=1)
    dens *= _INV_SQRT_2PI / (data.size * bandwidth)
    return LengthDensity(x, dens, float(bandwidth))


def filter_pairs(bitext, spec: LengthFilterSpec = LengthFilterSpec()):
    """Keep pairs whose source and target lengths both lie in the bounds."""
    out = []
    for pair in bitext:
        if len(pair) != 2:
            raise ArgumentError("bitext entries must be (source, target) pairs")
        src, tgt = pair
        if spec.accepts(len(src)) and spec.accepts(len(tgt)):
            out.append((src, tgt))
    return out


def read_bitext(src_path, tgt_path):
    with open(src_path, encoding="utf-8") as fs, open(tgt_path, encoding="utf-8") as ft:
        src = [tuple(line.split()) for line in fs]
        tgt = [tuple(line.split()) for line in ft]
    if len(src) != len(tgt):
        raise ArgumentError(f"misaligned bitext: {len(src)} source vs {len(tgt)} target lines")
    return list(zip(src, tgt))
