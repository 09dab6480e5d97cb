"""Kneading invariants and long-term classification of binary streams."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .integrate import Status, SymbolStream

__all__ = [
    "Mode",
    "KneadingConfig",
    "LongTermClass",
    "kneading_invariant",
    "kneading_weights",
    "one_sided_invariant",
    "detect_period",
    "lz76_complexity",
    "normalized_lz",
    "classify_long_term",
]


class Mode(enum.IntEnum):
    FULL = 0
    ONE_SIDED = 1
    DCP = 2

    @classmethod
    def parse(cls, name) -> "Mode":
        if isinstance(name, Mode):
            return name
        key = str(name).lower().replace("_", "-")
        table = {"full": cls.FULL, "one-sided": cls.ONE_SIDED,
                 "onesided": cls.ONE_SIDED, "dcp": cls.DCP}
        try:
            return table[key]
        except KeyError:
            raise ValueError(f"unknown mode {name!r}") from None


@dataclass(frozen=True)
class KneadingConfig:
    """Window ``[i, j]`` (1-based, inclusive) into the symbol stream."""
    i: int = 1
    j: int = 10
    q: float = 0.5
    mode: Mode = Mode.FULL

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie in (0, 1)")
        if self.i < 1 or self.j < self.i:
            raise ValueError(f"invalid window [{self.i}, {self.j}]")

    @classmethod
    def dcp(cls, i: int = 601, j: int = 1000) -> "KneadingConfig":
        return cls(i=i, j=j, mode=Mode.DCP)

    @property
    def length(self) -> int:
        return self.j - self.i + 1


def _bits(seq) -> np.ndarray:
    if isinstance(seq, str):
        return np.frombuffer(seq.encode(), dtype=np.uint8) - ord("0")
    if isinstance(seq, SymbolStream):
        return seq.symbols
    return np.asarray(seq, dtype=np.uint8)


def kneading_weights(i: int, j: int, q: float = 0.5) -> np.ndarray:
    """Weights q**(j - n + 1) for n = i..j."""
    n = np.arange(i, j + 1)
    return q ** (j - n + 1).astype(float)


def kneading_invariant(seq, i: int = 1, j: int | None = None, q: float = 0.5,
                       full_output: bool = False):
    """K = sum_{n=i}^{j} kappa_n q^(j-n+1).

    A sequence that ends before ``j`` contributes zeros for the missing
    symbols; ``full_output=True`` returns ``(K, truncated)``.
    """
    bits = _bits(seq)
    if j is None:
        j = len(bits)
    if len(bits) < i:
        raise ValueError("window starts past sequence end")
    end = min(j, len(bits))
    window = bits[i - 1:end].astype(float)
    value = float(window @ kneading_weights(i, j, q)[: end - i + 1])
    if full_output:
        return value, end < j
    return value


def one_sided_invariant(seq, r: int) -> float:
    """n / r where n counts the leading 1s (capped at r)."""
    bits = _bits(seq)
    if len(bits) == 0:
        raise ValueError("empty sequence")
    if r < 1:
        raise ValueError("r must be positive")
    head = bits[:r]
    zeros = np.flatnonzero(head == 0)
    n = int(zeros[0]) if len(zeros) else len(head)
    return n / r


def detect_period(window) -> int | None:
    """Smallest p <= len/2 with window[k] == window[k + p] for all k."""
    bits = _bits(window)
    n = len(bits)
    for p in range(1, n // 2 + 1):
        if np.array_equal(bits[p:], bits[:-p]):
            return p
    return None


def lz76_complexity(window) -> int:
    """Lempel-Ziv (1976) production count, Kaspar-Schuster scan."""
    s = _bits(window).tobytes()
    n = len(s)
    if n == 0:
        raise ValueError("empty window")
    if n == 1:
        return 1
    c = 1
    l = 1      # start of the current phrase
    i = 0      # candidate start in history
    k = 1      # length of current match
    k_max = 1
    while True:
        if s[i + k - 1] == s[l + k - 1]:
            k += 1
            if l + k > n:
                c += 1
                break
        else:
            k_max = max(k, k_max)
            i += 1
            if i == l:
                c += 1
                l += k_max
                if l + 1 > n:
                    break
                i = 0
                k = 1
                k_max = 1
            else:
                k = 1
    return c


def normalized_lz(c: int, n: int) -> float:
    return c * math.log2(n) / n if n > 1 else float(c)


@dataclass(frozen=True)
class LongTermClass:
    """Outcome of a long-window analysis.

    ``kind`` is one of ``"periodic"``, ``"chaotic"``, ``"escaped"``.
    ``short`` marks streams that ended before the window was filled.
    """
    kind: str
    period: int | None = None
    lz_complexity: int | None = None
    normalized: float | None = None
    short: bool = False

    @classmethod
    def periodic(cls, p: int, short: bool = False):
        return cls("periodic", period=p, short=short)

    @classmethod
    def chaotic(cls, c: int, n: int, short: bool = False):
        return cls("chaotic", lz_complexity=c, normalized=normalized_lz(c, n), short=short)

    @classmethod
    def escaped(cls):
        return cls("escaped")


def classify_long_term(stream: SymbolStream, cfg: KneadingConfig | None = None) -> LongTermClass:
    cfg = cfg or KneadingConfig.dcp()
    if cfg.mode is not Mode.DCP:
        raise ValueError("classify_long_term needs a DCP-mode config")
    if stream.status is Status.ESCAPED:
        return LongTermClass.escaped()
    bits = stream.symbols
    if len(bits) < cfg.i:
        # nothing inside the window: report what little there is as chaos
        c = lz76_complexity(bits) if len(bits) else 1
        return LongTermClass.chaotic(c, max(len(bits), 1), short=True)
    window = bits[cfg.i - 1:cfg.j]
    short = len(window) < cfg.length
    if len(window) >= 2:
        p = detect_period(window)
        if p is not None:
            return LongTermClass.periodic(p, short=short)
    return LongTermClass.chaotic(lz76_complexity(window), len(window), short=short)
