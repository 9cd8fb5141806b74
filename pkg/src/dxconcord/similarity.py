"""Label normalization and the bounded string similarity used for matching."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from functools import lru_cache

from . import _kernels
from .errors import ConfigError, EmptyLabel

RATCLIFF_OBERSHELP = "ratcliff_obershelp"
LEVENSHTEIN = "levenshtein_normalized"
ALGORITHMS = (RATCLIFF_OBERSHELP, LEVENSHTEIN)

DEFAULT_TAU = 0.60


@dataclass(frozen=True)
class SimilarityConfig:
    tau: float = DEFAULT_TAU
    algorithm: str = RATCLIFF_OBERSHELP

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must lie in [0, 1], got {self.tau}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown similarity algorithm {self.algorithm!r}")


def normalize_label(raw: str) -> str:
    """Canonical form of a diagnosis string.

    NFC-composed, lowercased, trimmed, with internal whitespace runs collapsed
    to one space. Raises ``EmptyLabel`` for blank input.
    """
    if not isinstance(raw, str):
        raise EmptyLabel(f"diagnosis must be a string, got {type(raw).__name__}")
    label = " ".join(unicodedata.normalize("NFC", raw).lower().split())
    if not label:
        raise EmptyLabel("diagnosis label is empty after normalization")
    return label


def matched_characters(a: str, b: str) -> int:
    """Ratcliff-Obershelp matched character count for the ordered pair ``(a, b)``.

    Longest common block first (earliest in ``a``, then earliest in ``b`` on
    ties), then recursion on the unmatched left and right remainders.
    """
    return int(_kernels.ro_matches(_kernels.encode(a), _kernels.encode(b)))


def ratcliff_obershelp(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    # The leftmost-longest tie-break makes the raw count order-dependent
    # (e.g. "ab"/"bacb"); taking the better order keeps S symmetric.
    m = max(matched_characters(a, b), matched_characters(b, a))
    return 2.0 * m / (len(a) + len(b))


def levenshtein_similarity(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    d = int(_kernels.levenshtein(_kernels.encode(a), _kernels.encode(b)))
    return 1.0 - d / longest


@lru_cache(maxsize=1 << 16)
def _cached(a: str, b: str, algorithm: str) -> float:
    if a == b:
        return 1.0
    if algorithm == RATCLIFF_OBERSHELP:
        return ratcliff_obershelp(a, b)
    if algorithm == LEVENSHTEIN:
        return levenshtein_similarity(a, b)
    raise ConfigError(f"unknown similarity algorithm {algorithm!r}")


def similarity(a: str, b: str, algorithm: str = RATCLIFF_OBERSHELP) -> float:
    """Similarity of two normalized labels in [0, 1]; symmetric, 1 on equality."""
    if b < a:
        a, b = b, a
    return _cached(a, b, algorithm)


def is_similar(a: str, b: str, cfg: SimilarityConfig = SimilarityConfig()) -> bool:
    return similarity(a, b, cfg.algorithm) >= cfg.tau
