"""Seeded synthetic R0/R1 cohorts and confidence-interval coverage studies.

Randomness comes from xorshift64* (Vigna 2016) seeded through splitmix64, so
cohorts are reproducible from the seed alone and independent of Python's
``random`` module:

    state  <- splitmix64 output #1 for the seed (zero replaced by the golden ratio)
    x ^= x >> 12; x ^= x << 25; x ^= x >> 27
    output = (x * 0x2545F4914F6CDD1D) mod 2**64
    uniform = (output >> 11) * 2**-53
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, VocabTooSmall
from .report_model import (
    CaseRecord,
    DiagnosticReport,
    Slot,
    Source,
    add,
    apply_actions,
    refine,
    remove,
    validate,
)
from .similarity import normalize_label, similarity
from .statistics import DegenerateIntervalWarning, Proportion, confidence_interval

_MASK64 = (1 << 64) - 1

DEFAULT_VOCAB = (
    "actinic keratosis",
    "alopecia areata",
    "atopic dermatitis",
    "basal cell carcinoma",
    "bullous pemphigoid",
    "cellulitis",
    "contact dermatitis",
    "dermatofibroma",
    "erysipelas",
    "folliculitis",
    "granuloma annulare",
    "herpes zoster",
    "hidradenitis suppurativa",
    "impetigo",
    "keratoacanthoma",
    "lichen planus",
    "lupus erythematosus",
    "melanocytic nevus",
    "melanoma",
    "molluscum contagiosum",
    "nummular eczema",
    "pemphigus vulgaris",
    "pityriasis rosea",
    "plaque psoriasis",
    "prurigo nodularis",
    "pyogenic granuloma",
    "sarcoidosis",
    "seborrheic dermatitis",
    "seborrheic keratosis",
    "squamous cell carcinoma",
    "tinea corporis",
    "tinea versicolor",
    "urticaria",
    "vitiligo",
    "xanthelasma",
)

DEFAULT_MODIFIERS = ("mild", "early", "acute", "chronic", "nodular", "atypical", "recurrent", "localized", "generalized")


class XorShift64Star:
    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self.state = _kernels.stream_seed(self.seed, 0)

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * _kernels._XS_MULT) & _MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def choice(self, seq):
        return seq[self.randbelow(len(seq))]

    def sample(self, seq, k: int) -> list:
        pool = list(seq)
        if k > len(pool):
            raise ValueError("sample larger than population")
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


@dataclass(frozen=True)
class PerturbationConfig:
    seed: int = 0
    n_cases: int = 21
    vocab: tuple = DEFAULT_VOCAB
    p_exact: float = 0.70
    p_lexical: float = 0.05
    p_reprioritize: float = 0.20
    p_replace: float = 0.05
    p_remove: float = 0.15
    p_add: float = 0.15
    n_differentials: int = 3
    n_physicians: int = 2
    # Labels used for replacements and additions; defaults to ``vocab``.
    replacement_vocab: tuple | None = None
    modifiers: tuple = DEFAULT_MODIFIERS
    case_prefix: str = "S"

    def __post_init__(self):
        for name in ("vocab", "replacement_vocab", "modifiers"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(normalize_label(x) for x in v))
        if not 0 <= self.seed <= _MASK64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.n_cases < 1:
            raise ConfigError("n_cases must be positive")
        probs = (self.p_exact, self.p_lexical, self.p_reprioritize, self.p_replace, self.p_remove, self.p_add)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ConfigError("probabilities must lie in [0, 1]")
        total = self.p_exact + self.p_lexical + self.p_reprioritize + self.p_replace
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"primary transformation probabilities sum to {total}, not 1")
        if len(set(self.vocab)) != len(self.vocab):
            raise ConfigError("vocab labels must be distinct after normalization")
        if len(self.vocab) < self.n_differentials + 1:
            raise VocabTooSmall(f"need at least {self.n_differentials + 1} vocab labels, got {len(self.vocab)}")
        if self.n_physicians < 1:
            raise ConfigError("n_physicians must be positive")
        if self.p_lexical > 0:
            short = [v for v in self.vocab if not self._fitting_modifiers(v)]
            if short:
                raise ConfigError(f"no modifier is short enough for a lexical variant of {short[0]!r}")

    def _fitting_modifiers(self, base: str) -> list[str]:
        return [m for m in self.modifiers if 3 * (len(m) + 1) <= 2 * len(base)]

    @property
    def pool(self) -> tuple:
        return self.replacement_vocab if self.replacement_vocab is not None else self.vocab


def _draw_new(rng: XorShift64Star, pool, exclude) -> str:
    candidates = [v for v in pool if v not in exclude]
    if not candidates:
        raise VocabTooSmall("vocabulary exhausted while drawing a new label")
    return rng.choice(candidates)


def _lexical_variant(rng: XorShift64Star, cfg: PerturbationConfig, base: str, exclude) -> str:
    mods = cfg._fitting_modifiers(base)
    for _ in range(32):
        mod = rng.choice(mods)
        variant = f"{mod} {base}" if rng.randbelow(2) == 0 else f"{base} {mod}"
        if variant not in exclude and similarity(variant, base) >= 0.60:
            return variant
    raise ConfigError(f"could not build a lexical variant of {base!r}")


def _one_case(rng: XorShift64Star, cfg: PerturbationConfig, case_id: str) -> CaseRecord:
    labels = rng.sample(cfg.vocab, cfg.n_differentials + 1)
    primary, diffs = labels[0], labels[1:]
    r0 = DiagnosticReport.from_raw(primary, diffs, Source.AI_SNAPSHOT)
    current = set(labels)
    actions = []

    u = rng.random()
    if u < cfg.p_exact:
        actions.append(validate())
    elif u < cfg.p_exact + cfg.p_lexical:
        new = _lexical_variant(rng, cfg, primary, current)
        actions.append(refine(primary, new, Slot.PRIMARY))
        current.add(new)
    elif u < cfg.p_exact + cfg.p_lexical + cfg.p_reprioritize:
        promoted = rng.choice(diffs)
        actions += [remove(promoted), refine(primary, promoted, Slot.PRIMARY), add(primary)]
        diffs = [d for d in diffs if d != promoted] + [primary]
    else:
        new = _draw_new(rng, cfg.pool, current)
        actions.append(refine(primary, new, Slot.PRIMARY))
        current.add(new)

    for d in list(diffs):
        if rng.random() < cfg.p_remove:
            actions.append(remove(d))
    for _ in range(cfg.n_differentials):
        if rng.random() < cfg.p_add:
            new = _draw_new(rng, cfg.pool, current)
            actions.append(add(new))
            current.add(new)

    physician = f"physician-{rng.randbelow(cfg.n_physicians) + 1}"
    r1 = apply_actions(r0, actions)
    return CaseRecord(case_id, physician, r0, r1, tuple(actions))


def generate_cohort(cfg: PerturbationConfig) -> list[CaseRecord]:
    """Deterministic cohort for ``cfg``; every R1 is the replay of its action log."""
    rng = XorShift64Star(cfg.seed)
    width = max(4, len(str(cfg.n_cases)))
    return [_one_case(rng, cfg, f"{cfg.case_prefix}{i:0{width}d}") for i in range(1, cfg.n_cases + 1)]


@dataclass(frozen=True)
class CoverageResult:
    p_true: float
    n: int
    replicates: int
    method: str
    level: float
    covered: int
    counts: np.ndarray = field(repr=False, compare=False)

    @property
    def coverage(self) -> float:
        return self.covered / self.replicates

    @property
    def standard_error(self) -> float:
        c = self.coverage
        return math.sqrt(c * (1.0 - c) / self.replicates)


def coverage_study(
    p_true: float, n: int, replicates: int = 100_000, method: str = "wilson", level: float = 0.95, seed: int = 0
) -> CoverageResult:
    """Empirical coverage of ``method`` intervals for Binomial(n, p_true) data."""
    if not 0.0 < p_true < 1.0:
        raise ConfigError("p_true must lie strictly between 0 and 1")
    if replicates < 1000:
        raise ConfigError("coverage studies need at least 1000 replicates")
    counts = _kernels.bernoulli_count_streams(seed, replicates, n, p_true)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateIntervalWarning)
        hits = np.array([confidence_interval(Proportion(k, n), method, level).contains(p_true) for k in range(n + 1)])
    return CoverageResult(p_true, n, replicates, method, level, int(hits[counts].sum()), counts)
