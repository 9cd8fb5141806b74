"""Hot string and sampling kernels.

Every kernel has two implementations: a numba ``@njit`` version and a pure
numpy version. The numba path is used when numba imports cleanly and
``DXCONCORD_DISABLE_NUMBA`` is unset (or ``0``). Both paths return identical
results; ``tests/test_kernels.py`` pins that.

Strings enter the kernels as ``uint32`` code-point arrays (see ``encode``).
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("DXCONCORD_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("numba disabled by DXCONCORD_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


BACKEND = "numba" if HAVE_NUMBA else "numpy"

# xorshift64* multiplier and splitmix64 constants
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_XS_MULT = 0x2545F4914F6CDD1D
_MASK64 = (1 << 64) - 1


def encode(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32)


# ---------------------------------------------------------------------------
# Ratcliff-Obershelp matched-character count
# ---------------------------------------------------------------------------


@njit(cache=True)
def _longest_block_nb(a, alo, ahi, b, blo, bhi):
    # DP over match end positions; strict '>' keeps the earliest (i, j).
    best_i = alo
    best_j = blo
    best_k = 0
    width = bhi - blo
    prev = np.zeros(width + 1, dtype=np.int64)
    cur = np.zeros(width + 1, dtype=np.int64)
    for i in range(alo, ahi):
        ai = a[i]
        for jj in range(width):
            if ai == b[blo + jj]:
                k = prev[jj] + 1
                cur[jj + 1] = k
                if k > best_k:
                    best_k = k
                    best_i = i - k + 1
                    best_j = blo + jj - k + 1
            else:
                cur[jj + 1] = 0
        for jj in range(width + 1):
            prev[jj] = cur[jj]
    return best_i, best_j, best_k


@njit(cache=True)
def _ro_matches_nb(a, b):
    na = a.shape[0]
    nb = b.shape[0]
    stack = np.empty((na + nb + 2, 4), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = na
    stack[0, 2] = 0
    stack[0, 3] = nb
    top = 1
    total = 0
    while top > 0:
        top -= 1
        alo = stack[top, 0]
        ahi = stack[top, 1]
        blo = stack[top, 2]
        bhi = stack[top, 3]
        if alo >= ahi or blo >= bhi:
            continue
        i, j, k = _longest_block_nb(a, alo, ahi, b, blo, bhi)
        if k == 0:
            continue
        total += k
        stack[top, 0] = alo
        stack[top, 1] = i
        stack[top, 2] = blo
        stack[top, 3] = j
        top += 1
        stack[top, 0] = i + k
        stack[top, 1] = ahi
        stack[top, 2] = j + k
        stack[top, 3] = bhi
        top += 1
    return total


def _longest_block_np(a, alo, ahi, b, blo, bhi):
    aa = a[alo:ahi]
    bb = b[blo:bhi]
    eq = aa[:, None] == bb[None, :]
    run = np.zeros((len(aa) + 1, len(bb) + 1), dtype=np.int64)
    for i in range(len(aa)):
        run[i + 1, 1:] = np.where(eq[i], run[i, :-1] + 1, 0)
    # row-major argmax returns the earliest end row, then earliest end column
    flat = int(np.argmax(run[1:, 1:]))
    ei, ej = divmod(flat, len(bb))
    k = int(run[ei + 1, ej + 1])
    if k == 0:
        return alo, blo, 0
    return alo + ei - k + 1, blo + ej - k + 1, k


def _ro_matches_np(a, b):
    total = 0
    stack = [(0, len(a), 0, len(b))]
    while stack:
        alo, ahi, blo, bhi = stack.pop()
        if alo >= ahi or blo >= bhi:
            continue
        i, j, k = _longest_block_np(a, alo, ahi, b, blo, bhi)
        if k == 0:
            continue
        total += k
        stack.append((alo, i, blo, j))
        stack.append((i + k, ahi, j + k, bhi))
    return total


@njit(cache=True)
def _ro_matches_batch_nb(codes_a, lens_a, codes_b, lens_b):
    n = lens_a.shape[0]
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        out[r] = _ro_matches_nb(codes_a[r, : lens_a[r]], codes_b[r, : lens_b[r]])
    return out


def _ro_matches_batch_np(codes_a, lens_a, codes_b, lens_b):
    return np.array(
        [_ro_matches_np(codes_a[r, : lens_a[r]], codes_b[r, : lens_b[r]]) for r in range(len(lens_a))],
        dtype=np.int64,
    )


# ---------------------------------------------------------------------------
# Levenshtein distance
# ---------------------------------------------------------------------------


@njit(cache=True)
def _levenshtein_nb(a, b):
    na = a.shape[0]
    nb = b.shape[0]
    prev = np.arange(nb + 1).astype(np.int64)
    cur = np.empty(nb + 1, dtype=np.int64)
    for i in range(1, na + 1):
        cur[0] = i
        for j in range(1, nb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            v = prev[j - 1] + cost
            if prev[j] + 1 < v:
                v = prev[j] + 1
            if cur[j - 1] + 1 < v:
                v = cur[j - 1] + 1
            cur[j] = v
        for j in range(nb + 1):
            prev[j] = cur[j]
    return prev[nb]


def _levenshtein_np(a, b):
    nb = len(b)
    prev = np.arange(nb + 1, dtype=np.int64)
    idx = np.arange(nb + 1, dtype=np.int64)
    for i in range(1, len(a) + 1):
        cand = np.empty(nb + 1, dtype=np.int64)
        cand[0] = i
        cand[1:] = np.minimum(prev[:-1] + (a[i - 1] != b), prev[1:] + 1)
        # insertion chain: cur[j] = min_k<=j cand[k] + (j - k)
        prev = np.minimum.accumulate(cand - idx) + idx
    return int(prev[nb])


# ---------------------------------------------------------------------------
# xorshift64* streams for Bernoulli sampling
# ---------------------------------------------------------------------------


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return state, z ^ (z >> 31)


def stream_seed(seed: int, index: int) -> int:
    """Initial xorshift64* state for stream ``index`` of ``seed``; never zero."""
    _, out = splitmix64((seed + index * _GOLDEN) & _MASK64)
    return out or _GOLDEN


@njit(cache=True)
def _bernoulli_counts_nb(states, n, p):
    reps = states.shape[0]
    out = np.empty(reps, dtype=np.int64)
    mult = np.uint64(_XS_MULT)
    s12 = np.uint64(12)
    s25 = np.uint64(25)
    s27 = np.uint64(27)
    s11 = np.uint64(11)
    scale = 1.0 / 9007199254740992.0
    for r in range(reps):
        x = states[r]
        c = 0
        for _ in range(n):
            x ^= x >> s12
            x ^= x << s25
            x ^= x >> s27
            u = ((x * mult) >> s11) * scale
            if u < p:
                c += 1
        out[r] = c
    return out


def _bernoulli_counts_np(states, n, p):
    x = states.copy()
    counts = np.zeros(len(x), dtype=np.int64)
    mult = np.uint64(_XS_MULT)
    with np.errstate(over="ignore"):
        for _ in range(n):
            x ^= x >> np.uint64(12)
            x ^= x << np.uint64(25)
            x ^= x >> np.uint64(27)
            u = ((x * mult) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
            counts += u < p
    return counts


if HAVE_NUMBA:
    ro_matches = _ro_matches_nb
    ro_matches_batch = _ro_matches_batch_nb
    levenshtein = _levenshtein_nb
    bernoulli_counts = _bernoulli_counts_nb
else:
    ro_matches = _ro_matches_np
    ro_matches_batch = _ro_matches_batch_np
    levenshtein = _levenshtein_np
    bernoulli_counts = _bernoulli_counts_np


def bernoulli_count_streams(seed: int, replicates: int, n: int, p: float) -> np.ndarray:
    """Success counts of ``n`` Bernoulli(p) trials for each of ``replicates`` streams."""
    states = np.array([stream_seed(seed, r) for r in range(replicates)], dtype=np.uint64)
    return bernoulli_counts(states, int(n), float(p))
