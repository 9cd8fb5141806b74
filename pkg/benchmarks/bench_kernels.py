"""Time the numba and pure-numpy kernel paths side by side.

    python3 benchmarks/bench_kernels.py [--pairs 2000] [--replicates 100000] [--repeat 5]

Both implementations live in dxconcord._kernels regardless of the
DXCONCORD_DISABLE_NUMBA flag; the flag only picks which one the package
dispatches to. With the flag set, the "numba" column times plain Python.
"""

import argparse
import random
import time

import numpy as np

from dxconcord import _kernels as K


def _pairs(n, seed):
    rng = random.Random(seed)
    words = ("psoriasis", "eczema", "tinea", "lichen", "planus", "nummular", "dermatitis", "basal", "cell", "carcinoma")
    out = []
    for _ in range(n):
        a = " ".join(rng.choice(words) for _ in range(rng.randint(1, 3)))
        b = " ".join(rng.choice(words) for _ in range(rng.randint(1, 3)))
        out.append((K.encode(a), K.encode(b)))
    return out


def _best(fn, repeat):
    fn()  # warm-up, includes JIT compile
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--replicates", type=int, default=100_000)
    ap.add_argument("--n", type=int, default=21)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    pairs = _pairs(args.pairs, args.seed)
    states = np.array([K.stream_seed(args.seed, r) for r in range(args.replicates)], dtype=np.uint64)

    cases = [
        ("ratcliff_obershelp", lambda f: lambda: [f(a, b) for a, b in pairs], K._ro_matches_nb, K._ro_matches_np),
        ("levenshtein", lambda f: lambda: [f(a, b) for a, b in pairs], K._levenshtein_nb, K._levenshtein_np),
        ("bernoulli_counts", lambda f: lambda: f(states, args.n, 0.5), K._bernoulli_counts_nb, K._bernoulli_counts_np),
    ]

    print(f"active backend: {K.BACKEND}")
    print(f"{'kernel':<20} {'numba (s)':>11} {'numpy (s)':>11} {'speedup':>9}")
    for name, wrap, nb, npf in cases:
        r_nb, r_np = wrap(nb)(), wrap(npf)()
        same = np.array_equal(np.asarray(r_nb), np.asarray(r_np))
        t_nb = _best(wrap(nb), args.repeat)
        t_np = _best(wrap(npf), args.repeat)
        flag = "" if same else "  RESULTS DIFFER"
        print(f"{name:<20} {t_nb:>11.4f} {t_np:>11.4f} {t_np / t_nb:>8.1f}x{flag}")


if __name__ == "__main__":
    main()
