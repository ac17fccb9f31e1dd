"""Time the compiled and pure-Python kernel backends on representative inputs.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from subnyq_amr._kernels import _pykernels

try:
    from subnyq_amr._kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _cases(rng: np.random.Generator) -> dict[str, tuple]:
    L = 8192
    f = rng.standard_normal(L) + 1j * rng.standard_normal(L)
    w = np.full(L, 1.0 / 10)
    mags = np.abs(f)
    cand = np.flatnonzero(mags > np.quantile(mags, 0.9))
    X = rng.standard_normal((200, 60))
    y = np.where(rng.random(200) < 0.5, 1.0, -1.0)
    X[y > 0] += 0.8
    sq = np.sum(X * X, axis=1)
    K = np.exp(-(sq[:, None] + sq[None, :] - 2 * X @ X.T) / (2 * 60.0))
    return {
        "neighbor_sum L=8192 l=5": ("neighbor_sum", (f, 5)),
        "smooth_apply L=8192 l=5": ("smooth_apply", (f, w, 5)),
        "smooth_adjoint L=8192 l=5": ("smooth_adjoint", (f, w, 5)),
        "soft_threshold L=8192": ("soft_threshold", (f, 0.5)),
        "project_unit_disc L=8192": ("project_unit_disc", (f,)),
        "suppress_nonmax 820 cands": ("suppress_nonmax", (mags, cand, 3, True)),
        "smo_solve n=200": ("smo_solve", (K, y, 10.0, 1e-3, 100000)),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    print(f"{'kernel':32s}" + "".join(f"{b:>14s}" for b in backends) + "   speedup")
    for label, (name, args_) in _cases(rng).items():
        times = {}
        for b, mod in backends.items():
            fn = getattr(mod, name)
            n = 3 if name == "smo_solve" else 50
            times[b] = min(timeit.repeat(lambda: fn(*args_), number=n, repeat=args.repeat)) / n
        line = f"{label:32s}" + "".join(f"{times[b] * 1e6:12.1f}us" for b in backends)
        if "cython" in times:
            line += f"   {times['python'] / times['cython']:6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
