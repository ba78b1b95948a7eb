"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from ctrlcap import _kernels_py

try:
    from ctrlcap import _kernels as _compiled
except ImportError:
    _compiled = None


def waterfill_case(rng, modes=24, dim=4):
    a = rng.standard_normal((modes, dim)) * rng.uniform(0.1, 3.0, (modes, 1))
    half = modes // 2
    seg = np.r_[np.zeros(half, np.int64), np.ones(modes - half, np.int64)]
    budgets = np.array([1.0, 2.0])
    x0 = np.r_[np.full(half, 1.0 / half), np.full(modes - half, 2.0 / (modes - half))]
    return a, seg, budgets, x0


def em_case(rng, steps=512, paths=2000, n=3):
    Phi = np.eye(n) + 0.002 * rng.standard_normal((n, n))
    return rng.standard_normal((paths, n)), Phi, rng.standard_normal((steps, paths, n))


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    a, seg, budgets, x0 = waterfill_case(rng)
    x_init, Phi, drive = em_case(rng)
    jobs = {
        "waterfill (24 modes, dim 4)": lambda k: k.waterfill_iterate(a, seg, budgets, x0, 1e-12, 10_000),
        "euler-maruyama (512 steps, 2000 paths)": lambda k: k.em_final_state(x_init, Phi, drive),
    }
    backends = {"python": _kernels_py}
    if _compiled is not None:
        backends["cython"] = _compiled
    else:
        print("compiled extension not built; timing the Python fallback only")
    print(f"{'kernel':42s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup")
    for name, job in jobs.items():
        times = {b: bench(lambda k=k: job(k), args.repeat) for b, k in backends.items()}
        row = f"{name:42s}" + "".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
