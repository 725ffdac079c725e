"""Benchmark the compiled contraction kernels against the NumPy fallback.

Run as a script::

    python3 benchmarks/bench_kernels.py [--l-max 6] [--n-points 512] [--repeat 7]

Times the two hot contractions used by the flux module: the per-direction
quadratic form (mode table x pair matrix x mode table) and the fully
summed weighted pair contraction behind the exact total-flux route.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from nearfield._kernels import HAVE_COMPILED, fallback

try:
    from nearfield._kernels import _quadform
except ImportError:
    _quadform = None


def _best_of(repeat: int, func, *args) -> float:
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - start)
    return best


def run(l_max: int, n_points: int, repeat: int) -> None:
    n_modes = (l_max + 1) ** 2
    rng = np.random.default_rng(0)
    pair = rng.normal(size=(n_modes, n_modes)) + 1j * rng.normal(size=(n_modes, n_modes))
    pair = np.ascontiguousarray(pair + pair.conj().T)
    coeff = np.ascontiguousarray(rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes))
    gram = np.ascontiguousarray(np.eye(n_modes, dtype=complex))

    def table_for(points: int):
        return np.ascontiguousarray(
            rng.normal(size=(n_modes, points)) + 1j * rng.normal(size=(n_modes, points))
        )

    print(f"modes={n_modes} repeat={repeat}")
    rows: list[tuple[str, float, float | None]] = []

    # Per-direction regime (a handful of detector directions per call) and
    # full-grid regime (the fallback's einsum path reaches BLAS here).
    for label, points in (("quadratic_form/small", 4), (f"quadratic_form/{n_points}", n_points)):
        table = table_for(points)
        t_fb = _best_of(repeat, fallback.quadratic_form, table, pair)
        t_ext = (
            _best_of(repeat, _quadform.quadratic_form, table, pair)
            if _quadform is not None
            else None
        )
        rows.append((label, t_fb, t_ext))

    t_fb = _best_of(repeat, fallback.weighted_pair_sum, coeff, pair, gram)
    t_ext = (
        _best_of(repeat, _quadform.weighted_pair_sum, coeff, pair, gram)
        if _quadform is not None
        else None
    )
    rows.append(("weighted_pair_sum", t_fb, t_ext))

    if _quadform is not None:
        table = table_for(n_points)
        check = np.max(
            np.abs(
                _quadform.quadratic_form(table, pair) - fallback.quadratic_form(table, pair)
            )
        )
        print(f"backend agreement (max abs diff): {check:.3e}")
    else:
        print("compiled extension unavailable; timing fallback only")

    header = f"{'kernel':<26}{'fallback':>12}{'compiled':>12}{'speedup':>10}"
    print(header)
    for name, t_fb, t_ext in rows:
        if t_ext is None:
            print(f"{name:<26}{t_fb * 1e3:>10.3f}ms{'-':>12}{'-':>10}")
        else:
            print(
                f"{name:<26}{t_fb * 1e3:>10.3f}ms{t_ext * 1e3:>10.3f}ms"
                f"{t_fb / t_ext:>9.2f}x"
            )
    print(f"compiled extension present: {HAVE_COMPILED}")
    print("dispatch: small contractions use the compiled loops, large ones einsum/BLAS")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--l-max", type=int, default=6)
    parser.add_argument("--n-points", type=int, default=512)
    parser.add_argument("--repeat", type=int, default=7)
    args = parser.parse_args()
    run(args.l_max, args.n_points, args.repeat)


if __name__ == "__main__":
    main()
