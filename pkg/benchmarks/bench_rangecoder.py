"""Throughput of the compiled and pure-Python range coder backends.

    python benchmarks/bench_rangecoder.py [--symbols N] [--repeat R]

Both backends code the same stream; the script checks the outputs agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pvsc.bitstream import rangecoder as rc


def workload(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    cdfs = []
    for _ in range(16):
        k = int(rng.integers(8, 130))
        cdfs.append(rc.pmf_to_cdf(rng.dirichlet(np.full(k, 0.5)), escape_mass=1e-4))
    tables = rc.stack_cdfs(cdfs)
    idx = rng.integers(0, tables.n_tables, n)
    sym = np.empty(n, dtype=np.int64)
    for t in range(tables.n_tables):
        sel = idx == t
        size = int(tables.sizes[t])
        p = np.diff(tables.cdf[t, : size + 1]) / 65536.0
        sym[sel] = rng.choice(size, size=int(sel.sum()), p=p)
    return sym, tables, idx


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--symbols", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    sym, tables, idx = workload(args.symbols)
    backends = ["python"] + (["cython"] if rc.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the Python backend only")

    ref = None
    rows = []
    for b in backends:
        data = rc.range_encode(sym, tables, idx, backend=b)
        if ref is None:
            ref = data
        elif data != ref:
            raise SystemExit(f"backend {b} produced different bytes")
        enc = best_of(lambda: rc.range_encode(sym, tables, idx, backend=b), args.repeat)
        dec = best_of(lambda: rc.range_decode(data, tables, sym.size, idx, backend=b), args.repeat)
        rows.append((b, enc, dec))

    bits = 8 * len(ref)
    print(f"{sym.size} symbols, {bits / sym.size:.3f} bits/symbol, "
          f"model {rc.cross_entropy_bits(sym, tables, idx) / sym.size:.3f} bits/symbol")
    print(f"{'backend':>8}  {'encode Msym/s':>13}  {'decode Msym/s':>13}")
    for b, enc, dec in rows:
        print(f"{b:>8}  {sym.size / enc / 1e6:13.3f}  {sym.size / dec / 1e6:13.3f}")
    if len(rows) == 2:
        print(f"speedup: encode {rows[0][1] / rows[1][1]:.1f}x, decode {rows[0][2] / rows[1][2]:.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
