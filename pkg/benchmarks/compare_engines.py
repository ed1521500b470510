"""Head-to-head timing of the compiled and pure solver engines.

Feeds identical certified instances to both implementations, insists the
answers stay bit-for-bit equal, and prints per-k medians with the speedup.

    python benchmarks/compare_engines.py
    python benchmarks/compare_engines.py --mode n-eq-k --k 4..14 --reps 30
    python benchmarks/compare_engines.py --csv engines.csv
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time

import numpy as np

from polyx import _kernel, bench, cli


def time_solve(impl, V, S, x, budget: float) -> tuple[int, np.ndarray, int]:
    """Best-of-3 wall time in ns, the returned point and the node count."""
    best = None
    point = None
    nodes = 0
    for _ in range(3):
        t0 = time.perf_counter_ns()
        y, nodes, status = impl.min_norm_point(V, S, x, time_budget=budget)
        dt = time.perf_counter_ns() - t0
        if status != _kernel.FOUND:
            raise RuntimeError(f"unexpected solver status {status}")
        best = dt if best is None else min(best, dt)
        point = np.asarray(y)
    return best, point, nodes


def run(args) -> list[dict]:
    engines = _kernel.engines()
    if "native" not in engines:
        print("compiled engine not importable; nothing to compare", file=sys.stderr)
        raise SystemExit(1)
    rows = []
    for k in args.k_values:
        n = args.n_fixed if args.mode == "fixed-n" else k
        per_engine = {name: [] for name in engines}
        for rep in range(args.reps):
            P, x = bench.random_polyhedron(n, k, seed=args.seed + 1000 * k + rep)
            V, S = P.matrix()
            points = {}
            counts = {}
            for name, impl in engines.items():
                ns, y, nodes = time_solve(impl, V, S, x, args.budget)
                per_engine[name].append(ns)
                points[name] = y
                counts[name] = nodes
            # same decision path, coordinates equal to round-off
            if counts["native"] != counts["python"] or not np.allclose(
                points["native"], points["python"], atol=1e-9
            ):
                raise RuntimeError(f"engines disagree at n={n} k={k} rep={rep}")
        row = {"n": n, "k": k}
        for name, times in per_engine.items():
            row[f"{name}_ns"] = int(statistics.median(times))
        row["speedup"] = row["python_ns"] / row["native_ns"]
        rows.append(row)
        print(
            f"n={row['n']:>3} k={row['k']:>4}  native {row['native_ns']/1e3:9.1f} us"
            f"  python {row['python_ns']/1e3:9.1f} us  x{row['speedup']:.1f}"
        )
    geo = float(np.exp(np.mean(np.log([r["speedup"] for r in rows]))))
    print(f"geometric mean speedup x{geo:.1f} over {len(rows)} sizes "
          f"({args.reps} instances each, best of 3)")
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mode", choices=("fixed-n", "n-eq-k"), default="fixed-n")
    parser.add_argument("--n-fixed", type=int, default=3)
    parser.add_argument("--k", default="1,2,4,8,16,32,64,100",
                        help="sizes, e.g. '5,10,20' or '1..32'")
    parser.add_argument("--reps", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--budget", type=float, default=30.0,
                        help="per-solve time budget in seconds")
    parser.add_argument("--csv", help="also write the table to this file")
    args = parser.parse_args(argv)
    args.k_values = cli._parse_k_values(args.k)
    rows = run(args)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.csv}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
