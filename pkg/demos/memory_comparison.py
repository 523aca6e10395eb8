"""Memory experiment with and without auxiliary-qubit resets.

Both schemes measure the same stabilisers; the no-reset scheme compares
measurement outcomes two rounds apart instead of one. In a memory experiment
the time-like distance is not the bottleneck, so the two schemes should
perform alike once the reset window is short. A long reset window leaves the
data qubits idling, which is where the reset scheme loses ground.

Usage: ``python demos/memory_comparison.py [--size 3] [--p 1e-2.5] [--shots 20000]``
"""

from __future__ import annotations

import argparse

from resetqec.cli import parse_p
from resetqec.experiment import PointConfig, run_point


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=3)
    parser.add_argument("--p", type=parse_p, default=10 ** -2.5)
    parser.add_argument("--shots", type=int, default=20_000)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)
    runs = [("nr", 500), ("cr", 500), ("ur", 0), ("ur", 100), ("ur", 500)]
    print(f"memory d={args.size}, rounds={args.size}, p={args.p:.3g}")
    print("scheme  t_res  failures    shots      p_L       se")
    for scheme, t_res in runs:
        cfg = PointConfig("memory", "standard", scheme, args.size, args.p, args.size, t_res)
        pt = run_point(cfg, args.seed, max_failures=10**9, max_shots=args.shots)
        print(f"{scheme:6s} {t_res:6d} {pt.failures:9d} {pt.shots:8d} {pt.p_l:9.4g} {pt.se:8.2g}")


if __name__ == "__main__":
    main()
