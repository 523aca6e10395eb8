"""Decay of stability failures with rounds, and the resulting time overhead.

For each circuit the logical failure rate is measured at several round
counts and fitted with ``log p_L = log a - gamma n``. Dividing ``gamma`` by
the round duration gives a decay rate per nanosecond; the overhead ratio
``R`` of a circuit is the no-reset rate divided by its own rate, so ``R < 1``
means it suppresses errors faster in wall-clock time than the no-reset
baseline.

Usage: ``python demos/stability_overhead.py [--p 1e-3] [--max-failures 50]``
"""

from __future__ import annotations

import argparse

from resetqec import analysis
from resetqec.cli import parse_p
from resetqec.experiment import PointConfig, round_duration, run_points

CIRCUITS = (("standard", "nr", 500), ("standard", "ur", 0), ("standard", "ur", 500),
            ("spreading", "nr", 500), ("squeezing", "nr", 500))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--p", type=parse_p, default=1e-3)
    parser.add_argument("--rounds", type=int, nargs="+", default=[5, 7, 9, 11])
    parser.add_argument("--max-failures", type=int, default=50)
    parser.add_argument("--max-shots", type=int, default=2_000_000)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)
    fits = {}
    for family, scheme, t_res in CIRCUITS:
        cfgs = [PointConfig("stability", family, scheme, 4, args.p, n, t_res) for n in args.rounds]
        pts = run_points(cfgs, args.seed, args.max_failures, args.max_shots, args.workers)
        fits[(family, scheme, t_res)] = analysis.fit_log_linear(pts, round_duration(cfgs[0]))
    base = fits[("standard", "nr", 500)]
    print(f"stability w=4, p={args.p:.3g}, rounds {args.rounds}")
    print("circuit               round_ns  gamma/round        R")
    for (family, scheme, t_res), fit in fits.items():
        r = analysis.overhead_ratio(base, fit)
        label = f"{family}-{scheme}" + (f" t_res={t_res}" if scheme == "ur" else "")
        print(f"{label:22s}{fit.round_ns:8.0f}  {fit.gamma_round:.4f}+-{fit.se_gamma_round:.4f}"
              f"  {r.value:.3f}+-{r.se:.3f}")


if __name__ == "__main__":
    main()
