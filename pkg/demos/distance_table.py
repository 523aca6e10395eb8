"""Circuit-level distance of every circuit family.

Without resets an auxiliary qubit that is misclassified once flips two
consecutive comparisons, so a time-like logical in a stability experiment
needs only about half as many faults as the number of rounds. The spreading
and squeezing circuits restore the full time-like distance. This script
prints the exact distances for a small stability patch and for d=3 memory.

Usage: ``python demos/distance_table.py [--rounds 5 7]``
"""

from __future__ import annotations

import argparse

from resetqec.experiment import PointConfig, effective_distance

FAMILIES = (("standard", "ur"), ("standard", "cr"), ("standard", "nr"),
            ("spreading", "nr"), ("squeezing", "nr"))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rounds", type=int, nargs="+", default=[5, 7])
    args = parser.parse_args(argv)
    header = "circuit".ljust(16) + "".join(f"stab n={n}".rjust(11) for n in args.rounds) + "  memory d=3"
    print(header)
    for family, scheme in FAMILIES:
        cells = [effective_distance(PointConfig("stability", family, scheme, 4, 1e-3, n)).value
                 for n in args.rounds]
        mem = effective_distance(PointConfig("memory", family, scheme, 3, 1e-3, 3)).value
        print(f"{family}-{scheme}".ljust(16) + "".join(str(c).rjust(11) for c in cells)
              + str(mem).rjust(12))


if __name__ == "__main__":
    main()
