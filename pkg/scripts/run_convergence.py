#!/usr/bin/env python3
"""Per-iteration objective of both optimizers on the default three-cell layout.

Writes convergence.csv into ./results (or --out DIR). Any irsbeam flag given
here overrides the defaults below, e.g. --pmax 30 or --max-iters 10.
"""

import sys

from irsbeam.cli import main

if __name__ == "__main__":
    sys.exit(main(["convergence", "--out", "results", "--pmax", "35",
                   "--seed", "1"] + sys.argv[1:]))
