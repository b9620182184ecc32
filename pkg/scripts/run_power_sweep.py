#!/usr/bin/env python3
"""Mean min-SINR of all four schemes versus transmit power, 20 trials a point.

Writes power_sweep.csv into ./results (or --out DIR). Append irsbeam flags to
override, e.g. --trials 5 --variant sca.
"""

import sys

from irsbeam.cli import main

if __name__ == "__main__":
    sys.exit(main(["power-sweep", "--out", "results",
                   "--pmax", "15,20,25,30,35", "--trials", "20",
                   "--seed", "1"] + sys.argv[1:]))
