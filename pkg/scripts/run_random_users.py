#!/usr/bin/env python3
"""Power sweep with user positions redrawn inside the base-station triangle.

Writes random_users.csv into ./results (or --out DIR). Append irsbeam flags
to override, e.g. --trials 5 --pmax 25,35.
"""

import sys

from irsbeam.cli import main

if __name__ == "__main__":
    sys.exit(main(["random-users", "--out", "results",
                   "--pmax", "15,20,25,30,35", "--trials", "20",
                   "--seed", "1"] + sys.argv[1:]))
