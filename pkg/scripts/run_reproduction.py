#!/usr/bin/env python3
"""Run the built-in six-agent consensus benchmark end to end.

Prints the derived-constant diff table, runs one closed-loop simulation,
and leaves CSV/JSON artifacts in --out (default out/reproduction).
"""

import sys

from lpvnet.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if not any(a.startswith("--out") for a in argv):
        argv = ["--out", "out/reproduction"] + argv
    sys.exit(main(["reproduce"] + argv))
