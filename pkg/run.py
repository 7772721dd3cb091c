#!/usr/bin/env python3
"""
Run a default qscode sweep (analytic curves + virtual experiment) to stdout.
"""
import sys

from qscode.__main__ import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
