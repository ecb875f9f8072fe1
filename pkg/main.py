#!/usr/bin/env python
"""
This module is the entry point for the application.

Example:
    ./main.py generate --generator '{"kind": "plane", "n": 4, "k": 2}'
    ./main.py certify --input data/cloud.csv --k 2 --delta 0.05 --alpha 0.9
"""

import sys

from src.cli import main


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
