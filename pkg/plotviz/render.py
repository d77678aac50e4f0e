#!/usr/bin/env python3
"""Command-line wrapper: render.py --in DIR --out-a PATH --out-b PATH."""

import sys

from plotviz import main

if __name__ == "__main__":
    sys.exit(main())
