#!/usr/bin/env python3
"""CLI for the hybrid TDMA/CSMA channel simulator."""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent / "src"))

from hybrid_mac.cli import main

if __name__ == "__main__":
    sys.exit(main())
