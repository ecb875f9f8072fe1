#!/usr/bin/env python
"""
This module redraws the flatness profile of a stored certificate.

Usage:
    ./draw.py [certificate.json] [profile.svg]
"""

from sys import argv

from src.display_profile import Drawer


if __name__ == "__main__":
    CERTIFICATE = argv[1] if len(argv) > 1 else "data/certificate.json"
    OUTPUT = argv[2] if len(argv) > 2 else "data/profile.svg"

    drawer = Drawer()
    drawer.draw_certificate(CERTIFICATE, OUTPUT)
