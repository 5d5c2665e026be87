"""pbsp-sim — port-based state preparation and programmable hybrid processor simulator."""

__version__ = "0.1.0"
