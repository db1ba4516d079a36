"""Whole-life-cycle economics of battery storage in energy and ancillary markets."""

__version__ = "0.1.0"
