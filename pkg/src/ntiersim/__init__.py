"""Trace-driven simulator of DRAM plus N compressed memory tiers."""

__version__ = "0.1.0"
