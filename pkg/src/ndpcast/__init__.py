"""Temporal-difference cost-to-go forecasting on panel data."""

__version__ = "0.1.0"
