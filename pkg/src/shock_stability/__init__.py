"""Shock Stability Lab - relative-entropy stability of extremal shocks, checked numerically."""

__version__ = "0.1.0"
