"""Exact quantitative information-flow analysis for programs modelled as HMMs."""

__version__ = "0.1.0"
