"""Evaluation of ordinal classification outputs."""

__version__ = "0.1.0"
