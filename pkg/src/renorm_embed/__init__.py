"""Toolkit for R-embeddings of random sequences at configurable scale."""

__version__ = "0.1.0"
