"""Quantum-control language: pure fragment, classical driver, and matrix semantics."""

__version__ = "0.1.0"
