"""Koopman-von Neumann and hybrid quantum-classical dynamics laboratory."""

__version__ = "0.1.0"
