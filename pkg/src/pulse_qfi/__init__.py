"""Quantum Fisher information of pulsed light interacting with a two-level emitter."""

__version__ = "0.1.0"
