"""Simulation and topological analysis of the three-element memristive chaotic circuit."""

__version__ = "0.1.0"
