"""Random codes under parity-check constraints: leakage, polar designs, simulation."""

__version__ = "0.1.0"
