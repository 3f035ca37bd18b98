"""Bounds on the LOCC-assisted quantum capacity of the bosonic dephasing channel."""

__version__ = "0.1.0"
