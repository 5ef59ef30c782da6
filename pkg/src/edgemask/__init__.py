"""Boundary-weighted mask loss and a desk-scale newspaper digitization pipeline."""

__version__ = "0.1.0"
