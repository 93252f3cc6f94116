"""Artificial compressibility laboratory for the Navier-Stokes-Fourier system on periodic boxes."""

__version__ = "0.1.0"
