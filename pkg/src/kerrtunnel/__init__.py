"""Spectra, semiclassics and tunneling dynamics of the squeeze-driven Kerr oscillator.

All energies are in units of the Kerr amplitude K and all times are the
dimensionless product Kt.
"""

from kerrtunnel.hilbert import ModelParams, Parity

__version__ = "0.1.0"

__all__ = ["ModelParams", "Parity", "__version__"]
