"""Simulation of LOCC protocols and majorization checks on local spectra."""

__version__ = "0.1.0"
