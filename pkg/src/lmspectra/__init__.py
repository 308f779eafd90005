"""Spectra and local limits of Linial-Meshulam random simplicial complexes."""

__version__ = "1.0.0"
