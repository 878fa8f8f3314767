"""Numerical toolkit for (p,q)-Szasz-Mirakyan-Baskakov-Stancu operators."""
__version__ = "0.1.0"
