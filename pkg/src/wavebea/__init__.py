"""Backward error analysis for variational discretisations of travelling and rotating waves."""
__version__ = "0.1.0"
