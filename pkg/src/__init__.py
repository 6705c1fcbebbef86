"""
evans-ep
Solitary waves of the isothermal Euler-Poisson system, the Evans function of
their linearization and the instability-criterion integrals.
"""

__version__ = "0.1.0"
