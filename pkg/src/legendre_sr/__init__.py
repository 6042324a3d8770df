"""Structure-preserving laboratory for Legendre dynamics and symplectic reservoirs."""

__version__ = "0.1.0"
