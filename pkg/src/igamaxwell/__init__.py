"""Isogeometric Maxwell eigenvalue solver with mortar and waveguide-modal couplings."""

__version__ = "0.1.0"
