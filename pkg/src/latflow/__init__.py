"""Diophantine approximation scans and diagonal-flow orbit statistics on
the space of unimodular lattices, with experiment harnesses for analytic
families of linear-form systems."""

__version__ = "0.1.0"

from .scalars import ScalarContext
from .systems import SystemY, parse_system

__all__ = ["ScalarContext", "SystemY", "parse_system", "__version__"]
