"""Rigid-graph workbench: gadget compilers, endomorphism search and certificates."""

__version__ = "0.1.0"
