"""Inductive general game playing workbench."""
__version__ = "0.1.0"
