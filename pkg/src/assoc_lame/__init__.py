"""Exact Bloch solutions of the associated Lame equation and their
first- and second-order SUSY partner potentials."""

__version__ = "0.1.0"
