"""Desk-scale simulator for deciding Diophantine equations by adiabatic ground-state search."""

from .decide import Kind, SolveConfig, Verdict, solve
from .poly import Polynomial, evaluate, parse

__all__ = ["Kind", "Polynomial", "SolveConfig", "Verdict", "evaluate", "parse", "solve"]
__version__ = "0.1.0"
