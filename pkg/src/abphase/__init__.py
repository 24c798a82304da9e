"""Numerical electrodynamics for the polarized-neutron phase shift and the
magnetic Aharonov-Bohm effect, in natural units (c = hbar = 1)."""

from .numerics import QuadResult, StraightPath, integrate, integrate_adaptive, integrate_improper

__version__ = "0.1.0"

__all__ = ["QuadResult", "StraightPath", "integrate", "integrate_adaptive", "integrate_improper"]
