"""Instruction-conditioned driving-planner evaluation harness."""

__version__ = "0.1.0"
