"""Sphere-separator contraction planning for quantum-circuit tensor networks."""

__version__ = "0.1.0"
