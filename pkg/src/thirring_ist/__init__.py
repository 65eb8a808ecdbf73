"""Inverse-scattering-transform engine for the massive Thirring model in
non-laboratory coordinates: direct scattering, Riemann-Hilbert inversion,
time evolution, and an independent PDE integrator for cross-validation."""

__version__ = "0.1.0"
