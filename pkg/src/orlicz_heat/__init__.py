"""Orlicz-space tools for the semilinear heat equation u_t = Laplace(u) + f(u)."""

__version__ = "0.1.0"
