"""Blind deconvolution from randomly masked inputs."""

from . import errors, lifting, masks, signal, solvers

__version__ = "0.1.0"

__all__ = ["errors", "lifting", "masks", "signal", "solvers", "__version__"]
