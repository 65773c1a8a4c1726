"""Two-qubit separability probabilities as functions of the Bloch radii."""

from blochsep.kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
