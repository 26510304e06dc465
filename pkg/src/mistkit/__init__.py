"""Exact and numeric tools around noise stability on the Boolean cube, the Gaussian quadrant
function J, sum-of-squares certificates, and the Unique Games to Max-Cut reduction."""
from ._accel import backend
from .cube_fourier import BooleanFunction, FourierExpansion, ResourceError

__version__ = "0.1.0"
__all__ = ["BooleanFunction", "FourierExpansion", "ResourceError", "backend", "__version__"]
