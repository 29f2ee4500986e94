"""cxbody: numerics for complex intersection, projection and centroid bodies.

Layers (bottom-up): special functions -> sphere/disc quadrature -> bi-degree
harmonic analysis -> body representations -> the kernel/multiplier operators
-> mixed-volume geometry -> end-to-end experiments -> CLI.
"""

__version__ = "0.1.0"

from . import backend  # noqa: F401  (resolves the numba/numpy kernel choice)
