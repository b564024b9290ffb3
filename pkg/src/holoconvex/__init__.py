"""Strong P-convexity certificates for holomorphic PDOs at strictly pseudoconvex boundary points."""

__version__ = "0.1.0"
