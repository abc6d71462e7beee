"""Equilibrium problems, resolvents and proximal iterations on CAT(0) spaces."""

from . import kernels
from .errors import InvalidInputError, ResolventFailureError, SpaceMismatchError
from .spaces import (
    Euclidean, Hyperboloid, Product, Space, Spider,
    Point, PointPair, TangentVec,
    cn_gap, cs_gap, dist, geodesic, pair_tangent, point, quasilin,
    spatial_to_hyperboloid,
)

__version__ = "0.1.0"
