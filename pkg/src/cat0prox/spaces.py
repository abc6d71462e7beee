"""Concrete CAT(0) model spaces: distances, geodesics, quasilinearization.

Four space families are provided, all complete CAT(0) (Hadamard) spaces:

* ``Euclidean(dim)`` -- flat R^dim,
* ``Hyperboloid(dim)`` -- the upper sheet of <x,x>_M = -1 in Minkowski
  R^(dim+1), curvature -1,
* ``Spider(rays)`` -- ``rays`` half-lines glued at a hub, path metric,
* ``Product(left, right)`` -- the l2 product of two model spaces.

Points are value types: a frozen ``Point`` wraps a flat float64 payload plus
its space descriptor, so equality is structural.  All operations here are
pure functions; heavy lifting happens in the kernel backend (compiled when
available, numpy otherwise).

The quasilinearization pairing

    <uv, xy> = (d(u,y)^2 + d(v,x)^2 - d(u,x)^2 - d(v,y)^2) / 2

is always computed from the four distances; on Euclidean space it reduces to
the dot product ``(v-u).(y-x)``, which the tests use as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from . import kernels as K
from .errors import InvalidInputError, SpaceMismatchError

__all__ = [
    "Euclidean", "Hyperboloid", "Spider", "Product", "Space",
    "Point", "PointPair", "TangentVec",
    "point", "spatial_to_hyperboloid", "payload_size", "leaf_plan",
    "dist", "geodesic", "quasilin", "pair_tangent", "cn_gap", "cs_gap",
]


# -- space descriptors --------------------------------------------------------

@dataclass(frozen=True)
class Euclidean:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInputError("Euclidean dim must be >= 1")


@dataclass(frozen=True)
class Hyperboloid:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInputError("Hyperboloid dim must be >= 1")


@dataclass(frozen=True)
class Spider:
    rays: int

    def __post_init__(self):
        if self.rays < 2:
            raise InvalidInputError("Spider needs at least 2 rays")


@dataclass(frozen=True)
class Product:
    left: "Space"
    right: "Space"


Space = Union[Euclidean, Hyperboloid, Spider, Product]

HYPERBOLOID_SHEET_TOL = 1e-9


@lru_cache(maxsize=None)
def payload_size(space: Space) -> int:
    if isinstance(space, Euclidean):
        return space.dim
    if isinstance(space, Hyperboloid):
        return space.dim + 1
    if isinstance(space, Spider):
        return 2
    if isinstance(space, Product):
        return payload_size(space.left) + payload_size(space.right)
    raise InvalidInputError(f"unknown space {space!r}")


@lru_cache(maxsize=None)
def leaf_plan(space: Space):
    """Flattened leaves as (kernel kind, offset, size) triples."""
    if isinstance(space, Product):
        left = leaf_plan(space.left)
        shift = payload_size(space.left)
        right = tuple((k, off + shift, sz) for k, off, sz in leaf_plan(space.right))
        return left + right
    if isinstance(space, Euclidean):
        return ((K.EUCLIDEAN, 0, space.dim),)
    if isinstance(space, Hyperboloid):
        return ((K.HYPERBOLOID, 0, space.dim + 1),)
    if isinstance(space, Spider):
        return ((K.SPIDER, 0, 2),)
    raise InvalidInputError(f"unknown space {space!r}")


# -- points -------------------------------------------------------------------

def minkowski(a, b):
    return -a[0] * b[0] + float(np.dot(a[1:], b[1:]))


def _validate_leaf(space, arr, kind, off, size, leaf_space):
    seg = arr[off:off + size]
    if kind == K.HYPERBOLOID:
        if seg[0] <= 0.0:
            raise InvalidInputError("hyperboloid point must lie on the upper sheet")
        if abs(minkowski(seg, seg) + 1.0) > HYPERBOLOID_SHEET_TOL:
            raise InvalidInputError("hyperboloid point is off the sheet")
    elif kind == K.SPIDER:
        ray, r = seg
        if r < 0.0:
            raise InvalidInputError("spider radius must be >= 0")
        if ray != int(ray) or not (0 <= int(ray) < leaf_space.rays):
            raise InvalidInputError(f"spider ray must be an integer in [0, {leaf_space.rays})")


def _leaf_spaces(space):
    if isinstance(space, Product):
        return _leaf_spaces(space.left) + _leaf_spaces(space.right)
    return (space,)


def canonicalize_payload(space: Space, arr: np.ndarray) -> np.ndarray:
    """Spider points of radius 0 are stored on ray 0 so equality is structural."""
    for (kind, off, _), _leaf in zip(leaf_plan(space), _leaf_spaces(space)):
        if kind == K.SPIDER and arr[off + 1] == 0.0:
            arr[off] = 0.0
    return arr


@dataclass(frozen=True)
class Point:
    space: Space
    data: tuple

    @staticmethod
    def from_array(space: Space, arr, validate: bool = True) -> "Point":
        arr = np.asarray(arr, dtype=np.float64).copy()
        if arr.shape != (payload_size(space),):
            raise InvalidInputError(
                f"payload of length {arr.shape} does not match space {space}")
        canonicalize_payload(space, arr)
        if validate:
            for (kind, off, size), leaf in zip(leaf_plan(space), _leaf_spaces(space)):
                _validate_leaf(space, arr, kind, off, size, leaf)
        return Point(space, tuple(arr.tolist()))

    def as_array(self) -> np.ndarray:
        return np.array(self.data, dtype=np.float64)

    # convenience accessors for the simple spaces
    @property
    def coords(self) -> tuple:
        return self.data

    @property
    def ray(self) -> int:
        if not isinstance(self.space, Spider):
            raise InvalidInputError("ray is only defined on spider points")
        return int(self.data[0])

    @property
    def radius(self) -> float:
        if not isinstance(self.space, Spider):
            raise InvalidInputError("radius is only defined on spider points")
        return self.data[1]

    def split(self) -> tuple["Point", "Point"]:
        if not isinstance(self.space, Product):
            raise InvalidInputError("split is only defined on product points")
        n = payload_size(self.space.left)
        return (Point(self.space.left, self.data[:n]),
                Point(self.space.right, self.data[n:]))


def point(space: Space, payload) -> Point:
    """Build a validated point from a per-space payload.

    Euclidean: coordinate sequence. Hyperboloid: ambient (dim+1)-vector on
    the upper sheet. Spider: ``(ray, radius)``. Product: pair of payloads
    (or of Points) for the two factors.
    """
    if isinstance(space, Product):
        left, right = payload
        lp = left if isinstance(left, Point) else point(space.left, left)
        rp = right if isinstance(right, Point) else point(space.right, right)
        if lp.space != space.left or rp.space != space.right:
            raise SpaceMismatchError("product components built for a different space")
        return Point(space, lp.data + rp.data)
    if isinstance(space, Spider):
        ray, r = payload
        return Point.from_array(space, [float(ray), float(r)])
    return Point.from_array(space, payload)


def spatial_to_hyperboloid(space: Hyperboloid, spatial) -> Point:
    """Lift spatial coordinates z to (sqrt(1+|z|^2), z) on the upper sheet."""
    z = np.asarray(spatial, dtype=np.float64)
    if z.shape != (space.dim,):
        raise InvalidInputError("spatial coordinates must have length dim")
    arr = np.concatenate(([math.sqrt(1.0 + float(z @ z))], z))
    return Point.from_array(space, arr)


@dataclass(frozen=True)
class PointPair:
    """An ordered pair (start, end), written ->xy in the quasilinearization."""
    start: Point
    end: Point

    def __post_init__(self):
        if self.start.space != self.end.space:
            raise SpaceMismatchError("pair endpoints live in different spaces")


@dataclass(frozen=True)
class TangentVec:
    """Element s * ->py of the tangent cone at ``base``; s >= 0."""
    scale: float
    base: Point
    target: Point

    def __post_init__(self):
        if self.scale < 0.0:
            raise InvalidInputError("tangent scale must be >= 0")
        if self.base.space != self.target.space:
            raise SpaceMismatchError("tangent base and target in different spaces")

    def is_zero(self) -> bool:
        return self.scale == 0.0 or self.base == self.target


# -- array-level operations (shared by the heavier modules) -------------------

def _leaf_block(X, off, size):
    if off == 0 and size == X.shape[1]:
        return X
    return np.ascontiguousarray(X[:, off:off + size])


def dist_arr(space, a, b) -> float:
    plan = leaf_plan(space)
    if len(plan) == 1:
        return K.dist_scalar(plan[0][0], a, b)
    s = 0.0
    for kind, off, size in plan:
        d = K.dist_scalar(kind, a[off:off + size], b[off:off + size])
        s += d * d
    return math.sqrt(s)


def dist_rows_arr(space, X, Y):
    plan = leaf_plan(space)
    if len(plan) == 1:
        return K.dist_rows(plan[0][0], X, Y)
    s = None
    for kind, off, size in plan:
        d = K.dist_rows(kind, _leaf_block(X, off, size), _leaf_block(Y, off, size))
        s = d * d if s is None else s + d * d
    return np.sqrt(s)


def dist_one_many_arr(space, x, Y):
    plan = leaf_plan(space)
    if len(plan) == 1:
        return K.dist_one_many(plan[0][0], x, Y)
    s = None
    for kind, off, size in plan:
        d = K.dist_one_many(kind, np.ascontiguousarray(x[off:off + size]),
                            _leaf_block(Y, off, size))
        s = d * d if s is None else s + d * d
    return np.sqrt(s)


def geodesic_arr(space, a, b, t, allow_extend=False):
    if not allow_extend and not 0.0 <= t <= 1.0:
        raise InvalidInputError("geodesic parameter must lie in [0, 1]")
    plan = leaf_plan(space)
    if len(plan) == 1:
        return K.geodesic_scalar(plan[0][0], a, b, t)
    out = np.empty(payload_size(space))
    for kind, off, size in plan:
        out[off:off + size] = K.geodesic_scalar(kind, a[off:off + size],
                                                b[off:off + size], t)
    return out


def geodesic_rows_arr(space, X, Y, T, allow_extend=False):
    T = np.ascontiguousarray(T, dtype=np.float64)
    X = np.ascontiguousarray(X)
    Y = np.ascontiguousarray(Y)
    if not allow_extend and (np.any(T < 0.0) or np.any(T > 1.0)):
        raise InvalidInputError("geodesic parameter must lie in [0, 1]")
    plan = leaf_plan(space)
    if len(plan) == 1:
        return K.geodesic_rows(plan[0][0], X, Y, T)
    out = np.empty_like(X)
    for kind, off, size in plan:
        out[:, off:off + size] = K.geodesic_rows(
            kind, _leaf_block(X, off, size), _leaf_block(Y, off, size), T)
    return out


def quasilin_arr(space, u, v, x, y) -> float:
    duy = dist_arr(space, u, y)
    dvx = dist_arr(space, v, x)
    dux = dist_arr(space, u, x)
    dvy = dist_arr(space, v, y)
    return 0.5 * (duy * duy + dvx * dvx - dux * dux - dvy * dvy)


def dist_block_arr(space, A, B):
    acc = np.zeros((A.shape[0], B.shape[0]))
    for kind, off, size in leaf_plan(space):
        K.dist_sq_block_accum(kind, _leaf_block(A, off, size),
                              _leaf_block(B, off, size), acc)
    return np.sqrt(acc)


def max_pairwise_dist(space, X, chunk=512) -> float:
    """Max pairwise distance over the rows of X, chunked to bound memory."""
    X = np.ascontiguousarray(X)
    plan = leaf_plan(space)
    if len(plan) == 1:
        return math.sqrt(K.max_pairwise_sq(plan[0][0], X))
    n = X.shape[0]
    best = 0.0
    for i0 in range(0, n, chunk):
        A = np.ascontiguousarray(X[i0:i0 + chunk])
        acc = np.zeros((A.shape[0], n))
        for kind, off, size in plan:
            K.dist_sq_block_accum(kind, _leaf_block(A, off, size),
                                  _leaf_block(X, off, size), acc)
        m = float(acc.max())
        if m > best:
            best = m
    return math.sqrt(best)


def rows_from_points(points) -> np.ndarray:
    return np.array([p.data for p in points], dtype=np.float64)


# -- hyperboloid chart helpers -------------------------------------------------

def hyperboloid_tangent_basis(p: np.ndarray) -> np.ndarray:
    """Minkowski-orthonormal basis of the tangent plane at p (rows)."""
    n = len(p) - 1
    basis = []
    for i in range(1, n + 1):
        e = np.zeros(n + 1)
        e[i] = 1.0
        v = e + minkowski(e, p) * p
        for b in basis:
            v = v - minkowski(v, b) * b
        norm = math.sqrt(max(minkowski(v, v), 0.0))
        if norm < 1e-12:
            continue
        basis.append(v / norm)
    return np.array(basis)


def hyperboloid_exp(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Exponential map at p applied to tangent vector v.

    The sheet constraint is restored by re-lifting the time coordinate from
    the spatial ones, which stays stable for large steps where the Minkowski
    norm of the raw combination cancels catastrophically.
    """
    norm = math.sqrt(max(minkowski(v, v), 0.0))
    if norm == 0.0:
        return p.copy()
    out = math.cosh(norm) * p + math.sinh(norm) * (v / norm)
    out[0] = math.sqrt(1.0 + float(out[1:] @ out[1:]))
    return out


def extend_past(space, anchor, through, overshoot) -> np.ndarray:
    """Point at distance d(anchor, through) + overshoot from anchor along
    the geodesic anchor -> through.

    Requires the extension to be unique; a spider geodesic that would have to
    cross the hub outward raises.  Degenerate anchor == through returns it.
    """
    d = dist_arr(space, anchor, through)
    if d == 0.0 or overshoot == 0.0:
        return np.asarray(through, dtype=np.float64).copy()
    t = (d + overshoot) / d
    return geodesic_arr(space, anchor, through, t, allow_extend=True)


# -- public point-level operations --------------------------------------------

def _check(space, *pts):
    for p in pts:
        if p.space != space:
            raise SpaceMismatchError(f"point of {p.space} passed to {space}")


def dist(space: Space, x: Point, y: Point) -> float:
    """Geodesic distance between two points of ``space``."""
    _check(space, x, y)
    return dist_arr(space, x.as_array(), y.as_array())


def geodesic(space: Space, x: Point, y: Point, t: float) -> Point:
    """The normalized geodesic from x to y evaluated at t in [0, 1]."""
    _check(space, x, y)
    if not 0.0 <= t <= 1.0:
        raise InvalidInputError("geodesic parameter must lie in [0, 1]")
    if x == y:
        return x
    arr = geodesic_arr(space, x.as_array(), y.as_array(), t)
    return Point.from_array(space, arr, validate=False)


def quasilin(space: Space, p1: PointPair, p2: PointPair) -> float:
    """Quasilinearization pairing <p1, p2> built from four distances."""
    _check(space, p1.start, p1.end, p2.start, p2.end)
    return quasilin_arr(space, p1.start.as_array(), p1.end.as_array(),
                        p2.start.as_array(), p2.end.as_array())


def pair_tangent(tv: TangentVec, p: PointPair) -> float:
    """Pair a tangent-cone element s*->by with ->xq: s * <by, xq>.

    The zero element pairs to 0 with everything; otherwise the tangent vector
    must be based at the pair's start point.
    """
    if tv.is_zero():
        return 0.0
    if tv.base != p.start:
        raise InvalidInputError("tangent vector and pair have different base points")
    return tv.scale * quasilin(tv.base.space, PointPair(tv.base, tv.target), p)


def cn_gap(space: Space, x: Point, u: Point, v: Point, lam: float) -> float:
    """Slack of the CAT(0) comparison inequality along the geodesic u -> v.

    Returns (1-lam) d(x,u)^2 + lam d(x,v)^2 - lam (1-lam) d(u,v)^2
    - d(x, geodesic(u,v,lam))^2, which is >= 0 in any CAT(0) space and == 0
    on flat sets.
    """
    _check(space, x, u, v)
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError("lambda must lie in [0, 1]")
    if lam == 0.0 or lam == 1.0:
        return 0.0
    xa, ua, va = x.as_array(), u.as_array(), v.as_array()
    m = geodesic_arr(space, ua, va, lam)
    dxu = dist_arr(space, xa, ua)
    dxv = dist_arr(space, xa, va)
    duv = dist_arr(space, ua, va)
    dxm = dist_arr(space, xa, m)
    return ((1.0 - lam) * dxu * dxu + lam * dxv * dxv
            - lam * (1.0 - lam) * duv * duv - dxm * dxm)


def cs_gap(space: Space, x: Point, y: Point, u: Point, v: Point) -> float:
    """Slack of the Cauchy-Schwarz-type four-point inequality.

    Returns d(x,u)^2 + d(y,v)^2 + 2 d(x,y) d(u,v) - d(x,v)^2 - d(y,u)^2,
    nonnegative in any CAT(0) space (equivalently |<xy,uv>| <= d(x,y)d(u,v)).
    """
    _check(space, x, y, u, v)
    xa, ya, ua, va = x.as_array(), y.as_array(), u.as_array(), v.as_array()
    dxu = dist_arr(space, xa, ua)
    dyv = dist_arr(space, ya, va)
    dxy = dist_arr(space, xa, ya)
    duv = dist_arr(space, ua, va)
    dxv = dist_arr(space, xa, va)
    dyu = dist_arr(space, ya, ua)
    return dxu * dxu + dyv * dyv + 2.0 * dxy * duv - dxv * dxv - dyu * dyu
