"""Bifunction families F(x, y), feasible domains, and residual certificates.

Two structured families are shipped: ``FromFunctional`` (F(x,y) = g(y) - g(x)
for a convex functional g, so equilibria are minimizers of g) and
``FromField`` (F(x,y) = <A(x), ->xy> for a single-valued vector field A, so
equilibria are zeros of A).  ``CustomBifunction`` wraps an arbitrary
evaluator for adversarial tests.

Residuals are grid certificates: ``equilibrium_residual`` bounds how far a
point is from solving F(x, y) >= 0 on a finite grid, ``dual_residual`` does
the same for the Minty form F(y, x) <= 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError, SpaceMismatchError
from .sampling import sample_near
from .spaces import (
    Euclidean, Hyperboloid, Point, Space, Spider, Product,
    dist_arr, dist_one_many_arr, dist_rows_arr, extend_past,
    geodesic_arr, geodesic_rows_arr, payload_size, rows_from_points,
)

__all__ = [
    "HalfSqDist", "DistTo", "AbsValue", "Quadratic", "ConvexFunctional",
    "EuclideanAffine", "RadialField", "GeodesicField", "VectorField",
    "FromFunctional", "FromField", "CustomBifunction", "Bifunction",
    "WholeSpace", "Ball", "Box", "DomainK",
    "eval_F", "monotonicity_violation", "convexity_in_y_violation",
    "equilibrium_residual", "dual_residual", "residual_grid", "origin_arr",
]


def origin_arr(space: Space) -> np.ndarray:
    """A canonical base point: zeros / sheet apex / hub, componentwise."""
    if isinstance(space, Product):
        return np.concatenate([origin_arr(space.left), origin_arr(space.right)])
    if isinstance(space, Hyperboloid):
        out = np.zeros(space.dim + 1)
        out[0] = 1.0
        return out
    return np.zeros(payload_size(space))


# -- convex functionals --------------------------------------------------------

@dataclass(frozen=True)
class HalfSqDist:
    """g(x) = (weight / 2) * d(x, p)^2."""
    p: Point
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0.0:
            raise InvalidInputError("HalfSqDist weight must be > 0")

    @property
    def space(self):
        return self.p.space

    def value(self, x: np.ndarray) -> float:
        d = dist_arr(self.space, self.p.as_array(), x)
        return 0.5 * self.weight * d * d

    def value_rows(self, X: np.ndarray) -> np.ndarray:
        d = dist_one_many_arr(self.space, self.p.as_array(), X)
        return 0.5 * self.weight * d * d

    def critical_points(self):
        return [self.p.as_array()]


@dataclass(frozen=True)
class DistTo:
    """g(x) = d(x, p)."""
    p: Point

    @property
    def space(self):
        return self.p.space

    def value(self, x: np.ndarray) -> float:
        return dist_arr(self.space, self.p.as_array(), x)

    def value_rows(self, X: np.ndarray) -> np.ndarray:
        return dist_one_many_arr(self.space, self.p.as_array(), X)

    def critical_points(self):
        return [self.p.as_array()]


@dataclass(frozen=True)
class AbsValue:
    """g(x) = |x| on the real line."""
    space: Euclidean = Euclidean(1)

    def __post_init__(self):
        if not isinstance(self.space, Euclidean) or self.space.dim != 1:
            raise InvalidInputError("AbsValue is only defined on Euclidean{1}")

    def value(self, x: np.ndarray) -> float:
        return abs(x[0])

    def value_rows(self, X: np.ndarray) -> np.ndarray:
        return np.abs(X[:, 0])

    def critical_points(self):
        return [np.zeros(1)]


class Quadratic:
    """g(x) = x.Q.x / 2 + b.x on Euclidean space; Q symmetric PSD."""

    def __init__(self, space: Euclidean, Q, b):
        if not isinstance(space, Euclidean):
            raise InvalidInputError("Quadratic is only defined on Euclidean spaces")
        Q = np.asarray(Q, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if Q.shape != (space.dim, space.dim) or b.shape != (space.dim,):
            raise InvalidInputError("Quadratic shape mismatch with the space")
        if np.max(np.abs(Q - Q.T)) > 1e-10:
            raise InvalidInputError("Quadratic matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(Q)) < -1e-10:
            raise InvalidInputError("Quadratic matrix must be positive semidefinite")
        self.space = space
        self.Q = Q
        self.b = b

    def __repr__(self):
        return f"Quadratic(space={self.space}, Q={self.Q.tolist()}, b={self.b.tolist()})"

    def value(self, x: np.ndarray) -> float:
        return 0.5 * float(x @ self.Q @ x) + float(self.b @ x)

    def value_rows(self, X: np.ndarray) -> np.ndarray:
        return 0.5 * np.einsum("ij,jk,ik->i", X, self.Q, X) + X @ self.b

    def critical_points(self):
        try:
            return [np.linalg.solve(self.Q, -self.b)]
        except np.linalg.LinAlgError:
            sol, _, _, _ = np.linalg.lstsq(self.Q, -self.b, rcond=None)
            return [sol]


ConvexFunctional = (HalfSqDist, DistTo, AbsValue, Quadratic)


# -- vector fields ---------------------------------------------------------------

class EuclideanAffine:
    """A(x) = M x + b on Euclidean space; monotone iff M + M^T is PSD."""

    def __init__(self, space: Euclidean, M, b=None):
        if not isinstance(space, Euclidean):
            raise InvalidInputError("EuclideanAffine needs a Euclidean space")
        M = np.asarray(M, dtype=np.float64)
        b = np.zeros(space.dim) if b is None else np.asarray(b, dtype=np.float64)
        if M.shape != (space.dim, space.dim) or b.shape != (space.dim,):
            raise InvalidInputError("EuclideanAffine shape mismatch with the space")
        self.space = space
        self.M = M
        self.b = b
        self.monotone = bool(np.min(np.linalg.eigvalsh(M + M.T)) >= -1e-10)

    def __repr__(self):
        return f"EuclideanAffine(space={self.space}, M={self.M.tolist()}, b={self.b.tolist()})"

    def tangent_at(self, x: np.ndarray):
        """(scale, target) representation of A(x) as scale * ->x target."""
        return 1.0, x + self.M @ x + self.b

    def tangent_rows(self, X: np.ndarray):
        return np.ones(X.shape[0]), X + X @ self.M.T + self.b

    def critical_points(self):
        try:
            return [np.linalg.solve(self.M, -self.b)]
        except np.linalg.LinAlgError:
            return []


class RadialField:
    """Subgradient field of (weight/2) d(., center)^2: points away from center.

    A(x) = weight * ->x e(x) with e(x) the point one ``d(center, x)`` past x
    on the geodesic from the center, so |A(x)| = weight * d(x, center).
    On spider (and products involving spiders) the center must be the hub,
    otherwise the outward extension through the hub is ambiguous.
    """

    def __init__(self, center: Point, weight: float = 1.0):
        if weight <= 0.0:
            raise InvalidInputError("RadialField weight must be > 0")
        self._check_center(center.space, center.as_array())
        self.center = center
        self.weight = weight
        self.space = center.space

    @staticmethod
    def _check_center(space, arr):
        if isinstance(space, Spider):
            if arr[1] != 0.0:
                raise InvalidInputError("RadialField on a spider must be hub-centered")
        elif isinstance(space, Product):
            n = payload_size(space.left)
            RadialField._check_center(space.left, arr[:n])
            RadialField._check_center(space.right, arr[n:])

    def __repr__(self):
        return f"RadialField(center={self.center}, weight={self.weight})"

    def tangent_at(self, x: np.ndarray):
        c = self.center.as_array()
        d = dist_arr(self.space, c, x)
        if d == 0.0:
            return 0.0, x.copy()
        return self.weight, geodesic_arr(self.space, c, x, 2.0, allow_extend=True)

    def tangent_rows(self, X: np.ndarray):
        c = np.tile(self.center.as_array(), (X.shape[0], 1))
        d = dist_rows_arr(self.space, c, X)
        targets = np.array(X, copy=True)
        live = d > 0.0
        if np.any(live):
            targets[live] = geodesic_rows_arr(
                self.space, c[live], X[live], np.full(int(live.sum()), 2.0),
                allow_extend=True)
        scales = np.where(live, self.weight, 0.0)
        return scales, targets

    def critical_points(self):
        return [self.center.as_array()]


class GeodesicField:
    """A(x) = scale(x) * ->x target(x) for user-supplied point maps."""

    def __init__(self, space: Space, target: Callable[[Point], Point],
                 scale: Callable[[Point], float] = lambda _x: 1.0):
        self.space = space
        self.target = target
        self.scale = scale

    def tangent_at(self, x: np.ndarray):
        px = Point.from_array(self.space, x, validate=False)
        return float(self.scale(px)), self.target(px).as_array()

    def tangent_rows(self, X: np.ndarray):
        scales = np.empty(X.shape[0])
        targets = np.empty_like(X)
        for i in range(X.shape[0]):
            scales[i], targets[i] = self.tangent_at(X[i])
        return scales, targets

    def critical_points(self):
        return []


VectorField = (EuclideanAffine, RadialField, GeodesicField)


# -- bifunctions -----------------------------------------------------------------

class FromFunctional:
    """F(x, y) = g(y) - g(x); equilibria of F are the minimizers of g."""

    def __init__(self, g):
        self.g = g
        self.space = g.space

    def __repr__(self):
        return f"FromFunctional({self.g!r})"

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        return self.g.value(y) - self.g.value(x)

    def value_one_many(self, x: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return self.g.value_rows(Y) - self.g.value(x)

    def value_many_one(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.g.value(y) - self.g.value_rows(X)

    def value_rows(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return self.g.value_rows(Y) - self.g.value_rows(X)

    def critical_points(self):
        return self.g.critical_points()


def _pairing_one_many(space, x, scale, target, Y):
    # scale * <(x -> target), (x -> y)> for each row y, via the three distances
    dxy = dist_one_many_arr(space, x, Y)
    dtx = dist_arr(space, target, x)
    dty = dist_one_many_arr(space, target, Y)
    return scale * 0.5 * (dxy * dxy + dtx * dtx - dty * dty)


class FromField:
    """F(x, y) = <A(x), ->xy> for a single-valued vector field A."""

    def __init__(self, A):
        self.A = A
        self.space = A.space

    def __repr__(self):
        return f"FromField({self.A!r})"

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        scale, target = self.A.tangent_at(x)
        if scale == 0.0:
            return 0.0
        dxy = dist_arr(self.space, x, y)
        dtx = dist_arr(self.space, target, x)
        dty = dist_arr(self.space, target, y)
        return scale * 0.5 * (dxy * dxy + dtx * dtx - dty * dty)

    def value_one_many(self, x: np.ndarray, Y: np.ndarray) -> np.ndarray:
        scale, target = self.A.tangent_at(x)
        if scale == 0.0:
            return np.zeros(Y.shape[0])
        return _pairing_one_many(self.space, x, scale, target, Y)

    def value_many_one(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        scales, targets = self.A.tangent_rows(X)
        dxy = dist_one_many_arr(self.space, y, X)
        dtx = dist_rows_arr(self.space, targets, X)
        dty = dist_one_many_arr(self.space, y, targets)
        return scales * 0.5 * (dxy * dxy + dtx * dtx - dty * dty)

    def value_rows(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        scales, targets = self.A.tangent_rows(X)
        dxy = dist_rows_arr(self.space, X, Y)
        dtx = dist_rows_arr(self.space, targets, X)
        dty = dist_rows_arr(self.space, targets, Y)
        return scales * 0.5 * (dxy * dxy + dtx * dtx - dty * dty)

    def critical_points(self):
        return self.A.critical_points()


class CustomBifunction:
    """Arbitrary evaluator fn(x: Point, y: Point) -> float."""

    def __init__(self, space: Space, fn: Callable[[Point, Point], float]):
        self.space = space
        self.fn = fn

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(self.fn(Point.from_array(self.space, x, validate=False),
                             Point.from_array(self.space, y, validate=False)))

    def value_one_many(self, x: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.array([self.value(x, Y[i]) for i in range(Y.shape[0])])

    def value_many_one(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.array([self.value(X[i], y) for i in range(X.shape[0])])

    def value_rows(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.array([self.value(X[i], Y[i]) for i in range(X.shape[0])])

    def critical_points(self):
        return []


Bifunction = (FromFunctional, FromField, CustomBifunction)


# -- feasible domains --------------------------------------------------------------

@dataclass(frozen=True)
class WholeSpace:
    """K = X; grids are drawn from a declared bounding ball."""
    space: Space

    def contains(self, arr, tol=1e-9) -> bool:
        return True

    def project(self, arr):
        return arr

    def project_rows(self, X):
        return X

    def diameter(self) -> Optional[float]:
        return None

    def sup_dist(self, arr) -> Optional[float]:
        return None

    def sample(self, n, rng, focus=None, focus_radius=None):
        focus = origin_arr(self.space) if focus is None else focus
        radius = 8.0 if focus_radius is None else focus_radius
        return sample_near(self.space, focus, radius, n, rng)

    def extreme_rows(self):
        return np.empty((0, payload_size(self.space)))


@dataclass(frozen=True)
class Ball:
    """Closed geodesic ball around ``center``; convex in any CAT(0) space."""
    center: Point
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise InvalidInputError("Ball radius must be > 0")

    @property
    def space(self):
        return self.center.space

    def contains(self, arr, tol=1e-9) -> bool:
        return dist_arr(self.space, self.center.as_array(), arr) <= self.radius + tol

    def project(self, arr):
        c = self.center.as_array()
        d = dist_arr(self.space, c, arr)
        if d <= self.radius:
            return arr
        return geodesic_arr(self.space, c, arr, self.radius / d)

    def project_rows(self, X):
        c = self.center.as_array()
        d = dist_one_many_arr(self.space, c, X)
        out = np.array(X, copy=True)
        far = d > self.radius
        if np.any(far):
            t = self.radius / d[far]
            out[far] = geodesic_rows_arr(
                self.space, np.tile(c, (int(far.sum()), 1)), X[far], t)
        return out

    def diameter(self) -> float:
        return 2.0 * self.radius

    def sup_dist(self, arr) -> float:
        return dist_arr(self.space, self.center.as_array(), arr) + self.radius

    def sample(self, n, rng, focus=None, focus_radius=None):
        c = self.center.as_array()
        return self.project_rows(sample_near(self.space, c, self.radius, n, rng))

    def extreme_rows(self):
        return self.center.as_array()[None, :]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box on a Euclidean space."""
    space: Euclidean
    lo: tuple
    hi: tuple

    def __post_init__(self):
        if not isinstance(self.space, Euclidean):
            raise InvalidInputError("Box is only defined on Euclidean spaces")
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        if lo.shape != (self.space.dim,) or hi.shape != (self.space.dim,):
            raise InvalidInputError("Box bounds must match the space dimension")
        if np.any(lo > hi):
            raise InvalidInputError("Box bounds must satisfy lo <= hi")

    def _bounds(self):
        return np.asarray(self.lo, dtype=np.float64), np.asarray(self.hi, dtype=np.float64)

    def contains(self, arr, tol=1e-9) -> bool:
        lo, hi = self._bounds()
        return bool(np.all(arr >= lo - tol) and np.all(arr <= hi + tol))

    def project(self, arr):
        lo, hi = self._bounds()
        return np.clip(arr, lo, hi)

    def project_rows(self, X):
        lo, hi = self._bounds()
        return np.clip(X, lo, hi)

    def diameter(self) -> float:
        lo, hi = self._bounds()
        return float(np.linalg.norm(hi - lo))

    def sup_dist(self, arr) -> float:
        lo, hi = self._bounds()
        far = np.maximum(np.abs(arr - lo), np.abs(hi - arr))
        return float(np.linalg.norm(far))

    def sample(self, n, rng, focus=None, focus_radius=None):
        lo, hi = self._bounds()
        return lo + rng.random((n, self.space.dim)) * (hi - lo)

    def extreme_rows(self):
        lo, hi = self._bounds()
        rows = [(lo + hi) / 2.0]
        if self.space.dim <= 4:
            for corner in itertools.product(*zip(lo, hi)):
                rows.append(np.array(corner))
        return np.array(rows)


DomainK = (WholeSpace, Ball, Box)


def residual_grid(K, F=None, size=64, rng=None, focus=None, focus_radius=None):
    """Grid over K for residual certificates: low-discrepancy bulk plus all
    analytically known critical points and K's extreme candidates."""
    rows = [K.sample(size, rng, focus=focus, focus_radius=focus_radius),
            K.extreme_rows()]
    if F is not None:
        for c in F.critical_points():
            rows.append(K.project(np.asarray(c, dtype=np.float64))[None, :])
    return np.vstack([r for r in rows if len(r)])


# -- structural checks and residual operations ----------------------------------

def _check_point(F, p: Point):
    if p.space != F.space:
        raise SpaceMismatchError(f"point of {p.space} passed to bifunction on {F.space}")


def eval_F(F, x: Point, y: Point) -> float:
    """Evaluate the bifunction at a pair of points."""
    _check_point(F, x)
    _check_point(F, y)
    return F.value(x.as_array(), y.as_array())


def monotonicity_violation(F, samples) -> float:
    """max(0, max over sampled pairs of F(x,y) + F(y,x)); 0 certifies
    monotonicity on the sample."""
    if not samples:
        raise InvalidInputError("monotonicity check needs at least one pair")
    X = rows_from_points([p for p, _ in samples])
    Y = rows_from_points([q for _, q in samples])
    vals = F.value_rows(X, Y) + F.value_rows(Y, X)
    return max(0.0, float(np.max(vals)))


def convexity_in_y_violation(F, x: Point, samples) -> float:
    """max(0, max of F(x, geo(y0,y1,t)) - (1-t)F(x,y0) - tF(x,y1)) over the
    sampled chords; 0 certifies convexity of F(x, .) on the sample."""
    _check_point(F, x)
    xa = x.as_array()
    worst = 0.0
    for y0, y1, t in samples:
        if not 0.0 <= t <= 1.0:
            raise InvalidInputError("chord parameter must lie in [0, 1]")
        y0a, y1a = y0.as_array(), y1.as_array()
        mid = geodesic_arr(F.space, y0a, y1a, t)
        v = F.value(xa, mid) - (1.0 - t) * F.value(xa, y0a) - t * F.value(xa, y1a)
        worst = max(worst, v)
    return worst


def equilibrium_residual(F, xbar: Point, grid) -> float:
    """min over the grid of F(xbar, y); >= -eps certifies an approximate
    equilibrium on the grid."""
    _check_point(F, xbar)
    rows = grid if isinstance(grid, np.ndarray) else rows_from_points(grid)
    if len(rows) == 0:
        raise InvalidInputError("residual grid must be nonempty")
    return float(np.min(F.value_one_many(xbar.as_array(), rows)))


def dual_residual(F, xbar: Point, grid) -> float:
    """max over the grid of F(y, xbar); <= eps certifies an approximate
    solution of the dual (Minty) problem on the grid."""
    _check_point(F, xbar)
    rows = grid if isinstance(grid, np.ndarray) else rows_from_points(grid)
    if len(rows) == 0:
        raise InvalidInputError("residual grid must be nonempty")
    return float(np.max(F.value_many_one(rows, xbar.as_array())))
