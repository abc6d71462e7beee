"""Constructive KKM machinery: geodesic hull layers, the simplex map, and
covering/intersection certificates.

For a finite vertex tuple (x_1, .., x_m) the hull layers are

    D_1 = {x_1},     D_j = { points on geodesics from x_j to D_{j-1} },

and the simplex map T sends coordinates (s_1, .., s_{m-1}) in [0,1]^{m-1}
to D* = D_1 u .. u D_m by the recursion T_1 = x_1,
T_j = geodesic(x_j, T_{j-1}, s_{j-1}).  T is Lipschitz with constant
diam(D*) per coordinate, which ``lipschitz_gap`` certifies numerically.

``kkm_cover_check`` samples hulls of vertex subsets and counts points that
escape every sublevel set G(x_i) = {x : F(x, x_i) >= 0}; for a bifunction
with convex sublevel structure the count is zero.  ``finite_intersection_certify``
searches a dense T-lattice for a point of the intersection of all G(x_i),
returning the most robust witness found.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, SpaceMismatchError
from .sampling import rng_from
from .spaces import (Point, dist_arr, geodesic_arr, geodesic_rows_arr,
                     max_pairwise_dist, rows_from_points)

__all__ = [
    "FinitePointSet", "SimplexCoord", "hull_layer", "T_map",
    "diam_estimate", "lipschitz_gap", "kkm_cover_check", "kkm_cover_report",
    "finite_intersection_certify",
]


@dataclass(frozen=True)
class FinitePointSet:
    points: tuple

    def __post_init__(self):
        if len(self.points) < 1:
            raise InvalidInputError("a finite point set needs at least one point")
        sp = self.points[0].space
        for p in self.points:
            if p.space != sp:
                raise SpaceMismatchError("all vertices must share one space")

    @property
    def space(self):
        return self.points[0].space

    @property
    def m(self) -> int:
        return len(self.points)

    def rows(self) -> np.ndarray:
        return rows_from_points(self.points)


@dataclass(frozen=True)
class SimplexCoord:
    s: tuple

    def __post_init__(self):
        for v in self.s:
            if not 0.0 <= v <= 1.0:
                raise InvalidInputError("simplex coordinates must lie in [0, 1]")


def _t_map_arr(space, vrows, s):
    z = vrows[0].copy()
    for j in range(1, len(s) + 1):
        z = geodesic_arr(space, vrows[j], z, s[j - 1])
    return z


def _t_map_rows(space, vrows, S):
    """Vectorized T over an (n, m-1) coordinate matrix."""
    n = S.shape[0]
    Z = np.tile(vrows[0], (n, 1))
    for j in range(1, S.shape[1] + 1):
        Xj = np.tile(vrows[j], (n, 1))
        Z = geodesic_rows_arr(space, Xj, Z, S[:, j - 1])
    return Z


def T_map(D: FinitePointSet, lam: SimplexCoord) -> Point:
    """Evaluate the simplex map at coordinates lam (length m-1)."""
    if len(lam.s) != D.m - 1:
        raise InvalidInputError(f"expected {D.m - 1} coordinates, got {len(lam.s)}")
    out = _t_map_arr(D.space, D.rows(), lam.s)
    return Point.from_array(D.space, out, validate=False)


def hull_layer(D: FinitePointSet, j: int, params) -> Point:
    """A point of the j-th hull layer D_j, parametrized by j-1 geodesic
    coordinates (empty for j = 1, which is just x_1)."""
    if not 1 <= j <= D.m:
        raise InvalidInputError(f"layer index {j} outside 1..{D.m}")
    params = tuple(params)
    if len(params) != j - 1:
        raise InvalidInputError(f"layer {j} needs {j - 1} parameters")
    sub = FinitePointSet(D.points[:j])
    return T_map(sub, SimplexCoord(params))


def diam_estimate(D: FinitePointSet, n_samples: int = 10000, seed: int = 0) -> float:
    """Sampled diameter of D*: max pairwise distance over n_samples T-points
    plus the vertex set."""
    rows = D.rows()
    if D.m == 1:
        return 0.0
    rng = rng_from(seed, "kkm-diam")
    S = rng.random((n_samples, D.m - 1))
    samples = np.vstack([_t_map_rows(D.space, rows, S), rows])
    return max_pairwise_dist(D.space, samples)


def lipschitz_gap(D: FinitePointSet, lam: SimplexCoord, mu: SimplexCoord,
                  diam_est: float | None = None) -> float:
    """sum_i |s_i - t_i| * diam(D*) - d(T(lam), T(mu)); nonnegative up to
    sampling error in the diameter estimate."""
    if len(lam.s) != D.m - 1 or len(mu.s) != D.m - 1:
        raise InvalidInputError("coordinate dimension mismatch with the vertex set")
    if diam_est is None:
        diam_est = diam_estimate(D)
    a = T_map(D, lam).as_array()
    b = T_map(D, mu).as_array()
    bound = sum(abs(si - ti) for si, ti in zip(lam.s, mu.s)) * diam_est
    return bound - dist_arr(D.space, a, b)


def kkm_cover_report(F, D: FinitePointSet, subsets, samples_per_subset: int,
                     seed: int = 0, tol: float = 1e-9):
    """Per-subset counts of sampled hull points escaping every G(x_i);
    see ``kkm_cover_check`` for the summary form."""
    rows = D.rows()
    counts = []
    rng = rng_from(seed, "kkm-cover")
    for idx, subset in enumerate(subsets):
        I = list(subset)
        if len(I) == 0:
            raise InvalidInputError("cover subsets must be nonempty")
        if any(not 0 <= i < D.m for i in I):
            raise InvalidInputError(f"subset {I} indexes outside the vertex set")
        sub_rows = rows[I]
        if len(I) == 1:
            samples = np.tile(sub_rows[0], (1, 1))
        else:
            S = rng.random((samples_per_subset, len(I) - 1))
            samples = _t_map_rows(D.space, sub_rows, S)
        escapes = np.ones(samples.shape[0], dtype=bool)
        for i in I:
            vals = F.value_many_one(samples, rows[i])
            escapes &= vals < -tol
        counts.append(int(escapes.sum()))
    return counts


def kkm_cover_check(F, D: FinitePointSet, subsets, samples_per_subset: int,
                    seed: int = 0, tol: float = 1e-9) -> int:
    """Max over the index subsets of the number of sampled hull points x with
    F(x, x_i) < -tol for every i in the subset (KKM-cover violations)."""
    return max(kkm_cover_report(F, D, subsets, samples_per_subset,
                                seed=seed, tol=tol))


def _lattice_coords(m: int, points_per_axis: int) -> np.ndarray:
    if m == 1:
        return np.zeros((1, 0))
    axes = [np.linspace(0.0, 1.0, points_per_axis)] * (m - 1)
    return np.array(list(itertools.product(*axes)))


def finite_intersection_certify(F, D: FinitePointSet, lattice: int = 21,
                                tol: float = 1e-6):
    """Search the T-lattice for a point x with F(x, x_i) >= -tol for all i.

    Returns the feasible lattice point maximizing min_i F(x, x_i) (the most
    robust witness), or None when the sampled intersection is empty.
    """
    rows = D.rows()
    S = _lattice_coords(D.m, lattice)
    samples = _t_map_rows(D.space, rows, S) if D.m > 1 else rows[:1].copy()
    worst = np.full(samples.shape[0], np.inf)
    for i in range(D.m):
        vals = F.value_many_one(samples, rows[i])
        worst = np.minimum(worst, vals)
    best = int(np.argmax(worst))
    if worst[best] < -tol:
        return None
    return Point.from_array(D.space, samples[best], validate=False)
