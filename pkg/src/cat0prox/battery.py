"""Seeded geometry invariant battery for a model space.

Draws n random tuples and evaluates, fully vectorized:

* the comparison inequality gap along geodesics (must be >= -1e-10),
* the four-point Cauchy-Schwarz gap (>= -1e-10),
* the pairing identity <uv,uz> + <vu,vz> = d(u,v)^2 (residual <= 1e-10),
* the chord inequality lam*<zu,zv> <= <zx,zv> for x on the geodesic z->u
  (violation <= 1e-10),
* constant-speed reparametrization d(g(s), g(t)) = |s-t| d(x,y) (<= 1e-9),

and, on Euclidean spaces only, the flatness identities: the comparison gap
vanishes, the chord inequality is an equality, and u -> <zu,zv> is affine
along geodesics (all <= 1e-9).
"""

import time

import numpy as np

from .sampling import rng_from, sample_points
from .spaces import Euclidean, dist_rows_arr, geodesic_rows_arr

TOL_EXACT = 1e-10     # identities built from squared distances
TOL_TRANSCENDENTAL = 1e-9  # identities routed through geodesic evaluation

__all__ = ["geometry_battery", "TOL_EXACT", "TOL_TRANSCENDENTAL"]


def _sq(v):
    return v * v


def geometry_battery(space, samples: int, seed: int, scale: float = 3.0) -> dict:
    t_start = time.perf_counter()
    rng = rng_from(seed, "battery", repr(space))
    n = samples
    X = sample_points(space, n, rng, scale)
    Y = sample_points(space, n, rng, scale)
    U = sample_points(space, n, rng, scale)
    V = sample_points(space, n, rng, scale)
    Z = sample_points(space, n, rng, scale)
    lam = rng.random(n)
    s_par = rng.random(n)
    t_par = rng.random(n)

    dxu = dist_rows_arr(space, X, U)
    dxv = dist_rows_arr(space, X, V)
    duv = dist_rows_arr(space, U, V)

    # comparison inequality along the geodesic u -> v
    mid = geodesic_rows_arr(space, U, V, lam)
    dxm = dist_rows_arr(space, X, mid)
    cn = ((1.0 - lam) * _sq(dxu) + lam * _sq(dxv)
          - lam * (1.0 - lam) * _sq(duv) - _sq(dxm))
    max_cn_violation = max(0.0, -float(np.min(cn)))

    # four-point inequality
    dxy = dist_rows_arr(space, X, Y)
    dyu = dist_rows_arr(space, Y, U)
    dyv = dist_rows_arr(space, Y, V)
    cs = _sq(dxu) + _sq(dyv) + 2.0 * dxy * duv - _sq(dxv) - _sq(dyu)
    max_cs_violation = max(0.0, -float(np.min(cs)))

    # pairing identity at the two endpoints of u -> v
    duz = dist_rows_arr(space, U, Z)
    dvz = dist_rows_arr(space, V, Z)
    q_uv_uz = 0.5 * (_sq(duz) + _sq(duv) - _sq(dvz))
    q_vu_vz = 0.5 * (_sq(dvz) + _sq(duv) - _sq(duz))
    pairing_identity_residual = float(np.max(np.abs(q_uv_uz + q_vu_vz - _sq(duv))))

    # chord inequality: x on the geodesic z -> u at parameter lam
    dzu = dist_rows_arr(space, Z, U)
    dzv = dist_rows_arr(space, Z, V)
    chord = geodesic_rows_arr(space, Z, U, lam)
    dzx = dist_rows_arr(space, Z, chord)
    dxv_c = dist_rows_arr(space, chord, V)
    q_zu_zv = 0.5 * (_sq(dzu) + _sq(dzv) - _sq(duv))
    q_zx_zv = 0.5 * (_sq(dzx) + _sq(dzv) - _sq(dxv_c))
    chord_gap = q_zx_zv - lam * q_zu_zv
    chord_violation = max(0.0, -float(np.min(chord_gap)))

    # constant-speed reparametrization
    gs = geodesic_rows_arr(space, X, Y, s_par)
    gt = geodesic_rows_arr(space, X, Y, t_par)
    dst = dist_rows_arr(space, gs, gt)
    geodesic_scale_residual = float(np.max(np.abs(dst - np.abs(s_par - t_par) * dxy)))

    report = {
        "space": repr(space),
        "samples": n,
        "seed": seed,
        "max_cn_violation": max_cn_violation,
        "max_cs_violation": max_cs_violation,
        "pairing_identity_residual": pairing_identity_residual,
        "chord_violation": chord_violation,
        "geodesic_scale_residual": geodesic_scale_residual,
    }

    if isinstance(space, Euclidean):
        report["flat_cn_residual"] = float(np.max(np.abs(cn)))
        report["flat_chord_residual"] = float(np.max(np.abs(chord_gap)))
        # affinity of u -> <zu,zv> along the geodesic x -> y at lam
        mid_xy = geodesic_rows_arr(space, X, Y, lam)
        dzm = dist_rows_arr(space, Z, mid_xy)
        dmv = dist_rows_arr(space, mid_xy, V)
        q_zm_zv = 0.5 * (_sq(dzm) + _sq(dzv) - _sq(dmv))
        dzx2 = dist_rows_arr(space, Z, X)
        q_zx2_zv = 0.5 * (_sq(dzx2) + _sq(dzv) - _sq(dxv))
        dzy = dist_rows_arr(space, Z, Y)
        q_zy_zv = 0.5 * (_sq(dzy) + _sq(dzv) - _sq(dyv))
        report["flat_affine_residual"] = float(np.max(np.abs(
            q_zm_zv - (1.0 - lam) * q_zx2_zv - lam * q_zy_zv)))

    report["elapsed_s"] = time.perf_counter() - t_start
    report["pass"] = bool(
        max_cn_violation <= TOL_EXACT
        and max_cs_violation <= TOL_EXACT
        and pairing_identity_residual <= TOL_EXACT
        and chord_violation <= TOL_EXACT
        and geodesic_scale_residual <= TOL_TRANSCENDENTAL
        and report.get("flat_cn_residual", 0.0) <= TOL_TRANSCENDENTAL
        and report.get("flat_chord_residual", 0.0) <= TOL_TRANSCENDENTAL
        and report.get("flat_affine_residual", 0.0) <= TOL_TRANSCENDENTAL
    )
    return report
