"""Deterministic seeded samplers for the model spaces.

Every sampler is driven by a numpy Generator derived from a single 64-bit
root seed plus a label path, so identical configs reproduce identical grids.
"""

import math
import zlib

import numpy as np
from scipy.stats import qmc

from . import kernels as K
from .spaces import (Euclidean, Hyperboloid, Product, Spider, leaf_plan,
                     hyperboloid_exp, hyperboloid_tangent_basis, payload_size)


def rng_from(seed, *labels):
    """Generator for a named sub-stream of the root seed."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for lab in labels:
        if isinstance(lab, int):
            entropy.append(lab & 0xFFFFFFFF)
        else:
            entropy.append(zlib.crc32(str(lab).encode()))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def halton_unit(n, d, rng):
    """n scrambled Halton points in [0,1]^d; scrambling seeded by rng."""
    sampler = qmc.Halton(d=d, scramble=True, seed=rng)
    return sampler.random(n)


def sample_points(space, n, rng, scale=3.0):
    """(n, payload) array of points spread over a bounded chunk of the space."""
    if isinstance(space, Product):
        left = sample_points(space.left, n, rng, scale)
        right = sample_points(space.right, n, rng, scale)
        return np.hstack([left, right])
    if isinstance(space, Euclidean):
        return rng.uniform(-scale, scale, size=(n, space.dim))
    if isinstance(space, Hyperboloid):
        z = rng.uniform(-scale, scale, size=(n, space.dim))
        x0 = np.sqrt(1.0 + np.einsum("ij,ij->i", z, z))
        return np.hstack([x0[:, None], z])
    if isinstance(space, Spider):
        rays = rng.integers(0, space.rays, size=n).astype(np.float64)
        radii = rng.uniform(0.0, scale, size=n)
        radii[rng.random(n) < 0.02] = 0.0   # visit the hub now and then
        rays[radii == 0.0] = 0.0
        return np.column_stack([rays, radii])
    raise ValueError(f"unknown space {space!r}")


def sample_near(space, center, radius, n, rng):
    """(n, payload) array of points within roughly ``radius`` of ``center``."""
    if isinstance(space, Product):
        nl = payload_size(space.left)
        r = radius / math.sqrt(2.0)
        left = sample_near(space.left, center[:nl], r, n, rng)
        right = sample_near(space.right, center[nl:], r, n, rng)
        return np.hstack([left, right])
    if isinstance(space, Euclidean):
        u = rng.normal(size=(n, space.dim))
        norms = np.linalg.norm(u, axis=1)
        norms[norms == 0.0] = 1.0
        scales = radius * rng.random(n) ** (1.0 / space.dim)
        return center[None, :] + u * (scales / norms)[:, None]
    if isinstance(space, Hyperboloid):
        basis = hyperboloid_tangent_basis(np.asarray(center))
        u = rng.normal(size=(n, basis.shape[0]))
        norms = np.linalg.norm(u, axis=1)
        norms[norms == 0.0] = 1.0
        scales = radius * rng.random(n) ** (1.0 / space.dim)
        out = np.empty((n, space.dim + 1))
        for i in range(n):
            v = (u[i] * scales[i] / norms[i]) @ basis
            out[i] = hyperboloid_exp(np.asarray(center), v)
        return out
    if isinstance(space, Spider):
        r0 = center[1]
        steps = radius * (2.0 * rng.random(n) - 1.0)
        radii = r0 + steps
        rays = np.full(n, center[0])
        crossed = radii < 0.0
        rays[crossed] = rng.integers(0, space.rays, size=int(crossed.sum()))
        radii[crossed] = -radii[crossed]
        rays[radii == 0.0] = 0.0
        return np.column_stack([rays, radii])
    raise ValueError(f"unknown space {space!r}")
