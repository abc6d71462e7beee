"""Pure-Python (numpy) metric kernels for the leaf model spaces.

Mirror of the compiled extension ``_kernels_c``; the two backends expose the
same functions and must agree to within a few ulps.  Points are flat float64
arrays: Euclidean uses the coordinate vector, the hyperboloid uses the
ambient (dim+1)-vector on the upper sheet, a spider point is ``[ray, radius]``.
Product spaces are composed at a higher level from these leaf kernels.

Scalar entry points deliberately avoid numpy: payloads have at most a handful
of entries and the direct-search resolvent calls them in a tight loop.
"""

import math

import numpy as np

BACKEND = "pure"

EUCLIDEAN = 0
HYPERBOLOID = 1
SPIDER = 2


# -- scalar kernels ---------------------------------------------------------

def dist_scalar(kind, x, y):
    if kind == EUCLIDEAN:
        s = 0.0
        for i in range(len(x)):
            d = x[i] - y[i]
            s += d * d
        return math.sqrt(s)
    if kind == HYPERBOLOID:
        m = x[0] * y[0]
        for i in range(1, len(x)):
            m -= x[i] * y[i]
        # m = -<x,y>_minkowski; roundoff can push it just below 1
        if m < 1.0:
            m = 1.0
        return math.acosh(m)
    if kind == SPIDER:
        if x[0] == y[0]:
            return abs(x[1] - y[1])
        return x[1] + y[1]
    raise ValueError(f"unknown space kind {kind}")


def geodesic_scalar(kind, x, y, t):
    """Point at parameter t on the unit-speed-normalized geodesic x -> y.

    t may lie outside [0,1] (geodesic extension); spider extensions that
    would run through the hub with an ambiguous continuation raise.
    """
    if t == 0.0:
        return np.asarray(x, dtype=np.float64).copy()
    if t == 1.0:
        return np.asarray(y, dtype=np.float64).copy()
    if kind == EUCLIDEAN:
        out = np.empty(len(x))
        for i in range(len(x)):
            out[i] = (1.0 - t) * x[i] + t * y[i]
        return out
    if kind == HYPERBOLOID:
        d = dist_scalar(kind, x, y)
        if d == 0.0:
            return np.asarray(x, dtype=np.float64).copy()
        sd = math.sinh(d)
        a = math.sinh((1.0 - t) * d) / sd
        b = math.sinh(t * d) / sd
        out = np.empty(len(x))
        for i in range(len(x)):
            out[i] = a * x[i] + b * y[i]
        # renormalize onto the sheet
        m = out[0] * out[0]
        for i in range(1, len(out)):
            m -= out[i] * out[i]
        scale = 1.0 / math.sqrt(m)
        for i in range(len(out)):
            out[i] *= scale
        return out
    if kind == SPIDER:
        rx, ry = x[1], y[1]
        if x[0] == y[0]:
            r = (1.0 - t) * rx + t * ry
            if r < 0.0:
                raise ValueError("spider geodesic extension runs through the hub")
            return np.array([x[0] if r > 0.0 else 0.0, r])
        total = rx + ry
        s = t * total
        if s < 0.0:
            raise ValueError("spider geodesic extension runs through the hub")
        if s < rx:
            return np.array([x[0], rx - s])
        if s == rx:
            return np.array([0.0, 0.0])
        return np.array([y[0], s - rx])
    raise ValueError(f"unknown space kind {kind}")


# -- batch kernels ----------------------------------------------------------

def dist_rows(kind, X, Y):
    """Row-wise distances between (n, size) arrays."""
    if kind == EUCLIDEAN:
        diff = X - Y
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if kind == HYPERBOLOID:
        m = X[:, 0] * Y[:, 0] - np.einsum("ij,ij->i", X[:, 1:], Y[:, 1:])
        return np.arccosh(np.maximum(m, 1.0))
    if kind == SPIDER:
        same = X[:, 0] == Y[:, 0]
        return np.where(same, np.abs(X[:, 1] - Y[:, 1]), X[:, 1] + Y[:, 1])
    raise ValueError(f"unknown space kind {kind}")


def dist_one_many(kind, x, Y):
    """Distances from one point (size,) to each row of (n, size)."""
    if kind == EUCLIDEAN:
        diff = Y - x[None, :]
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if kind == HYPERBOLOID:
        m = x[0] * Y[:, 0] - Y[:, 1:] @ x[1:]
        return np.arccosh(np.maximum(m, 1.0))
    if kind == SPIDER:
        same = Y[:, 0] == x[0]
        return np.where(same, np.abs(Y[:, 1] - x[1]), Y[:, 1] + x[1])
    raise ValueError(f"unknown space kind {kind}")


def dist_sq_block_accum(kind, A, B, acc):
    """Add squared distances between all rows of A (m,) x B (n,) into acc (m, n)."""
    if kind == EUCLIDEAN:
        aa = np.einsum("ij,ij->i", A, A)
        bb = np.einsum("ij,ij->i", B, B)
        d2 = aa[:, None] + bb[None, :] - 2.0 * (A @ B.T)
        np.maximum(d2, 0.0, out=d2)
        acc += d2
        return
    if kind == HYPERBOLOID:
        m = np.outer(A[:, 0], B[:, 0]) - A[:, 1:] @ B[:, 1:].T
        d = np.arccosh(np.maximum(m, 1.0))
        acc += d * d
        return
    if kind == SPIDER:
        same = A[:, 0][:, None] == B[:, 0][None, :]
        d = np.where(same,
                     np.abs(A[:, 1][:, None] - B[:, 1][None, :]),
                     A[:, 1][:, None] + B[:, 1][None, :])
        acc += d * d
        return
    raise ValueError(f"unknown space kind {kind}")


def max_pairwise_sq(kind, X):
    """Largest squared distance between any two rows of X, chunked."""
    n = X.shape[0]
    best = 0.0
    chunk = 512
    for i0 in range(0, n, chunk):
        A = X[i0:i0 + chunk]
        acc = np.zeros((A.shape[0], n))
        dist_sq_block_accum(kind, A, X, acc)
        m = float(acc.max())
        if m > best:
            best = m
    return best


def geodesic_rows(kind, X, Y, T):
    """Row-wise geodesic points; T is an (n,) parameter vector."""
    T = np.asarray(T, dtype=np.float64)
    if kind == EUCLIDEAN:
        return (1.0 - T)[:, None] * X + T[:, None] * Y
    if kind == HYPERBOLOID:
        d = dist_rows(kind, X, Y)
        out = np.array(X, dtype=np.float64, copy=True)
        live = d > 0.0
        if np.any(live):
            dl = d[live]
            sd = np.sinh(dl)
            a = np.sinh((1.0 - T[live]) * dl) / sd
            b = np.sinh(T[live] * dl) / sd
            v = a[:, None] * X[live] + b[:, None] * Y[live]
            norm = v[:, 0] * v[:, 0] - np.einsum("ij,ij->i", v[:, 1:], v[:, 1:])
            v /= np.sqrt(norm)[:, None]
            out[live] = v
        exact = T == 0.0
        out[exact] = X[exact]
        exact = T == 1.0
        out[exact] = Y[exact]
        return out
    if kind == SPIDER:
        rx, ry = X[:, 1], Y[:, 1]
        same = X[:, 0] == Y[:, 0]
        out = np.empty_like(X)
        r_same = (1.0 - T) * rx + T * ry
        if np.any(same & (r_same < 0.0)):
            raise ValueError("spider geodesic extension runs through the hub")
        s = T * (rx + ry)
        if np.any(~same & (s < 0.0)):
            raise ValueError("spider geodesic extension runs through the hub")
        before = s < rx
        out[:, 0] = np.where(same,
                             np.where(r_same > 0.0, X[:, 0], 0.0),
                             np.where(before, X[:, 0],
                                      np.where(s > rx, Y[:, 0], 0.0)))
        out[:, 1] = np.where(same, r_same,
                             np.where(before, rx - s,
                                      np.where(s > rx, s - rx, 0.0)))
        exact = T == 0.0
        out[exact] = X[exact]
        exact = T == 1.0
        out[exact] = Y[exact]
        return out
    raise ValueError(f"unknown space kind {kind}")
