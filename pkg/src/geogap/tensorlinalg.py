"""Dense vectors, matrices and rank-3/rank-4 arrays used throughout geogap.

Everything is a plain ``numpy.ndarray``. Indices are 0-based here; reports
print them 1-based. Index conventions:

* ``G[i, j, k]`` holds a connection coefficient with upper index ``i``
  (``nabla_{e_k} e_j = G[i, j, k] e_i``).
* ``R[i, p, q, r]`` holds a curvature tensor with
  ``(R(u, v) w)^i = R[i, p, q, r] w^p u^q v^r``.

Leading batch axes are allowed on every argument and broadcast.
"""

import numpy as np

from .errors import DimensionError

MAX_DIM = 16


def as_vec(values, d=None):
    v = np.asarray(values, dtype=float)
    if v.ndim < 1:
        raise DimensionError("expected a vector, got a scalar")
    if d is not None and v.shape[-1] != d:
        raise DimensionError(f"expected vector of length {d}, got shape {v.shape}")
    return v


def _check(G, *vecs, rank):
    G = np.asarray(G, dtype=float)
    d = G.shape[-1]
    if G.ndim < rank or any(n != d for n in G.shape[-rank:]):
        raise DimensionError(f"expected a rank-{rank} array with equal axes, got {G.shape}")
    if d > MAX_DIM:
        raise DimensionError(f"dimension {d} exceeds supported maximum {MAX_DIM}")
    out = []
    for v in vecs:
        v = np.asarray(v, dtype=float)
        if v.ndim < 1 or v.shape[-1] != d:
            raise DimensionError(f"vector of shape {v.shape} does not match dimension {d}")
        out.append(v)
    return G, out


def contract_gamma(G, a, b):
    """Return ``G[i, j, k] a[j] b[k]``."""
    G, (a, b) = _check(G, a, b, rank=3)
    return np.einsum("...ijk,...j,...k->...i", G, a, b)


def curvature_apply(R, u, v, w):
    """Return ``R(u, v) w`` in chart components."""
    R, (u, v, w) = _check(R, u, v, w, rank=4)
    return np.einsum("...ipqr,...p,...q,...r->...i", R, w, u, v)


def curvature_operator(R, u, v):
    """The endomorphism ``R(u, v)`` as a matrix ``M[i, p]`` acting on ``w^p``."""
    R, (u, v) = _check(R, u, v, rank=4)
    return np.einsum("...ipqr,...q,...r->...ip", R, u, v)


def antisymmetrize(A):
    """Antisymmetrize an array in its last two indices."""
    A = np.asarray(A, dtype=float)
    return 0.5 * (A - np.swapaxes(A, -1, -2))


def naive_contract_gamma(G, a, b):
    """Triple-loop reference for :func:`contract_gamma` (unbatched)."""
    d = len(a)
    out = [0.0] * d
    for i in range(d):
        acc = 0.0
        for j in range(d):
            for k in range(d):
                acc += G[i][j][k] * a[j] * b[k]
        out[i] = acc
    return np.array(out)
