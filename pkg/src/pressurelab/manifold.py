"""Flat tori with normalized Lebesgue volume.

Points are stored as arrays with a trailing coordinate axis of length ``d``
(``d`` is 1 for the circle and 2 for the two-torus), every coordinate in
``[0, 1)``. The test functions used for the weak-star metric are products of
single-coordinate harmonics, each with sup-norm one.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._parallel import chunk_slices, uniform_chunk

DEFAULT_K = {1: 8, 2: 12}


def wrap(x):
    """Reduce modulo 1 into ``[0, 1)``.

    ``np.mod`` returns ``1.0`` for tiny negative inputs, which would put points
    outside the half-open cell; those are folded back to ``0.0``.
    """
    y = np.mod(x, 1.0)
    return np.where(y >= 1.0, 0.0, y)


def check_dimension(d):
    if d not in (1, 2):
        raise ValueError(f"only the circle (d=1) and two-torus (d=2) are supported, got d={d}")


@dataclass(frozen=True)
class Point:
    coords: tuple

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coords, dtype=float))
        check_dimension(c.size)
        object.__setattr__(self, "coords", tuple(float(v) for v in wrap(c)))

    @property
    def d(self):
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


def as_points(x, d=None):
    """Return ``x`` as a float array of shape ``(N, d)``."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1) if (d == 1 and a.size != 1) else a.reshape(1, -1)
    if d is not None and a.shape[-1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {a.shape}")
    return a


def sample_uniform(d, N, seed):
    """``N`` uniform points on the ``d``-torus, reproducible from ``seed``.

    The stream is chunked, so the first ``N`` points of a longer request are
    the same points.
    """
    check_dimension(d)
    if N < 1:
        raise ValueError("N must be at least 1")
    parts = [uniform_chunk(d, seed, i, b - a) for i, (a, b) in enumerate(chunk_slices(N))]
    return np.concatenate(parts, axis=0)


def _axis_harmonics(j):
    return [("1", 0)] if j == 0 else [("cos", j), ("sin", j)]


def _basis_labels(d, K):
    labels = []
    if d == 1:
        j = 1
        while len(labels) < K:
            labels += [(("cos", j),), (("sin", j),)]
            j += 1
        return labels[:K]
    shell = 1
    while len(labels) < K:
        pairs = [(a, b) for a in range(shell + 1) for b in range(shell + 1) if max(a, b) == shell]
        for a, b in pairs:
            for ha in _axis_harmonics(a):
                for hb in _axis_harmonics(b):
                    labels.append((ha, hb))
        shell += 1
    return labels[:K]


def _factor(kind, j, x):
    if kind == "1":
        return np.ones_like(x)
    t = 2.0 * np.pi * j * x
    return np.cos(t) if kind == "cos" else np.sin(t)


@dataclass(frozen=True)
class TestFunctionBasis:
    """The first ``K`` normalized test functions on the ``d``-torus.

    On the circle the order is ``cos(2πx), sin(2πx), cos(4πx), sin(4πx), ...``.
    On the two-torus the functions are products ``u(x) v(y)`` of axis
    harmonics, grouped by frequency pair ``(j1, j2)``: pairs with
    ``max(j1, j2) = 1`` first, then 2, and so on, lexicographically inside a
    group, and cos before sin inside a pair.
    """

    __test__ = False  # not a pytest class despite the name

    d: int
    K: int
    labels: tuple = field(init=False, repr=False)

    def __post_init__(self):
        check_dimension(self.d)
        if self.K < 1:
            raise ValueError("K must be at least 1")
        object.__setattr__(self, "labels", tuple(_basis_labels(self.d, self.K)))

    def name(self, k):
        """Readable name of the 1-based function ``k``."""
        parts = [f"{kind}{j}" if kind != "1" else "1" for kind, j in self.labels[k - 1]]
        return "*".join(parts)

    def evaluate(self, points):
        """Values of every basis function, shape ``points.shape[:-1] + (K,)``."""
        p = np.asarray(points, dtype=float)
        out = np.empty(p.shape[:-1] + (self.K,))
        for k, label in enumerate(self.labels):
            v = _factor(*label[0], p[..., 0])
            for axis, (kind, j) in enumerate(label[1:], start=1):
                v = v * _factor(kind, j, p[..., axis])
            out[..., k] = v
        return out

    def function(self, k):
        """The single 1-based test function ``g_k`` as a callable on points."""
        label = self.labels[k - 1]

        def g(points):
            p = np.asarray(points, dtype=float)
            v = _factor(*label[0], p[..., 0])
            for axis, (kind, j) in enumerate(label[1:], start=1):
                v = v * _factor(kind, j, p[..., axis])
            return v

        return g


def basis_for(d, K=None):
    return TestFunctionBasis(d, DEFAULT_K[d] if K is None else K)


def weak_distance(momA, momB):
    """Truncated weak-star distance ``sum_k 2^-k |momA_k - momB_k|``.

    Works on stacks of moment vectors (the last axis holds the moments).
    """
    a = np.asarray(momA, dtype=float)
    b = np.asarray(momB, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"moment vectors differ in length: {a.shape[-1]} vs {b.shape[-1]}")
    K = a.shape[-1]
    w = 0.5 ** np.arange(1, K + 1)
    dist = np.abs(a - b) @ w
    return float(dist) if np.ndim(dist) == 0 else dist


def tail_bound(K):
    """Largest possible contribution of the functions beyond ``K``."""
    return 2.0 ** -(K - 1)


@dataclass(frozen=True)
class HistogramMeasure:
    m: int
    d: int
    masses: np.ndarray

    @cached_property
    def cell_centers(self):
        c = (np.arange(self.m) + 0.5) / self.m
        if self.d == 1:
            return c[:, None]
        gx, gy = np.meshgrid(c, c, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=-1)


def histogram(points, weights, m):
    """Weighted histogram on the uniform ``m^d`` partition, normalized to mass 1."""
    p = np.asarray(points, dtype=float)
    p = p.reshape(-1, p.shape[-1])
    d = p.shape[1]
    check_dimension(d)
    w = np.broadcast_to(np.asarray(weights, dtype=float), p.shape[:1])
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    total = w.sum()
    if not total > 0:
        raise ValueError("weights are all zero")
    idx = np.minimum((wrap(p) * m).astype(np.int64), m - 1)
    flat = idx[:, 0] if d == 1 else idx[:, 0] * m + idx[:, 1]
    masses = np.bincount(flat, weights=w, minlength=m**d) / total
    return HistogramMeasure(m=m, d=d, masses=masses.reshape((m,) * d))
