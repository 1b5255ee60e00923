"""Orbits, Birkhoff sums and empirical measures."""

from dataclasses import dataclass

import numpy as np

from .manifold import as_points


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform measure on the first ``n`` orbit points of ``x``."""

    x: tuple
    n: int
    points: np.ndarray  # (n, d)


def orbits(system, X, n):
    """Orbits of a batch of base points, shape ``(N, n, d)``; ``out[:, i] = f^i(X)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    p = as_points(X, system.d)
    out = np.empty((len(p), n, system.d))
    out[:, 0] = p
    for i in range(1, n):
        out[:, i] = system.map(out[:, i - 1])
    return out


def orbit(system, x, n):
    return orbits(system, as_points(x, system.d)[:1], n)[0]


def empirical_measure(system, x, n):
    pts = orbit(system, x, n)
    return EmpiricalMeasure(x=tuple(pts[0]), n=n, points=pts)


def birkhoff_sum(system, potential, x, n):
    """``sum_{i<n} potential(f^i x)``."""
    return float(potential.evaluate(orbit(system, x, n)).sum())


def moments(em, basis, K=None):
    """Averages of the first ``K`` test functions over the orbit points."""
    K = basis.K if K is None else K
    if K > basis.K:
        raise ValueError(f"basis holds only {basis.K} functions, asked for {K}")
    return basis.evaluate(em.points)[:, :K].mean(axis=0)
