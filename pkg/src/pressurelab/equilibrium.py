"""Weighted empirical measures and their distance to equilibrium.

An ensemble holds ``N`` uniform base points, their orbits and the
log-weights ``S_n(x_i) + log||wedge D_{x_i} f^n||``. The normalized-weight
average of the empirical measures along those orbits is the Monte Carlo
version of the tilted measure ``mu_n``, whose weak limits are equilibrium
states.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cocycle import CocycleAccumulator
from .manifold import histogram, sample_uniform, weak_distance
from .pressure import ESS_WARN_FRACTION

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightedEnsemble:
    points: np.ndarray   # (N, d) base points
    orbits: np.ndarray   # (N, n + 1, d); the extra point feeds the invariance defect
    n: int
    log_weights: np.ndarray
    seed: int

    @property
    def N(self):
        return len(self.points)

    @cached_property
    def shifted_weights(self):
        return np.exp(self.log_weights - self.log_weights.max())

    @cached_property
    def weights(self):
        """Normalized weights; they sum to one."""
        e = self.shifted_weights
        return e / e.sum()

    def average(self, values):
        """Weighted average over samples (first axis).

        With equal weights this is bit-identical to ``values.mean(axis=0)``.
        """
        e = self.shifted_weights
        return (e[:, None] * values).sum(axis=0) / e.sum()

    @cached_property
    def ess(self):
        return float(1.0 / np.sum(self.weights**2))

    def sample_moments(self, basis, K=None, shift=0):
        """Per-sample empirical moments, shape ``(N, K)``.

        ``shift=1`` averages ``g_k o f`` instead of ``g_k``.
        """
        K = basis.K if K is None else K
        pts = self.orbits[:, shift:shift + self.n]
        return basis.evaluate(pts)[..., :K].mean(axis=1)


def build_ensemble(system, potential, n, N, seed):
    if n < 1 or N < 1:
        raise ValueError("n and N must be at least 1")
    X = sample_uniform(system.d, N, seed)
    orbits = np.empty((N, n + 1, system.d))
    acc = CocycleAccumulator(N, system.d)
    S = np.zeros(N)
    x = X
    for i in range(n + 1):
        orbits[:, i] = x
        if i == n:
            break
        S += potential.evaluate(x)
        acc.update(system.jacobian(x))
        x = system.map(x)
    ens = WeightedEnsemble(points=X, orbits=orbits, n=n, log_weights=S + acc.log_wedge(), seed=seed)
    if ens.ess < ESS_WARN_FRACTION * N:
        log.warning("ensemble effective sample size %.1f of %d at n=%d", ens.ess, N, n)
    return ens


def ensemble_moments(ens, basis, K=None):
    return ens.average(ens.sample_moments(basis, K))


def invariance_defect(ens, basis, K=None):
    """``max_k |mu_n(g_k o f) - mu_n(g_k)|``."""
    a = ens.average(ens.sample_moments(basis, K))
    b = ens.average(ens.sample_moments(basis, K, shift=1))
    return float(np.max(np.abs(b - a)))


def equilibrium_histogram(ens, m):
    pts = ens.orbits[:, :ens.n].reshape(-1, ens.orbits.shape[-1])
    w = np.repeat(ens.weights / ens.n, ens.n)
    return histogram(pts, w, m)


def concentration_mass(ens, basis, target, radius, K=None):
    """Weight carried by samples whose empirical moments lie within ``radius``
    of ``target`` in the truncated weak distance."""
    K = len(target) if K is None else K
    dist = weak_distance(ens.sample_moments(basis, K), np.asarray(target)[:K])
    return float(ens.weights[np.atleast_1d(dist) <= radius].sum())
