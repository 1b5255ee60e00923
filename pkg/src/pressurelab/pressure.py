"""Volume-growth pressure estimator.

For uniform samples ``x_i`` the partition sum at time ``n`` is estimated as

    Z_n = (1/N) sum_i exp(S_n(x_i) + log||wedge D_{x_i} f^n||)

with ``S_n`` the Birkhoff sum of the potential. ``log Z_n`` grows like
``n P + O(1)``; the headline pressure is the least-squares slope of
``log Z_n`` over the upper half of the requested ``n`` values, which removes
the constant that biases ``log Z_n / n``.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ._parallel import lse_combine, lse_partial, map_chunks, tree_reduce, uniform_chunk
from .cocycle import CocycleAccumulator

log = logging.getLogger(__name__)

ESS_WARN_FRACTION = 0.01


@dataclass(frozen=True)
class PressureEstimate:
    n: tuple
    log_Zn: np.ndarray
    Pn: np.ndarray
    slope: float
    intercept: float
    fit_n: tuple
    ess: np.ndarray
    N: int
    seed: int

    @property
    def value(self):
        return self.slope

    @property
    def P_last(self):
        return float(self.Pn[-1])

    @property
    def convergence_gap(self):
        return self.slope - self.P_last


def orbit_log_weights(system, potential, X, n_list, observables=None):
    """Log-weights ``S_n + log wedge`` at each ``n`` in ``n_list``.

    Returns an array of shape ``(N, len(n_list))``. With ``observables`` (a
    callable mapping points to ``(N, d_obs)`` values) the orbit averages of
    the observables at each ``n`` are returned too, shape
    ``(N, len(n_list), d_obs)``.
    """
    n_list = list(n_list)
    where = {n: j for j, n in enumerate(n_list)}
    N = len(X)
    acc = CocycleAccumulator(N, system.d)
    S = np.zeros(N)
    out = np.empty((N, len(n_list)))
    obs_sum = obs_out = None
    x = X
    for i in range(1, max(n_list) + 1):
        S += potential.evaluate(x)
        acc.update(system.jacobian(x))
        if observables is not None:
            v = observables(x)
            if obs_sum is None:
                obs_sum = np.zeros_like(v)
                obs_out = np.empty((N, len(n_list), v.shape[1]))
            obs_sum += v
        if i in where:
            out[:, where[i]] = S + acc.log_wedge()
            if observables is not None:
                obs_out[:, where[i]] = obs_sum / i
        x = system.map(x)
    return (out, obs_out) if observables is not None else out


def _reduce_log_weights(system, potential, n_list, N, seed, threads):
    def chunk(index, a, b):
        X = uniform_chunk(system.d, seed, index, b - a)
        return lse_partial(orbit_log_weights(system, potential, X, n_list))

    shift, total, squares, _ = tree_reduce(map_chunks(chunk, N, threads), lse_combine)
    log_z = shift + np.log(total) - np.log(N)
    ess = total * total / squares
    return log_z, ess


def log_Zn(system, potential, n, N, seed, threads=None):
    """Monte Carlo ``log Z_n``; exact when the integrand is constant."""
    if n < 1 or N < 1:
        raise ValueError("n and N must be at least 1")
    log_z, _ = _reduce_log_weights(system, potential, [n], N, seed, threads)
    return float(log_z[0])


def fit_window(n_values):
    """The ``n`` used by the slope fit: those at or above ``n_max / 2``."""
    n_values = np.asarray(n_values)
    keep = n_values >= n_values.max() / 2
    return n_values[keep] if keep.sum() >= 2 else n_values


def regression_slope(n_values, y):
    slope, intercept = np.polyfit(np.asarray(n_values, dtype=float), np.asarray(y), 1)
    return float(slope), float(intercept)


def estimate_pressure(system, potential, n_range, N, seed, threads=None):
    n_values = np.array(sorted(set(int(n) for n in n_range)))
    if len(n_values) < 3:
        raise ValueError("n_range needs at least three distinct values")
    if n_values[0] < 1 or N < 1:
        raise ValueError("n and N must be at least 1")
    log_z, ess = _reduce_log_weights(system, potential, n_values, N, seed, threads)
    fit_n = fit_window(n_values)
    sel = np.isin(n_values, fit_n)
    slope, intercept = regression_slope(fit_n, log_z[sel])
    if ess[-1] < ESS_WARN_FRACTION * N:
        log.warning("effective sample size %.1f of %d at n=%d for %s; estimate is unreliable",
                    ess[-1], N, n_values[-1], potential.name)
    return PressureEstimate(
        n=tuple(int(n) for n in n_values), log_Zn=log_z, Pn=log_z / n_values,
        slope=slope, intercept=intercept, fit_n=tuple(int(n) for n in fit_n),
        ess=ess, N=N, seed=seed,
    )


def q_functional(system, gamma, omega, n_range, N, seed, threads=None):
    """``P(gamma + omega) - P(gamma)`` with both estimates on the same samples."""
    base = estimate_pressure(system, gamma, n_range, N, seed, threads)
    tilted = estimate_pressure(system, gamma + omega, n_range, N, seed, threads)
    return tilted.value - base.value
