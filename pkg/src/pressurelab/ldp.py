"""Large deviations of moment vectors under the tilted ensemble.

``estimate_nu_n`` measures the weighted mass ``nu_n(K)`` of samples whose
empirical moments ``delta_n(x)(g)`` fall in a box ``K``; ``rate_function``
tabulates the Legendre transform ``J_g(alpha) = max_beta (beta.alpha -
Q(beta.g))`` from pressure estimates on a beta grid; ``contraction_report``
compares the observed exponential decay of ``nu_n(K)`` with ``J_g(K)``.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from ._parallel import lse_combine, lse_partial, map_chunks, tree_reduce, uniform_chunk
from .manifold import basis_for
from .pressure import estimate_pressure, orbit_log_weights, regression_slope
from .systems import Potential

log = logging.getLogger(__name__)

MIN_COUNT = 30
DEFAULT_CAP = 1e3
DECAY_TOO_FAST = "decay too fast to measure"


@dataclass(frozen=True)
class ConstraintSet:
    """Closed box ``K`` in moment space for observables ``g_{k_1}, ..., g_{k_d}``.

    ``observables`` are 1-based basis indices; ``intervals`` holds one
    ``(lo, hi)`` per observable, infinite ends allowed. ``empty=True`` gives
    the empty set.
    """

    observables: tuple
    intervals: tuple
    empty: bool = False

    def __post_init__(self):
        obs = tuple(int(k) for k in self.observables)
        iv = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        if not obs:
            raise ValueError("at least one observable is required")
        if len(iv) != len(obs):
            raise ValueError("need one interval per observable")
        for lo, hi in iv:
            if not lo <= hi:
                raise ValueError(f"interval ({lo}, {hi}) is not ordered")
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "intervals", iv)

    @classmethod
    def whole(cls, observables):
        return cls(observables, [(-np.inf, np.inf)] * len(observables))

    @classmethod
    def nothing(cls, observables):
        return cls(observables, [(-np.inf, np.inf)] * len(observables), empty=True)

    @property
    def d(self):
        return len(self.observables)

    def contains(self, alpha, atol=1e-12):
        a = np.asarray(alpha, dtype=float)
        if self.empty:
            return np.zeros(a.shape[:-1], dtype=bool)
        lo = np.array([iv[0] for iv in self.intervals])
        hi = np.array([iv[1] for iv in self.intervals])
        return np.all((a >= lo - atol) & (a <= hi + atol), axis=-1)

    def contains_exact(self, alpha):
        return self.contains(alpha, atol=0.0)


def observable_fn(basis, observables):
    idx = np.asarray(observables) - 1
    return lambda x: basis.evaluate(x)[:, idx]


def observable_potential(basis, observables, beta):
    """``beta . g`` as a potential."""
    fn = observable_fn(basis, observables)
    beta = np.asarray(beta, dtype=float)
    name = " + ".join(f"{b:g}*{basis.name(k)}" for b, k in zip(beta, observables))
    return Potential(name, lambda x: fn(x) @ beta, float(np.abs(beta).sum()), basis.d)


@dataclass(frozen=True)
class LdpEstimate:
    n: tuple
    nu: np.ndarray
    log_nu_over_n: np.ndarray
    counts: np.ndarray
    slope: float
    fit_n: tuple
    N: int
    seed: int
    status: str

    @property
    def decay_rate(self):
        return None if self.slope is None else -self.slope


def estimate_nu_n(system, potential, cs, n_range, N, seed, threads=None, min_count=MIN_COUNT):
    n_values = np.array(sorted(set(int(n) for n in n_range)))
    if n_values[0] < 1 or N < 1:
        raise ValueError("n and N must be at least 1")
    basis = basis_for(system.d, max(cs.observables))
    obs = observable_fn(basis, cs.observables)

    def chunk(index, a, b):
        X = uniform_chunk(system.d, seed, index, b - a)
        logw, mom = orbit_log_weights(system, potential, X, n_values, obs)
        mask = cs.contains_exact(mom)
        return lse_partial(logw, masks=(mask,)), mask.sum(axis=0)

    parts = map_chunks(chunk, N, threads)
    _, total, _, (inside,) = tree_reduce([p for p, _ in parts], lse_combine)
    counts = np.sum([c for _, c in parts], axis=0)
    nu = inside / total
    for n, c in zip(n_values, counts):
        if c == 0:
            log.info("no satisfying samples at n=%d", n)
    with np.errstate(divide="ignore"):
        log_nu_over_n = np.log(nu) / n_values
    usable = (counts >= min_count) & (nu > 0)
    slope = None
    if usable.sum() >= 2:
        slope, _ = regression_slope(n_values[usable], np.log(nu[usable]))
    # once nu_n hits zero inside the range the tail is unresolved
    if slope is None or np.any(counts == 0):
        status = DECAY_TOO_FAST
    elif not usable.all():
        status = "partial"
    else:
        status = "ok"
    return LdpEstimate(
        n=tuple(int(n) for n in n_values), nu=nu, log_nu_over_n=log_nu_over_n,
        counts=counts, slope=slope, fit_n=tuple(int(n) for n in n_values[usable]),
        N=N, seed=seed, status=status,
    )


def _product_grid(values, d):
    v = np.asarray(values, dtype=float)
    if v.ndim == 2:
        return v
    return np.array(list(itertools.product(v, repeat=d)))


def _check_beta_grid(beta_axis):
    b = np.sort(np.asarray(beta_axis, dtype=float))
    if len(b) < 3 or not np.allclose(b, -b[::-1], atol=1e-12):
        raise ValueError("beta grid must be symmetric about zero")
    if not np.any(np.abs(b) < 1e-12):
        raise ValueError("beta grid must contain zero")
    if np.max(np.diff(b)) > 0.25 + 1e-12:
        raise ValueError("beta grid spacing must not exceed 0.25")


@dataclass(frozen=True)
class RateFunctionTable:
    observables: tuple
    alpha: np.ndarray        # (A, d)
    beta: np.ndarray         # (B, d)
    Q: np.ndarray            # (B,) estimated P(gamma + beta.g) - P(gamma)
    values: np.ndarray       # (A,)
    beta_argmax: np.ndarray  # (A, d)
    capped: np.ndarray       # (A,) bool
    cap: float
    alpha_axis: np.ndarray
    ess: np.ndarray          # (B,) effective sample size at the largest n
    n_range: tuple
    N: int
    seed: int

    @property
    def d(self):
        return len(self.observables)

    def minimum(self):
        """``(alpha, J)`` at the smallest uncapped entry.

        The table is flat near its minimum on a coarse beta grid; ties resolve
        to the middle of the flat stretch.
        """
        vals = np.where(self.capped, np.inf, self.values)
        ties = np.flatnonzero(vals <= vals.min() + 1e-12)
        i = int(ties[len(ties) // 2])
        return self.alpha[i], float(self.values[i])

    def region_minimum(self, cs):
        inside = cs.contains(self.alpha) & ~self.capped
        if not inside.any():
            raise ValueError("constraint region misses the alpha grid")
        i = np.flatnonzero(inside)[np.argmin(self.values[inside])]
        return self.alpha[i], float(self.values[i])

    def second_differences(self):
        """Second differences of uncapped entries along every grid line."""
        m = len(self.alpha_axis)
        vals = np.where(self.capped, np.nan, self.values).reshape((m,) * self.d)
        out = []
        for axis in range(self.d):
            dd = np.diff(vals, n=2, axis=axis)
            out.append(dd[np.isfinite(dd)])
        return np.concatenate(out)


def rate_function(system, potential, observables, alpha_grid, beta_grid, n_range, N, seed,
                  threads=None, cap=DEFAULT_CAP):
    """Legendre table of the contracted rate function on a grid.

    ``alpha_grid`` and ``beta_grid`` are per-coordinate axes; the tables use
    their Cartesian products. Entries with some ``|alpha_j| > 1`` cannot be
    moments of normalized test functions and are set to ``cap``.
    """
    observables = tuple(int(k) for k in observables)
    d = len(observables)
    _check_beta_grid(beta_grid)
    basis = basis_for(system.d, max(observables))
    alpha_axis = np.asarray(alpha_grid, dtype=float)
    alpha = _product_grid(alpha_axis, d)
    beta = _product_grid(beta_grid, d)

    base = estimate_pressure(system, potential, n_range, N, seed, threads)
    Q = np.empty(len(beta))
    ess = np.empty(len(beta))
    for j, b in enumerate(beta):
        if not np.any(b):
            Q[j], ess[j] = 0.0, base.ess[-1]
            continue
        est = estimate_pressure(system, potential + observable_potential(basis, observables, b),
                                n_range, N, seed, threads)
        Q[j] = est.value - base.value
        ess[j] = est.ess[-1]

    affine = alpha @ beta.T - Q[None, :]
    arg = np.argmax(affine, axis=1)
    values = affine[np.arange(len(alpha)), arg]
    capped = np.any(np.abs(alpha) > 1 + 1e-12, axis=1)
    values = np.where(capped, np.maximum(values, cap), values)
    return RateFunctionTable(
        observables=observables, alpha=alpha, beta=beta, Q=Q, values=values,
        beta_argmax=beta[arg], capped=capped, cap=cap, alpha_axis=alpha_axis, ess=ess,
        n_range=tuple(int(n) for n in n_range), N=N, seed=seed,
    )


@dataclass(frozen=True)
class ContractionReport:
    decay_rate: float
    J_region: float
    alpha_min: np.ndarray
    abs_gap: float
    rel_gap: float
    status: str


def contraction_report(ldp, table, cs):
    alpha_min, J = table.region_minimum(cs)
    if ldp.status == DECAY_TOO_FAST:
        return ContractionReport(None, J, alpha_min, None, None, ldp.status)
    rate = -ldp.slope
    gap = abs(rate - J)
    rel = gap / J if J > 0 else float("nan")
    return ContractionReport(rate, J, alpha_min, gap, rel, "ok")
