"""Invariant suites run by ``pressurelab selfcheck``.

Each check returns ``(name, passed, detail)``; ``run_all`` collects them.
"""

import time

import numpy as np

from . import systems
from .cocycle import cocycle_spectrum, log_wedge_norm
from .empirical import orbit
from .equilibrium import build_ensemble
from .manifold import basis_for, sample_uniform, weak_distance
from .pressure import q_functional


def _benchmarks():
    return [
        systems.make_doubling(),
        systems.make_expanding_circle(2, 0.05),
        systems.make_expanding_circle(3, -0.1),
        systems.make_cat_map(),
        systems.make_torus_endomorphism([[3, 2], [1, 1]]),
        systems.make_torus_endomorphism([[2, 1], [0, 2]]),
    ]


def check_determinant_consistency(seed, samples=20, n_max=30, tol=1e-8):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for system in _benchmarks():
        for x in sample_uniform(system.d, samples, seed):
            n = int(rng.integers(1, n_max + 1))
            spectrum = cocycle_spectrum(system, x, n)
            ref = system.log_abs_det(orbit(system, x, n)).sum()
            worst = max(worst, abs(sum(spectrum.logsv) - ref))
    return "cocycle determinant consistency", worst <= tol, f"max gap {worst:.3g}"


def check_submultiplicativity(seed, samples=20, n_max=15, tol=1e-8):
    rng = np.random.default_rng(seed + 1)
    worst = -np.inf
    for system in _benchmarks():
        for x in sample_uniform(system.d, samples, seed + 1):
            n, m = (int(v) for v in rng.integers(1, n_max + 1, size=2))
            y = orbit(system, x, n + 1)[-1]
            lhs = log_wedge_norm(cocycle_spectrum(system, x, n + m))
            rhs = log_wedge_norm(cocycle_spectrum(system, x, n)) + log_wedge_norm(
                cocycle_spectrum(system, y, m))
            worst = max(worst, lhs - rhs)
    return "wedge norm sub-multiplicativity", worst <= tol, f"max excess {worst:.3g}"


def check_q_convexity(seed, N=20_000, n_range=range(6, 13), tol=0.02):
    g = systems.trig_potential({"cos1": 1.0})
    betas = np.linspace(-2, 2, 9)
    worst = np.inf
    for system in (systems.make_doubling(), systems.make_expanding_circle(2, 0.05)):
        gamma = systems.trig_potential({"sin1": 0.3})
        q = np.array([q_functional(system, gamma, b * g, n_range, N, seed) for b in betas])
        worst = min(worst, np.diff(q, 2).min())
    return "Q convexity (second differences)", worst >= -tol, f"min second difference {worst:.3g}"


def check_weight_normalization(seed, N=5000, trials=10, tol=1e-12):
    rng = np.random.default_rng(seed + 2)
    worst = 0.0
    for system in _benchmarks():
        for _ in range(trials // 2):
            coefs = rng.uniform(-3, 3, size=3)
            gamma = systems.trig_potential(dict(zip(["g1", "g2", "g3"], coefs)), system.d)
            ens = build_ensemble(system, gamma, int(rng.integers(1, 20)), N, int(rng.integers(1 << 30)))
            worst = max(worst, abs(ens.weights.sum() - 1.0))
    return "normalized weights sum to one", worst <= tol, f"max deviation {worst:.3g}"


def check_metric_axioms(seed, trials=500, K=8, tol=1e-12):
    rng = np.random.default_rng(seed + 3)
    a, b, c = (rng.uniform(-1, 1, size=(trials, K)) for _ in range(3))
    dab, dba = weak_distance(a, b), weak_distance(b, a)
    dac, dcb = weak_distance(a, c), weak_distance(c, b)
    ok = (
        np.all(dab >= 0)
        and np.allclose(dab, dba, atol=0, rtol=0)
        and np.all(dab <= dac + dcb + tol)
        and np.all(weak_distance(a, a) == 0)
        and np.all(dab > 0)
        and np.all(dab <= 2)
    )
    return "weak distance metric axioms", bool(ok), f"{trials} random triples"


def check_basis_bounds(seed, N=10_000):
    worst = 0.0
    for d in (1, 2):
        vals = basis_for(d).evaluate(sample_uniform(d, N, seed))
        worst = max(worst, np.abs(vals).max())
    return "test functions bounded by one", worst <= 1 + 1e-12, f"max |g_k| {worst:.17g}"


def check_jacobians(seed, N=1000):
    worst = max(systems.jacobian_selfcheck(s, N, seed) for s in _benchmarks())
    return "analytic Jacobians match finite differences", worst <= 1e-6, f"max gap {worst:.3g}"


CHECKS = [
    check_determinant_consistency,
    check_submultiplicativity,
    check_q_convexity,
    check_weight_normalization,
    check_metric_axioms,
    check_basis_bounds,
    check_jacobians,
]


def run_all(seed=0):
    results = []
    for check in CHECKS:
        t0 = time.perf_counter()
        name, ok, detail = check(seed)
        results.append((name, bool(ok), detail, time.perf_counter() - t0))
    return results
