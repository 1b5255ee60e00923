"""Benchmark maps and potentials.

Two families ship: uniformly expanding circle maps
``x -> k x + eps sin(2 pi x) mod 1`` and linear endomorphisms of the
two-torus ``x -> M x mod 1``. Both have exact Jacobians and classical
uniqueness of equilibrium states for smooth potentials.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from .manifold import as_points, basis_for, sample_uniform, wrap


class InvalidSystemError(ValueError):
    """System parameters violate the family's preconditions."""


class MalformedPotentialError(ValueError):
    """A potential or system description could not be understood."""


@dataclass(frozen=True)
class SmoothSystem:
    name: str
    d: int
    map: object
    jacobian: object
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    known: dict = field(default_factory=dict)
    # min and max of log|det Df| over the manifold
    log_det_range: tuple = (-np.inf, np.inf)
    # continuous lift R -> R of a circle map, used by the transfer operator
    lift: object = None
    degree: int = None

    def __call__(self, x):
        return self.map(as_points(x, self.d))

    def log_abs_det(self, x):
        J = self.jacobian(as_points(x, self.d))
        if self.d == 1:
            return np.log(np.abs(J[:, 0, 0]))
        return np.log(np.abs(np.linalg.det(J)))


def make_expanding_circle(k, eps=0.0):
    """Circle map ``x -> k x + eps sin(2 pi x) mod 1``.

    Requires ``k - 2 pi |eps| > 1`` so that ``f'`` exceeds one everywhere.
    """
    if int(k) != k or k < 2:
        raise InvalidSystemError(f"degree k must be an integer >= 2, got {k}")
    k = int(k)
    eps = float(eps)
    lo, hi = k - 2 * np.pi * abs(eps), k + 2 * np.pi * abs(eps)
    if not lo > 1:
        raise InvalidSystemError(
            f"map is not uniformly expanding: k - 2*pi*|eps| = {lo:.6g} <= 1")

    def lift(y):
        y = np.asarray(y, dtype=float)
        return k * y + eps * np.sin(2 * np.pi * y) if eps else k * y

    def fmap(x):
        return wrap(lift(x))

    def jac(x):
        x = np.asarray(x, dtype=float)
        dv = k + 2 * np.pi * eps * np.cos(2 * np.pi * x[:, 0]) if eps else np.full(len(x), float(k))
        return dv[:, None, None]

    name = f"expanding(k={k}, eps={eps:g})"
    return SmoothSystem(
        name=name, d=1, map=fmap, jacobian=jac, kind="expanding",
        params={"k": k, "eps": eps},
        known={"topological_entropy": np.log(k)},
        log_det_range=(np.log(lo), np.log(hi)),
        lift=lift, degree=k,
    )


def make_doubling():
    return make_expanding_circle(2, 0.0)


def make_torus_endomorphism(M):
    """Linear toral endomorphism ``x -> M x mod 1`` for an integer 2x2 ``M``."""
    A = np.asarray(M)
    if A.shape != (2, 2) or not np.all(np.equal(np.round(A), A)):
        raise InvalidSystemError(f"M must be a 2x2 integer matrix, got {M!r}")
    A = A.astype(np.int64)
    det = int(round(np.linalg.det(A)))
    if det == 0:
        raise InvalidSystemError("M is singular")
    Af = A.astype(float)
    eig = np.linalg.eigvals(Af)
    # entropy of a toral endomorphism: sum of log|lambda| over |lambda| > 1
    h_top = float(np.sum(np.log(np.abs(eig[np.abs(eig) > 1]))))
    logdet = float(np.log(abs(det)))

    def fmap(x):
        return wrap(np.asarray(x, dtype=float) @ Af.T)

    def jac(x):
        return np.broadcast_to(Af, (len(x), 2, 2)).copy()

    return SmoothSystem(
        name=f"torus({A[0, 0]},{A[0, 1]};{A[1, 0]},{A[1, 1]})", d=2, map=fmap, jacobian=jac,
        kind="torus", params={"matrix": A.tolist()},
        known={"topological_entropy": h_top},
        log_det_range=(logdet, logdet),
    )


def make_cat_map():
    return make_torus_endomorphism([[2, 1], [1, 1]])


@dataclass(frozen=True)
class Potential:
    name: str
    evaluate: object
    bound: float
    d: int = None

    def __call__(self, x):
        p = as_points(x, self.d)
        return np.asarray(self.evaluate(p), dtype=float).reshape(len(p))

    def __add__(self, other):
        if isinstance(other, Potential):
            f, g = self.evaluate, other.evaluate
            return Potential(f"{self.name} + {other.name}", lambda x: f(x) + g(x),
                             self.bound + other.bound, self.d or other.d)
        c = float(other)
        f = self.evaluate
        return Potential(f"{self.name} + {c:g}", lambda x: f(x) + c, self.bound + abs(c), self.d)

    __radd__ = __add__

    def __mul__(self, c):
        c = float(c)
        f = self.evaluate
        return Potential(f"{c:g}*({self.name})", lambda x: c * f(x), abs(c) * self.bound, self.d)

    __rmul__ = __mul__


def constant_potential(c, d=None):
    c = float(c)
    return Potential(f"{c:g}", lambda x: np.full(len(x), c), abs(c), d)


ZERO = constant_potential(0.0)

_TERM = re.compile(r"^(cos|sin)(\d+)$|^g(\d+)$")


def _basis_index(key, d):
    m = _TERM.match(str(key).strip())
    if not m:
        raise MalformedPotentialError(f"unrecognized trig term {key!r}; use cos<j>, sin<j> or g<k>")
    if m.group(3):
        return int(m.group(3))
    if d != 1:
        raise MalformedPotentialError(f"term {key!r} is only defined on the circle; use g<k> on the torus")
    j = int(m.group(2))
    if j < 1:
        raise MalformedPotentialError(f"frequency must be positive in {key!r}")
    return 2 * j - 1 if m.group(1) == "cos" else 2 * j


def trig_potential(terms, d=1):
    """Finite combination of test functions, e.g. ``{"cos1": 0.5}``."""
    if not terms:
        raise MalformedPotentialError("trig potential needs at least one term")
    idx = {}
    for key, c in dict(terms).items():
        k = _basis_index(key, d)
        idx[k] = idx.get(k, 0.0) + float(c)
    basis = basis_for(d, max(idx))
    ks = np.array(sorted(idx)) - 1
    coef = np.array([idx[k + 1] for k in ks])

    def ev(x):
        return basis.evaluate(x)[..., ks] @ coef

    name = " + ".join(f"{idx[k + 1]:g}*{basis.name(k + 1)}" for k in ks)
    return Potential(name, ev, float(np.abs(coef).sum()), d)


def geometric_potential(system, t=1.0):
    """``-t log|det Df|``."""
    lo, hi = system.log_det_range
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise MalformedPotentialError("geometric potential needs a system with bounded log|det Df|")
    t = float(t)
    jac = system.jacobian
    d = system.d

    def ev(x):
        J = jac(x)
        det = J[:, 0, 0] if d == 1 else np.linalg.det(J)
        return -t * np.log(np.abs(det))

    return Potential(f"-{t:g}*log|det Df|", ev, abs(t) * max(abs(lo), abs(hi)), d)


def make_potential(desc, system=None):
    """Build a potential from a description.

    ``desc`` is a ``Potential``, a number (constant), or a mapping with
    ``kind`` in ``{"zero", "constant", "trig", "geometric"}`` plus ``c``,
    ``terms`` or ``t`` respectively.
    """
    if isinstance(desc, Potential):
        return desc
    d = system.d if system is not None else None
    if isinstance(desc, (int, float)):
        return constant_potential(desc, d)
    if not isinstance(desc, dict) or "kind" not in desc:
        raise MalformedPotentialError(f"malformed potential description {desc!r}")
    kind = desc["kind"]
    try:
        if kind == "zero":
            return constant_potential(0.0, d)
        if kind == "constant":
            return constant_potential(desc["c"], d)
        if kind == "trig":
            return trig_potential(desc["terms"], d or desc.get("d", 1))
        if kind == "geometric":
            sysm = desc.get("system", system)
            if sysm is None:
                raise MalformedPotentialError("geometric potential requires a system")
            return geometric_potential(sysm, desc.get("t", 1.0))
    except KeyError as e:
        raise MalformedPotentialError(f"potential description of kind {kind!r} is missing {e}") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, MalformedPotentialError):
            raise
        raise MalformedPotentialError(f"malformed potential description {desc!r}: {e}") from None
    raise MalformedPotentialError(f"unknown potential kind {kind!r}")


def finite_difference_jacobian(system, x, h=1e-5):
    x = as_points(x, system.d)
    d = system.d
    out = np.empty((len(x), d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        diff = system.map(wrap(x + e)) - system.map(wrap(x - e))
        diff -= np.round(diff)  # undo wrap-around between the two images
        out[:, :, j] = diff / (2 * h)
    return out


def jacobian_selfcheck(system, N=1000, seed=0):
    """Max sup-norm gap between the analytic and central-difference Jacobians."""
    x = sample_uniform(system.d, N, seed)
    gap = np.abs(system.jacobian(x) - finite_difference_jacobian(system, x))
    return float(gap.max())
