"""Transfer-operator ground truth for expanding circle maps.

The operator ``(L h)(x) = sum_{f(y)=x} exp(gamma(y)) h(y)`` is collocated on
the midpoints ``z_i = (i + 1/2)/M``. Preimages of grid points are solved per
inverse branch, and ``h`` at a preimage is interpolated from the grid with a
local periodic Lagrange stencil (cubic by default, linear on request). Power
iteration gives the leading eigenvalue ``lambda = exp(P)``, the right
eigenvector ``h`` and the left eigenvector ``rho``; the equilibrium state
carries weight ``rho_i h_i`` on node ``i``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .systems import InvalidSystemError


class OracleError(RuntimeError):
    """Power iteration failed to converge."""


@dataclass(frozen=True)
class TransferOperatorModel:
    system: object
    potential: object
    M: int
    interp: str
    grid: np.ndarray
    matrix: sparse.csr_matrix
    eigenvalue: float
    h: np.ndarray
    rho: np.ndarray
    iterations: int
    residual: float

    @property
    def gibbs_weights(self):
        return self.rho * self.h


def inverse_branches(system, z, tol=1e-14):
    """Preimages of ``z`` in ``[0, 1)``, one row per branch."""
    lift, k = system.lift, system.degree
    out = np.empty((k, len(z)))
    for b in range(k):
        target = z + b
        lo = np.zeros_like(z)
        hi = np.ones_like(z)
        # the lift is increasing from 0 to k on [0, 1]
        while np.max(hi - lo) > tol:
            mid = 0.5 * (lo + hi)
            below = lift(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        y = 0.5 * (lo + hi)
        for _ in range(2):
            y = y - (lift(y) - target) / system.jacobian(y[:, None])[:, 0, 0]
        out[b] = np.clip(y, 0.0, np.nextafter(1.0, 0.0))
    return out


def _stencil(s, interp):
    if interp == "linear":
        return [(0, 1 - s), (1, s)]
    if interp == "cubic":
        return [
            (-1, -s * (s - 1) * (s - 2) / 6),
            (0, (s + 1) * (s - 1) * (s - 2) / 2),
            (1, -(s + 1) * s * (s - 2) / 2),
            (2, (s + 1) * s * (s - 1) / 6),
        ]
    raise ValueError(f"unknown interpolation {interp!r}")


def _power_iteration(apply, v, tol, max_iter):
    v = v / v.sum()
    for it in range(1, max_iter + 1):
        w = apply(v)
        w = w / w.sum()
        if np.max(np.abs(w - v)) * len(v) < tol:
            return w, it
        v = w
    raise OracleError(f"power iteration did not converge in {max_iter} steps")


def build_operator(system, potential, M=512, interp="cubic", tol=1e-13, max_iter=100_000):
    if system.kind != "expanding" or system.lift is None or system.d != 1:
        raise InvalidSystemError("the transfer-operator oracle covers expanding circle maps only")
    if M < 8:
        raise ValueError("grid size M must be at least 8")
    z = (np.arange(M) + 0.5) / M
    pre = inverse_branches(system, z)
    rows, cols, vals = [], [], []
    for y in pre:
        w = np.exp(potential.evaluate(y[:, None]))
        t = y * M - 0.5
        i0 = np.floor(t).astype(np.int64)
        for off, c in _stencil(t - i0, interp):
            rows.append(np.arange(M))
            cols.append((i0 + off) % M)
            vals.append(w * c)
    L = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(M, M))
    LT = L.T.tocsr()

    h, it_h = _power_iteration(lambda v: L @ v, np.ones(M), tol, max_iter)
    rho, it_r = _power_iteration(lambda v: LT @ v, np.ones(M), tol, max_iter)
    Lh = L @ h
    lam = float(Lh.sum() / h.sum())
    h = h / float(rho @ h)
    residual = float(np.max(np.abs(L @ h - lam * h)) / np.max(np.abs(h)))
    return TransferOperatorModel(
        system=system, potential=potential, M=M, interp=interp, grid=z, matrix=L,
        eigenvalue=lam, h=h, rho=rho, iterations=max(it_h, it_r), residual=residual,
    )


def oracle_pressure(model):
    return float(np.log(model.eigenvalue))


def oracle_gibbs_moments(model, basis, K=None):
    K = basis.K if K is None else K
    return model.gibbs_weights @ basis.evaluate(model.grid[:, None])[:, :K]


def oracle_mean(model, fn):
    """Integral of ``fn`` against the equilibrium state."""
    return float(model.gibbs_weights @ fn(model.grid[:, None]))


def oracle_entropy(model):
    """Entropy of the equilibrium state, ``P - integral of the potential``."""
    return oracle_pressure(model) - oracle_mean(model, model.potential.evaluate)
