"""Log singular values of the Jacobian cocycle ``D_x f^n``.

Products of Jacobians are never formed. In one dimension the log-derivatives
are summed along the orbit. In two dimensions the product is carried as
``Q R`` with ``Q`` re-orthonormalized after every step and ``R`` upper
triangular, stored as ``exp(a) [[1, b], [0, c]]``; the singular values of that
triangle follow in closed form and the small one is recovered through the
determinant, so neither overflows nor cancels.
"""

from dataclasses import dataclass

import numpy as np

from .manifold import as_points


@dataclass(frozen=True)
class CocycleSpectrum:
    n: int
    logsv: tuple

    @property
    def log_det(self):
        return float(sum(self.logsv))


class CocycleAccumulator:
    """Running log singular values for a batch of ``N`` base points."""

    def __init__(self, N, d):
        self.N, self.d, self.n = N, d, 0
        self.log_det = np.zeros(N)
        if d == 2:
            self.Q = np.broadcast_to(np.eye(2), (N, 2, 2)).copy()
            self.log_a = np.zeros(N)
            self.b = np.zeros(N)
            self.c = np.ones(N)

    def update(self, J):
        """Left-multiply the cocycle by one step of Jacobians ``J`` (N, d, d)."""
        self.n += 1
        if self.d == 1:
            self.log_det += np.log(np.abs(J[:, 0, 0]))
            return
        Q, R = np.linalg.qr(J @ self.Q)
        s = np.where(np.diagonal(R, axis1=1, axis2=2) < 0, -1.0, 1.0)
        self.Q = Q * s[:, None, :]
        R = R * s[:, :, None]
        r11, r12, r22 = R[:, 0, 0], R[:, 0, 1], R[:, 1, 1]
        self.log_det += np.log(r11) + np.log(r22)
        self.log_a += np.log(r11)
        self.b = self.b + (r12 / r11) * self.c
        self.c = (r22 / r11) * self.c

    def log_singular_values(self):
        """Descending log singular values, shape (N, d)."""
        if self.d == 1:
            return self.log_det[:, None].copy()
        F2 = 1.0 + self.b**2 + self.c**2
        disc = np.sqrt(np.maximum(F2 * F2 - 4.0 * self.c**2, 0.0))
        log_s1 = self.log_a + 0.5 * np.log(0.5 * (F2 + disc))
        return np.stack([log_s1, self.log_det - log_s1], axis=1)

    def log_wedge(self):
        return wedge_from_logsv(self.log_singular_values())


def wedge_from_logsv(logsv):
    """``max_j`` of the top-``j`` partial sums, ``j = 0`` included."""
    return np.maximum(np.asarray(logsv), 0.0).sum(axis=-1)


def cocycle_spectrum(system, x, n):
    if n < 1:
        raise ValueError("n must be at least 1")
    p = as_points(x, system.d)[:1]
    acc = CocycleAccumulator(1, system.d)
    for _ in range(n):
        acc.update(system.jacobian(p))
        p = system.map(p)
    return CocycleSpectrum(n=n, logsv=tuple(float(v) for v in acc.log_singular_values()[0]))


def log_wedge_norm(spectrum):
    """Log of the largest exterior-power norm of ``D_x f^n``.

    Includes ``j = 0``, so the result is never negative.
    """
    return float(wedge_from_logsv(spectrum.logsv))
