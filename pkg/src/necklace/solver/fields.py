"""Time-Fourier representation ``u(x, t) = Σ_j a_j(x) cos(κ j ω t)``, j odd."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..gapcheck import FrequencyConfig
from ..graph import GraphFunction, NecklaceGrid


@dataclass
class TimeFourierField:
    """Real cosine coefficients ``a_j`` (rows) on a symmetric grid.

    Row ``r`` carries harmonic ``k = κ (2r+1)``.  ``nt`` is the number of
    collocation times on a half period used for nonlinear terms.
    """

    config: FrequencyConfig
    grid: NecklaceGrid
    coeffs: np.ndarray
    nt: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.grid.symmetric:
            raise ValueError("time-Fourier fields live on the symmetric subspace")
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        J = self.config.num_harmonics
        if self.coeffs.shape != (J, self.grid.ndof):
            raise ValueError(f"coeffs must have shape {(J, self.grid.ndof)}")
        if self.nt == 0:
            self.nt = default_nt(J)
        if self.nt < 4 * J:
            raise ValueError("nt must be >= 4 J")

    @classmethod
    def zeros(cls, config, grid, nt=0):
        return cls(config, grid, np.zeros((config.num_harmonics, grid.ndof)), nt)

    def like(self, coeffs) -> "TimeFourierField":
        return TimeFourierField(self.config, self.grid, coeffs, self.nt)

    @property
    def J(self) -> int:
        return self.config.num_harmonics

    @property
    def k(self) -> np.ndarray:
        return self.config.harmonics

    @property
    def period(self) -> float:
        """``T = 2π/ω``, the period over which the functional integrates."""
        return 2 * np.pi / self.config.omega

    @property
    def ansatz_period(self) -> float:
        """Exact period of the truncated ansatz, ``2π/(κω)``."""
        return 2 * np.pi / (self.config.kappa * self.config.omega)

    def harmonic(self, r: int) -> GraphFunction:
        return GraphFunction(self.grid, self.coeffs[r])

    def theta(self) -> np.ndarray:
        """Collocation phases ``θ_i = π i / nt`` of the fundamental ``κωt``."""
        return np.pi * np.arange(self.nt) / self.nt

    def basis(self, theta=None) -> np.ndarray:
        """``cos((2j-1) θ)``, shape ``(len(theta), J)``."""
        th = self.theta() if theta is None else np.asarray(theta, dtype=float)
        return np.cos(np.outer(th, 2 * np.arange(self.J) + 1))

    def sample(self, t) -> np.ndarray:
        """``u(x, t)`` for each time in ``t``; shape ``(len(t), ndof)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.basis(self.config.kappa * self.config.omega * t) @ self.coeffs

    def sample_dt(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = self.config.kappa * self.config.omega
        j = 2 * np.arange(self.J) + 1
        return -np.sin(np.outer(w * t, j)) * (w * j) @ self.coeffs

    def collocate(self) -> np.ndarray:
        """Values at the collocation phases, shape ``(nt, ndof)``."""
        return self.basis() @ self.coeffs

    def norm_l2(self) -> float:
        """Space-time ``L²`` norm over one period ``T``."""
        return float(np.sqrt(0.5 * self.period * np.sum(self.grid.weights * self.coeffs ** 2)))

    def __add__(self, other):
        return self.like(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.like(self.coeffs - other.coeffs)

    def __mul__(self, c):
        return self.like(self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.coeffs)


def default_nt(J: int) -> int:
    return max(4 * J, 8)


def pairing(u: TimeFourierField, v: TimeFourierField) -> float:
    """Space-time ``L²`` pairing ``∫_0^T ∫_Γ u v``."""
    return float(0.5 * u.period * np.sum(u.grid.weights * u.coeffs * v.coeffs))
