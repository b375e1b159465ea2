"""Shifted operators ``L_k = -Δ_h - ω²k² + α`` and their spectral calculus.

All ``L_k`` share the eigenvectors of ``-Δ_h``, which is symmetric in the
weighted inner product.  One dense eigendecomposition of
``W^{-1/2} S W^{-1/2} = Q diag(μ) Qᵀ`` therefore gives every projector,
the ``𝓗`` norm, and an exact diagonal resolvent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..exceptions import CertificationError, ResonanceError
from ..gapcheck import FrequencyConfig, delta_star
from ..graph import NecklaceGrid
from ..spectrum import band_closed_form
from .fields import TimeFourierField

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShiftedOperator:
    """``L_k`` as the symmetric form ``K = S + (α - ω²k²) W`` plus weights."""

    k: int
    form: sp.csr_matrix
    weights: np.ndarray

    def apply(self, a: np.ndarray) -> np.ndarray:
        return (self.form @ a) / self.weights

    def quadratic(self, a: np.ndarray, b: np.ndarray | None = None) -> float:
        """``b_{L_k}(a, b)``."""
        return float((a if b is None else b) @ (self.form @ a))

    @property
    def matrix(self) -> sp.csr_matrix:
        return (sp.diags(1 / self.weights) @ self.form).tocsr()


def assemble_Lk(config: FrequencyConfig, k: int, grid: NecklaceGrid) -> ShiftedOperator:
    shift = config.alpha - config.omega ** 2 * k * k
    w = grid.weights
    K = (grid.stiffness + sp.diags(shift * w)).tocsr()
    return ShiftedOperator(int(k), K, w)


def lattice_negative_count(config: FrequencyConfig, k: int, cells: int) -> int:
    """``#{(m, l_j) : λ_m(l_j) < ω²k² - α}`` on the lattice ``l_j = j/cells``."""
    level = config.omega ** 2 * k * k - config.alpha
    mmax = int(np.ceil(np.sqrt(max(level, 0)))) + 2
    half = cells // 2
    count = 0
    for j in range(-half, cells - half):
        l = j / cells
        if l <= -0.5:
            l += 1
        count += sum(band_closed_form(m, l).lam < level for m in range(-mmax, mmax + 1))
    return count


class ModalOperators:
    """Spectral data of all retained ``L_k`` on one grid.

    ``d[r, i] = μ_i + α - ω²k_r²`` are the eigenvalues of ``L_k`` for the
    harmonic in row ``r``; modal coefficients are ``c = Qᵀ W^{1/2} a``.
    """

    def __init__(self, config: FrequencyConfig, grid: NecklaceGrid, *,
                 gap_fraction: float = 0.1, force_uncertified: bool = False):
        if not grid.symmetric:
            raise ValueError("solver grids must use symmetric storage")
        self.config = config
        self.grid = grid
        cert = delta_star(config)
        self.certificate = cert
        if cert.delta_star <= 0 and not force_uncertified:
            raise CertificationError(f"configuration resonates: delta_star = {cert.delta_star}")
        self.gap_fraction = gap_fraction
        self.force_uncertified = force_uncertified
        w = grid.weights
        self.weights = w
        self.sqrt_w = np.sqrt(w)
        A = grid.stiffness.toarray()
        A /= self.sqrt_w[:, None]
        A /= self.sqrt_w[None, :]
        self.mu, self.Q = np.linalg.eigh(A)
        k = config.harmonics.astype(float)
        self.d = self.mu[None, :] + config.alpha - (config.omega * k)[:, None] ** 2
        self.T = 2 * np.pi / config.omega
        self._check_resonance()

    def _check_resonance(self):
        gap_h = float(np.abs(self.d).min())
        self.discrete_gap = gap_h
        problems = []
        if self.grid.boundary == "periodic_cells":
            for r, k in enumerate(self.config.harmonics):
                want = lattice_negative_count(self.config, int(k), self.grid.cell_count)
                got = int((self.d[r] < 0).sum())
                if got != want:
                    problems.append(f"k={k}: {got} negative modes, lattice count {want}")
        ref = self.certificate.delta_star
        if ref > 0 and gap_h < self.gap_fraction * ref:
            problems.append(f"discrete gap {gap_h:.3e} below {self.gap_fraction} * delta_star")
        if problems and not self.force_uncertified:
            raise ResonanceError("discrete resonance: " + "; ".join(problems)
                                 + " (refine the grid, or use periodic_cells)")
        for msg in problems:
            log.warning(msg)

    # -- coordinates -------------------------------------------------------

    def to_modal(self, coeffs: np.ndarray) -> np.ndarray:
        return (coeffs * self.sqrt_w) @ self.Q

    def from_modal(self, c: np.ndarray) -> np.ndarray:
        return (c @ self.Q.T) / self.sqrt_w

    @cached_property
    def scale(self) -> np.ndarray:
        """Per-mode factors ``√(T|d|/2)`` turning modal coefficients into 𝓗-orthonormal ones."""
        return np.sqrt(0.5 * self.T * np.abs(self.d))

    def operator(self, r: int) -> ShiftedOperator:
        return assemble_Lk(self.config, int(self.config.harmonics[r]), self.grid)

    @cached_property
    def _lu(self):
        return [splu(self.operator(r).form.tocsc()) for r in range(self.config.num_harmonics)]

    # -- operations ----------------------------------------------------------

    def apply_L(self, u: TimeFourierField) -> TimeFourierField:
        out = np.empty_like(u.coeffs)
        for r in range(u.J):
            out[r] = self.operator(r).apply(u.coeffs[r])
        return u.like(out)

    def linear_resolve(self, f: TimeFourierField, rtol: float = 1e-10) -> TimeFourierField:
        """Solve ``L_k v_k = f_k`` for every retained harmonic."""
        out = np.empty_like(f.coeffs)
        for r in range(f.J):
            op = self.operator(r)
            v = self._lu[r].solve(self.weights * f.coeffs[r])
            res = op.apply(v) - f.coeffs[r]
            nf = np.sqrt(np.sum(self.weights * f.coeffs[r] ** 2))
            if np.sqrt(np.sum(self.weights * res ** 2)) > rtol * max(nf, 1e-300):
                raise ResonanceError(f"resolvent residual too large for k={op.k}")
            out[r] = v
        return f.like(out)

    def project_pm(self, u: TimeFourierField, sign: str) -> TimeFourierField:
        """``P⁺`` (``sign='+'``) or ``P⁻`` of ``u``, split by the sign of ``L_k``."""
        if sign not in "+-" or len(sign) != 1:
            raise ValueError("sign must be '+' or '-'")
        keep = self.d > 0 if sign == "+" else self.d < 0
        return u.like(self.from_modal(self.to_modal(u.coeffs) * keep))

    def negative_counts(self) -> np.ndarray:
        return (self.d < 0).sum(axis=1)

    def calH_norm(self, u: TimeFourierField) -> float:
        c = self.to_modal(u.coeffs)
        return float(np.sqrt(0.5 * self.T * np.sum(np.abs(self.d) * c * c)))

    def H_norm(self, u: TimeFourierField) -> float:
        """``(T/2) Σ_j (‖a_j'‖²/k_j + k_j ‖a_j‖²)`` with the discrete derivative."""
        S = self.grid.stiffness
        total = 0.0
        for r, k in enumerate(self.config.harmonics):
            a = u.coeffs[r]
            total += (a @ (S @ a)) / k + k * np.sum(self.weights * a * a)
        return float(np.sqrt(0.5 * self.T * total))

    @cached_property
    def embedding_constant(self) -> float:
        """Smallest ``C`` with ``‖u‖_H ≤ C ‖u‖_𝓗`` on this grid."""
        k = self.config.harmonics.astype(float)[:, None]
        return float(np.sqrt(np.max((self.mu[None, :] / k + k) / np.abs(self.d))))


def linear_resolve(ops: ModalOperators, f: TimeFourierField) -> TimeFourierField:
    return ops.linear_resolve(f)


def project_pm(ops: ModalOperators, u: TimeFourierField, sign: str) -> TimeFourierField:
    return ops.project_pm(u, sign)


def diagnostics_norms(ops: ModalOperators, u: TimeFourierField) -> dict:
    """``𝓗`` and ``H`` norms plus the discrete embedding constant."""
    calH, H = ops.calH_norm(u), ops.H_norm(u)
    C = ops.embedding_constant
    if H > C * calH * (1 + 1e-10) + 1e-300:
        raise AssertionError("embedding inequality violated")
    return {"calH_norm": calH, "H_norm": H, "embedding_constant": C}
