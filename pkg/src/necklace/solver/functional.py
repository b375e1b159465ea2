"""Action functional, its gradient, and breather diagnostics.

With ``T = 2π/ω`` and the cosine ansatz, the discrete functional is

    J_0 = (T/2) Σ_j a_jᵀ K_j a_j,
    J_1 = 2/(p+1) ∫_0^T ∫_Γ |u|^{p+1},
    J   = J_0 ∓ J_1   (upper sign: focusing, ``+|u|^{p-1}u`` on the right),

so that ``J'(u) = 2 (L u ∓ |u|^{p-1} u)`` in the space-time ``L²`` pairing
and critical points solve the Galerkin system.  Time integrals use the
trapezoidal rule at ``θ_i = π i / nt`` on the half period, which is exact
for ``p = 3`` as long as ``nt ≥ 4J``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..graph import GraphFunction, kirchhoff_flux_residual
from .fields import TimeFourierField, pairing
from .operators import ModalOperators

SIGNS = {"focusing": 1, "defocusing": -1, "+": 1, "-": -1}


def sign_value(sign) -> int:
    if sign in (1, -1):
        return int(sign)
    try:
        return SIGNS[sign]
    except KeyError:
        raise ValueError(f"unknown sign {sign!r}") from None


def power(u, p: float, reg: float = 0.0):
    """``|u|^{p-1} u``."""
    if reg:
        return (u * u + reg) ** ((p - 1) / 2) * u
    return np.abs(u) ** (p - 1) * u


def dpower(u, p: float, reg: float = 0.0):
    """``p |u|^{p-1}``, regularized as ``p (u² + reg)^{(p-1)/2}`` when requested."""
    return p * (u * u + reg) ** ((p - 1) / 2)


def project_time(u: TimeFourierField, values: np.ndarray) -> np.ndarray:
    """Project collocated values ``(nt, ndof)`` onto the retained odd cosines."""
    return (2.0 / u.nt) * (u.basis().T @ values)


def nonlinear_term(u: TimeFourierField, sign="focusing") -> TimeFourierField:
    """``±|u|^{p-1}u`` projected on the retained harmonics."""
    g = power(u.collocate(), u.config.p)
    return u.like(sign_value(sign) * project_time(u, g))


def dropped_harmonic_fraction(u: TimeFourierField, oversample: int = 8) -> float:
    """Share of ``‖|u|^{p-1}u‖²`` in harmonics the ansatz does not retain."""
    nt = oversample * u.nt
    th = np.pi * np.arange(nt) / nt
    g = power(np.cos(np.outer(th, 2 * np.arange(u.J) + 1)) @ u.coeffs, u.config.p)
    w = u.grid.weights
    total = np.sum(w * g * g) / nt
    if total == 0:
        return 0.0
    kept = (2.0 / nt) * (np.cos(np.outer(th, 2 * np.arange(u.J) + 1)).T @ g)
    return float(max(0.0, 1 - 0.5 * np.sum(w * kept * kept) / total))


def J1(u: TimeFourierField) -> float:
    p = u.config.p
    vals = np.abs(u.collocate()) ** (p + 1)
    return float(2 / (p + 1) * (u.period / u.nt) * np.sum(vals @ u.grid.weights))


def space_time_power(u: TimeFourierField) -> float:
    """``∫_0^T ∫_Γ |u|^{p+1}``."""
    return J1(u) * (u.config.p + 1) / 2


def J0(u: TimeFourierField, ops: ModalOperators) -> float:
    c = ops.to_modal(u.coeffs)
    return float(0.5 * u.period * np.sum(ops.d * c * c))


def evaluate_J(u: TimeFourierField, ops: ModalOperators, sign="focusing") -> float:
    return J0(u, ops) - sign_value(sign) * J1(u)


def galerkin_residual(u: TimeFourierField, ops: ModalOperators, sign="focusing") -> TimeFourierField:
    """``L u ∓ P|u|^{p-1}u``: the projected PDE ``∂_t²u - Δu + αu ∓ |u|^{p-1}u``."""
    return ops.apply_L(u) - nonlinear_term(u, sign)


def evaluate_dJ(u: TimeFourierField, ops: ModalOperators, sign="focusing") -> TimeFourierField:
    """Gradient of ``J`` with respect to the space-time ``L²`` pairing."""
    return 2 * galerkin_residual(u, ops, sign)


def cell_mass(u: TimeFourierField) -> np.ndarray:
    """``Σ_j ∫_{cell n} a_j²`` for every cell ``n = -N..N``."""
    grid = u.grid
    per_dof = grid.weights * np.sum(u.coeffs ** 2, axis=0)
    return np.bincount(grid.cell_of_dof + grid.num_cells, weights=per_dof,
                       minlength=grid.cell_count)


def tail_fraction(u: TimeFourierField, n0: int) -> float:
    """Share of the mass in cells with ``|n| ≥ n0``."""
    mass = cell_mass(u)
    total = mass.sum()
    if total == 0:
        return 0.0
    return float(mass[np.abs(u.grid.cells) >= n0].sum() / total)


def tail_profile(u: TimeFourierField) -> np.ndarray:
    """``tail(n) = mass(|cell| ≥ n) / total`` for ``n = 0..N``."""
    return np.array([tail_fraction(u, n) for n in range(u.grid.num_cells + 1)])


def nehari_defects(u: TimeFourierField, ops: ModalOperators, sign="focusing"):
    """``|J'(u)u| / ‖u‖²_𝓗`` and ``sup_{v ∈ 𝓗⁻, ‖v‖_𝓗=1} |J'(u)v|``.

    ``𝓗⁻`` is the negative space of the functional actually minimized, i.e.
    modes with ``σ d < 0`` (flipped for the defocusing sign).
    """
    s = sign_value(sign)
    R = galerkin_residual(u, ops, sign)
    T = u.period
    rho = ops.to_modal(R.coeffs)
    self_term = 2 * pairing(R, u)
    nrm2 = ops.calH_norm(u) ** 2
    minus = s * ops.d < 0
    sup = np.sqrt(2 * T * np.sum((rho * rho / np.abs(ops.d))[minus]))
    return (abs(self_term) / nrm2 if nrm2 > 0 else 0.0), float(sup)


def flux_residual(u: TimeFourierField) -> np.ndarray:
    """Max over harmonics of the vertex flux imbalance of ``a_j``."""
    out = None
    for r in range(u.J):
        _, res = kirchhoff_flux_residual(GraphFunction(u.grid, u.coeffs[r]))
        out = res if out is None else np.maximum(out, res)
    return out


@dataclass
class BreatherState:
    field: TimeFourierField
    sign: str
    method: str
    diagnostics: dict = field(default_factory=dict)
    history: list = field(default_factory=list, repr=False)
    converged: bool = False

    @property
    def coeffs(self):
        return self.field.coeffs


def compute_diagnostics(u: TimeFourierField, ops: ModalOperators, sign="focusing",
                        tail_cell: int | None = None) -> dict:
    """Every scalar diagnostic of a candidate breather, recomputed from scratch."""
    s = sign_value(sign)
    R = galerkin_residual(u, ops, sign)
    self_def, minus_def = nehari_defects(u, ops, sign)
    power_int = space_time_power(u)
    p = u.config.p
    Jv = evaluate_J(u, ops, sign)
    gs = s * (p - 1) / (p + 1) * power_int
    n = u.norm_l2()
    N = u.grid.num_cells
    tail_cell = (2 * N) // 3 if tail_cell is None else tail_cell
    return {
        "pde_residual": R.norm_l2(),
        "pde_residual_relative": R.norm_l2() / n if n > 0 else 0.0,
        "nehari_self": self_def,
        "nehari_minus": minus_def,
        "J_value": Jv,
        "ground_state_value": gs,
        "ground_state_defect": abs(Jv - gs) / abs(gs) if gs != 0 else abs(Jv),
        "space_time_power": power_int,
        "calH_norm": ops.calH_norm(u),
        "H_norm": ops.H_norm(u),
        "embedding_constant": ops.embedding_constant,
        "l2_norm": n,
        "tail_cell": tail_cell,
        "tail_fraction": tail_fraction(u, tail_cell),
        "tail_profile": tail_profile(u).tolist(),
        "flux_residual_max": float(flux_residual(u).max()) if n > 0 else 0.0,
        "dropped_harmonic_fraction": dropped_harmonic_fraction(u),
        "discrete_gap": ops.discrete_gap,
        "delta_star": ops.certificate.delta_star,
        "dominant_harmonic": int(u.k[np.argmax(np.sum(u.grid.weights * u.coeffs ** 2, axis=1))]),
    }
