"""Band structure of the Kirchhoff Laplacian on the necklace graph.

Only the symmetric subspace (equal values on the two circle edges) is
treated.  Bands are available in closed form, ``λ_m(l) = (m + a(l))²``, and
independently through the transfer (monodromy) matrix of one cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

SUP_BOUND = 12 / np.sqrt(np.pi)
_SMALL_S = 1e-4


def a_of_l(l):
    """Branch parameter ``a(l) = arccos((8 cos 2πl + 1)/9) / 2π``, in ``[0, a(1/2)]``."""
    arg = (8 * np.cos(2 * np.pi * np.asarray(l, dtype=float)) + 1) / 9
    return np.arccos(np.clip(arg, -1.0, 1.0)) / (2 * np.pi)


A_HALF = float(a_of_l(0.5))
DELTA0 = 1 - 2 * A_HALF


def _check_l(l):
    if not -0.5 < l <= 0.5:
        raise ValueError(f"quasimomentum {l} outside (-1/2, 1/2]")


def _check_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lambda must be nonnegative")
    return lam


def hill_discriminant(lam):
    lam = _check_lambda(lam)
    out = (9 * np.cos(2 * np.pi * np.sqrt(lam)) - 1) / 4
    return float(out) if out.ndim == 0 else out


def _edge_terms(s: float):
    """``cos πs``, ``sin(πs)/s`` and ``-s sin πs``, with a series near ``s = 0``."""
    c = np.cos(np.pi * s)
    if abs(s) < _SMALL_S:
        z = (np.pi * s) ** 2
        S = np.pi * (1 - z / 6 + z * z / 120)
    else:
        S = np.sin(np.pi * s) / s
    return c, S, -s * np.sin(np.pi * s)


def edge_transfer(lam: float) -> np.ndarray:
    """Map ``(u, u')`` at the start of a length-π edge to its end."""
    c, S, d = _edge_terms(np.sqrt(_check_lambda(lam)))
    return np.array([[c, S], [d, c]])


def monodromy_matrix(lam: float) -> np.ndarray:
    """One-cell transfer matrix in the symmetric subspace.

    Link edge, then the flux splits in half onto each circle edge, then the
    circle pair is traversed as a single edge and the fluxes recombine.
    """
    T = edge_transfer(lam)
    return np.diag([1.0, 2.0]) @ T @ np.diag([1.0, 0.5]) @ T


@dataclass(frozen=True)
class BandPoint:
    m: int
    l: float
    a_of_l: float
    lam: float

    @property
    def sqrt_lambda(self) -> float:
        return abs(self.m + self.a_of_l)


def band_closed_form(m: int, l: float) -> BandPoint:
    _check_l(l)
    a = float(a_of_l(l))
    return BandPoint(int(m), float(l), a, (m + a) ** 2)


def lambda_half(m: int) -> float:
    """Band value at the zone edge, expanded as a polynomial in ``m``."""
    t = np.arccos(-7 / 9)
    return m * m + t * m / np.pi + t * t / (4 * np.pi * np.pi)


def band_from_monodromy(m: int, l: float, tol: float = 1e-12) -> BandPoint:
    """Solve ``tr M(s²) = 2 cos 2πl`` for ``s = √λ`` in the branch of band ``m``."""
    _check_l(l)
    target = 2 * np.cos(2 * np.pi * l)

    def f(s):
        return np.trace(monodromy_matrix(s * s)) - target

    if m >= 0:
        lo, hi = float(m), m + 0.5
    else:
        lo, hi = -m - 0.5, float(-m)
    flo, fhi = f(lo), f(hi)
    if abs(flo) <= tol:
        s = lo
    elif abs(fhi) <= tol:
        s = hi
    elif flo * fhi > 0:
        raise ValueError(f"no root of the discriminant in [{lo}, {hi}] for m={m}, l={l}")
    else:
        s = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    a = s - m if m >= 0 else -m - s
    return BandPoint(int(m), float(l), float(a), s * s)


# -- Bloch eigenfunctions --------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(96)


@dataclass
class BlochEigenfunction:
    """Normalized symmetric Bloch eigenfunction ``φ_m(l, ·)`` on one cell.

    On each edge, parametrized by ``y ∈ [0, π]`` (link edge ``x = y``,
    circle edges ``x = π + y``), the quasiperiodic solution is
    ``g = A cos(s y) + B sin(s y)/s``; ``coef`` holds ``[[A0, B0], [A1, B1]]``
    for the link and the circle edges.  ``φ(x) = e^{-ilx} g(x)``.
    """

    m: int
    l: float
    lam: float
    coef: np.ndarray
    phase: str = "value_at_0_real_nonneg"
    eigenspace: list = field(default_factory=list, repr=False)

    @property
    def s(self) -> float:
        return float(np.sqrt(self.lam))

    def _g(self, edge: str, y):
        y = np.asarray(y, dtype=float)
        s = self.s
        A, B = self.coef[0 if edge == "0" else 1]
        if s < _SMALL_S:
            sy = y * (1 - (s * y) ** 2 / 6)
        else:
            sy = np.sin(s * y) / s
        return A * np.cos(s * y) + B * sy

    def _dg(self, edge: str, y):
        y = np.asarray(y, dtype=float)
        s = self.s
        A, B = self.coef[0 if edge == "0" else 1]
        return -A * s * np.sin(s * y) + B * np.cos(s * y)

    def evaluate(self, edge: str, y):
        """``φ`` on edge ``edge`` at local coordinate ``y``."""
        x = np.asarray(y, dtype=float) + (0.0 if edge == "0" else np.pi)
        return np.exp(-1j * self.l * x) * self._g(edge, y)

    def derivative(self, edge: str, y):
        """``dφ/dx`` on an edge."""
        x = np.asarray(y, dtype=float) + (0.0 if edge == "0" else np.pi)
        return np.exp(-1j * self.l * x) * (self._dg(edge, y) - 1j * self.l * self._g(edge, y))

    def on_cell(self, grid) -> np.ndarray:
        """Values at the per-cell storage slots of ``grid`` (see ``NecklaceGrid.local_x``)."""
        x = grid.local_x
        out = np.empty(x.size, dtype=complex)
        link = x < np.pi
        out[link] = self.evaluate("0", x[link])
        out[~link] = self.evaluate("+", x[~link] - np.pi)
        return out

    def sup_norm(self, samples: int = 2049) -> float:
        y = np.linspace(0, np.pi, samples)
        return float(max(np.abs(self._g("0", y)).max(), np.abs(self._g("+", y)).max()))

    def residuals(self) -> dict:
        """Vertex continuity/flux and quasiperiodicity defects of the edge solution."""
        th = np.exp(2j * np.pi * self.l)
        pi = np.pi
        g0, g1 = (lambda y: self._g("0", y)), (lambda y: self._g("+", y))
        d0, d1 = (lambda y: self._dg("0", y)), (lambda y: self._dg("+", y))
        return {
            "continuity_B": abs(g0(pi) - g1(0.0)),
            "flux_B": abs(d0(pi) - 2 * d1(0.0)),
            "continuity_A": abs(g1(pi) - th * g0(0.0)),
            "flux_A": abs(2 * d1(pi) - th * d0(0.0)),
        }


def cell_inner(f: BlochEigenfunction, g: BlochEigenfunction) -> complex:
    """``⟨f, g⟩_{per,2}`` over one cell (both circle edges), Gauss–Legendre."""
    y = np.pi / 2 * (_GL_X + 1)
    w = np.pi / 2 * _GL_W
    link = np.sum(w * f.evaluate("0", y) * np.conj(g.evaluate("0", y)))
    circ = np.sum(w * f.evaluate("+", y) * np.conj(g.evaluate("+", y)))
    return complex(link + 2 * circ)


def _normalize(phi: BlochEigenfunction) -> BlochEigenfunction:
    phi.coef = phi.coef / np.sqrt(cell_inner(phi, phi).real)
    A0, B0 = phi.coef[0]
    ref = A0 if abs(A0) > 1e-8 * np.abs(phi.coef).max() else B0
    if ref == A0:
        phi.phase = "value_at_0_real_nonneg"
    else:
        phi.phase = "derivative_at_0_real_nonneg"
    phi.coef = phi.coef * (np.conj(ref) / abs(ref))
    phi.coef[np.abs(phi.coef.imag) < 1e-15] = phi.coef[np.abs(phi.coef.imag) < 1e-15].real
    return phi


def _vertex_system(s: float, l: float) -> np.ndarray:
    c, S, d = _edge_terms(s)
    th = np.exp(2j * np.pi * l)
    return np.array([
        [c, S, -1, 0],
        [d, c, 0, -2],
        [-th, 0, c, S],
        [0, -th, 2 * d, 2 * c],
    ], dtype=complex)


def _touching_pair(m: int):
    """The two symmetric eigenfunctions at ``l = 0``, ``λ = m²`` with ``m ≠ 0``."""
    k = abs(m)
    lam = float(k * k)
    # cos(kx) on all edges; on the circles cos(k(π+y)) = (-1)^k cos(ky)
    sgn = (-1) ** k
    cos_mode = BlochEigenfunction(k, 0.0, lam, np.array([[1, 0], [sgn, 0]], dtype=complex))
    # 2 sin(kx) on the link, sin(kx) on the circles
    sin_mode = BlochEigenfunction(-k, 0.0, lam, np.array([[0, 2 * k], [0, sgn * k]], dtype=complex),
                                  phase="derivative_at_0_real_nonneg")
    cos_mode, sin_mode = _normalize(cos_mode), _normalize(sin_mode)
    cos_mode.eigenspace = sin_mode.eigenspace = [cos_mode, sin_mode]
    return cos_mode, sin_mode


def bloch_eigenfunction(m: int, l: float) -> BlochEigenfunction:
    """Normalized ``φ_m(l, ·)``.

    At the touching points ``l = 0``, ``m ≠ 0`` the eigenspace is two
    dimensional; ``m > 0`` returns the cosine mode and ``m < 0`` the sine mode,
    and both are listed in ``eigenspace``.
    """
    _check_l(l)
    m = int(m)
    if l == 0 and m != 0:
        cos_mode, sin_mode = _touching_pair(m)
        return cos_mode if m > 0 else sin_mode
    bp = band_closed_form(m, l)
    s = bp.sqrt_lambda
    _, sv, vh = np.linalg.svd(_vertex_system(s, l))
    if sv[-2] < 1e-8 * sv[0]:
        raise ValueError(f"unexpected degenerate eigenspace at m={m}, l={l}")
    v = np.conj(vh[-1])
    phi = BlochEigenfunction(m, float(l), bp.lam, np.array([[v[0], v[1]], [v[2], v[3]]]))
    phi = _normalize(phi)
    phi.eigenspace = [phi]
    return phi
