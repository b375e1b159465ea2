"""Discrete Bloch transform over the cells of a truncated necklace.

With ``2N+1`` cells and quasimomenta ``l_j = j/(2N+1)`` the transform is a
DFT over the cell index, so Plancherel and inversion are exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .graph import GraphFunction, NecklaceGrid
from .spectrum import bloch_eigenfunction


@dataclass
class BlochField:
    """``ũ(l_j, ·)`` sampled at the per-cell slots of ``grid`` (rows indexed by ``j``).

    ``source`` is the grid the data came from, used by the inverse to undo a
    zero extension of Dirichlet data.
    """

    grid: NecklaceGrid
    values: np.ndarray
    source: NecklaceGrid | None = None

    @property
    def j(self) -> np.ndarray:
        return self.grid.cells

    @property
    def l_grid(self) -> np.ndarray:
        return self.j / self.grid.cell_count

    @property
    def cell_weights(self) -> np.ndarray:
        return self.grid.weights[: self.grid.per_cell]

    def cell_inner(self, other: "BlochField") -> np.ndarray:
        """``⟨ũ(l_j), ṽ(l_j)⟩_{per,2}`` for every ``j``."""
        return np.sum(self.cell_weights * self.values * np.conj(other.values), axis=1)


def _periodic(grid: NecklaceGrid) -> NecklaceGrid:
    return grid.with_boundary("periodic_cells")


def _cell_array(u: GraphFunction) -> np.ndarray:
    g = u.grid
    vals = u.values
    if g.boundary == "dirichlet_truncation":
        vals = np.concatenate(([0.0], vals))
    return vals.reshape(g.cell_count, g.per_cell)


def _phases(grid: NecklaceGrid) -> np.ndarray:
    n = grid.cells
    l = n / grid.cell_count
    return np.exp(-2j * np.pi * np.outer(l, n))


def bloch_forward(u: GraphFunction) -> BlochField:
    """``ũ(l_j, x) = Σ_n u(x + 2πn) e^{-i l_j (x + 2πn)}`` over the stored cells.

    Dirichlet data is zero-extended to the periodic grid first (the pinned
    outer vertex is zero, so nothing is lost).
    """
    grid = _periodic(u.grid)
    U = _cell_array(u)
    E = _phases(grid)
    tw = np.exp(-1j * np.outer(grid.cells / grid.cell_count, grid.local_x))
    return BlochField(grid, tw * (E @ U), source=u.grid)


def bloch_inverse(f: BlochField) -> GraphFunction:
    grid = f.grid
    tw = np.exp(1j * np.outer(f.l_grid, grid.local_x))
    U = np.conj(_phases(grid)).T @ (tw * f.values) / grid.cell_count
    vals = U.ravel()
    target = f.source or grid
    if target.boundary == "dirichlet_truncation":
        vals = vals[1:]
    return GraphFunction(target, vals)


def synthesize(grid: NecklaceGrid, coefs: dict) -> BlochField:
    """Build ``Σ_m c_m(l_j) φ_m(l_j, ·)`` from ``{m: array over j}``."""
    grid = _periodic(grid)
    out = np.zeros((grid.cell_count, grid.per_cell), dtype=complex)
    for m, c in coefs.items():
        for row, l in enumerate(grid.cells / grid.cell_count):
            out[row] += c[row] * bloch_eigenfunction(m, l).on_cell(grid)
    return BlochField(grid, out)


@dataclass
class BandCoefficients:
    m: np.ndarray
    l_grid: np.ndarray
    coef: np.ndarray  # shape (len(m), len(l_grid))
    captured: float

    def lam(self) -> np.ndarray:
        from .spectrum import band_closed_form
        return np.array([[band_closed_form(m, l).lam for l in self.l_grid] for m in self.m])


def band_coefficients(f: BlochField, m_max: int) -> BandCoefficients:
    """Project ``ũ(l_j, ·)`` onto ``φ_m(l_j, ·)`` for ``|m| ≤ m_max``.

    ``captured`` is the fraction ``Σ|ũ_m|² / Σ‖ũ‖²`` of the field energy
    explained by the retained bands.
    """
    ms = np.arange(-m_max, m_max + 1)
    w = f.cell_weights
    coef = np.zeros((ms.size, f.l_grid.size), dtype=complex)
    for col, l in enumerate(f.l_grid):
        for row, m in enumerate(ms):
            phi = bloch_eigenfunction(int(m), float(l)).on_cell(f.grid)
            coef[row, col] = np.sum(w * f.values[col] * np.conj(phi))
    total = float(np.sum(f.cell_inner(f).real))
    captured = float(np.sum(np.abs(coef) ** 2) / total) if total > 0 else 1.0
    return BandCoefficients(ms, f.l_grid, coef, captured)


def _slot_labels(grid: NecklaceGrid):
    edge = np.empty(grid.per_cell, dtype=object)
    local = np.zeros(grid.per_cell, dtype=np.int64)
    for name, idx, _, _ in grid.cell_edges():
        for k, slot in enumerate(idx[:-1]):
            if edge[slot] is None:
                edge[slot], local[slot] = name, k
    return edge, local


def write_field_csv(f: BlochField, path) -> None:
    edge, local = _slot_labels(f.grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "l_j", "edge", "local_index", "re", "im"])
        for row, (j, l) in enumerate(zip(f.j, f.l_grid)):
            for s in range(f.grid.per_cell):
                z = f.values[row, s]
                w.writerow([j, repr(float(l)), edge[s], local[s], repr(float(z.real)), repr(float(z.imag))])


def write_coefficients_csv(c: BandCoefficients, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "j", "l_j", "re", "im", "abs2"])
        n = c.l_grid.size
        for r, m in enumerate(c.m):
            for col, l in enumerate(c.l_grid):
                z = c.coef[r, col]
                w.writerow([m, col - n // 2, repr(float(l)), repr(float(z.real)), repr(float(z.imag)),
                            repr(float(abs(z) ** 2))])
