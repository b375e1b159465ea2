"""Truncated necklace graph, grid functions and the Kirchhoff Laplacian.

Cell ``n`` consists of the link edge ``0`` on ``[2πn, 2πn+π]`` and the two
parallel edges ``+``/``-`` on ``[2πn+π, 2π(n+1)]``.  Every edge carries
``M+1`` uniformly spaced points; the two vertices of a cell,
``A_n`` at ``x = 2πn`` and ``B_n`` at ``x = 2πn+π``, are single degrees of
freedom shared by all incident edges, so continuity holds by construction.

Per-cell storage order (full layout)::

    A_n | link interior (M-1) | B_n | '+' interior (M-1) | '-' interior (M-1)

With ``symmetric=True`` the ``-`` block is dropped and the ``+`` edge is
counted twice in every quadrature, which is the subspace ``u_+ = u_-``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

EDGES = ("0", "+", "-")
BOUNDARIES = ("dirichlet_truncation", "periodic_cells")


@dataclass(frozen=True)
class NecklaceGrid:
    """Uniform grid on the cells ``n = -N..N`` of the necklace graph.

    ``num_cells`` is the half-width ``N``; there are ``2N+1`` cells.
    """

    num_cells: int
    points_per_edge: int
    boundary: str = "dirichlet_truncation"
    symmetric: bool = False

    def __post_init__(self):
        if self.num_cells < 0:
            raise ValueError("num_cells must be >= 0")
        if self.points_per_edge < 4:
            raise ValueError("points_per_edge must be >= 4")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        M = self.points_per_edge
        expected = self.cell_count * (3 * (M - 1) + 2)
        if self.symmetric:
            expected -= self.cell_count * (M - 1)
        if self.boundary == "dirichlet_truncation":
            expected -= 1
        assert self.ndof == expected, "DOF count does not match the cell pattern"

    @property
    def cell_count(self) -> int:
        return 2 * self.num_cells + 1

    @property
    def step(self) -> float:
        return np.pi / self.points_per_edge

    @property
    def per_cell(self) -> int:
        M = self.points_per_edge
        return 2 * M if self.symmetric else 3 * M - 1

    @property
    def ndof(self) -> int:
        shift = 1 if self.boundary == "dirichlet_truncation" else 0
        return self.cell_count * self.per_cell - shift

    @property
    def cells(self) -> np.ndarray:
        return np.arange(-self.num_cells, self.num_cells + 1)

    @property
    def edge_names(self) -> tuple[str, ...]:
        return EDGES[:2] if self.symmetric else EDGES

    def with_boundary(self, boundary: str) -> "NecklaceGrid":
        return NecklaceGrid(self.num_cells, self.points_per_edge, boundary, self.symmetric)

    def with_symmetry(self, symmetric: bool) -> "NecklaceGrid":
        return NecklaceGrid(self.num_cells, self.points_per_edge, self.boundary, symmetric)

    # -- index bookkeeping -------------------------------------------------

    def _gid(self, n: int, local: int) -> int:
        """Global index of a local DOF of cell ``n``; -1 for a pinned vertex."""
        N = self.num_cells
        if n > N:
            if self.boundary == "periodic_cells":
                n = -N
            else:
                return -1
        if self.boundary == "dirichlet_truncation":
            if n == -N and local == 0:
                return -1
            return (n + N) * self.per_cell + local - 1
        return (n + N) * self.per_cell + local

    def cell_edges(self):
        """Edges of one periodicity cell as ``(name, local_idx, x, multiplicity)``.

        ``local_idx`` lists the ``M+1`` per-cell storage slots along the edge
        (the end of the circle edges maps back to slot 0, i.e. ``A`` of the next
        cell), ``x`` the cell coordinate in ``[0, 2π]``.
        """
        M = self.points_per_edge
        h = self.step
        i = np.arange(M + 1)
        out = [("0", i.copy(), i * h, 1.0)]
        plus = np.concatenate(([M], M + np.arange(1, M), [0]))
        if self.symmetric:
            out.append(("+", plus, np.pi + i * h, 2.0))
        else:
            minus = np.concatenate(([M], 2 * M - 1 + np.arange(1, M), [0]))
            out.append(("+", plus, np.pi + i * h, 1.0))
            out.append(("-", minus, np.pi + i * h, 1.0))
        return out

    @cached_property
    def local_x(self) -> np.ndarray:
        """Cell coordinate in ``[0, 2π)`` of each per-cell storage slot."""
        x = np.empty(self.per_cell)
        for _, idx, xs, _ in self.cell_edges():
            x[idx[:-1]] = xs[:-1]
        return x

    @cached_property
    def edge_table(self):
        """Global indices of all edges, shape ``(n_edges, M+1)``, plus metadata."""
        rows, cells, names, mult = [], [], [], []
        M = self.points_per_edge
        for n in self.cells:
            for name, idx, _, mu in self.cell_edges():
                g = []
                for k, loc in enumerate(idx):
                    nn = n + 1 if (k == M and name != "0") else n
                    g.append(self._gid(int(nn), int(loc)))
                rows.append(g)
                cells.append(n)
                names.append(name)
                mult.append(mu)
        return (np.array(rows, dtype=np.int64), np.array(cells), np.array(names),
                np.array(mult))

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights (vertices collect h/2 per incident edge)."""
        table, _, _, mult = self.edge_table
        h = self.step
        w = np.zeros(self.ndof)
        base = np.full(self.points_per_edge + 1, h)
        base[0] = base[-1] = h / 2
        for row, mu in zip(table, mult):
            keep = row >= 0
            np.add.at(w, row[keep], mu * base[keep])
        return w

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """Matrix of ``∫ u' v'`` with piecewise-linear edge interpolation."""
        table, _, _, mult = self.edge_table
        h = self.step
        left = table[:, :-1].ravel()
        right = table[:, 1:].ravel()
        mu = np.repeat(mult, self.points_per_edge) / h
        r, c, v = [], [], []
        for a, b, s in ((left, left, mu), (right, right, mu), (left, right, -mu), (right, left, -mu)):
            keep = (a >= 0) & (b >= 0)
            r.append(a[keep])
            c.append(b[keep])
            v.append(s[keep])
        S = sp.coo_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c))),
                          shape=(self.ndof, self.ndof))
        return S.tocsr()

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Discrete Kirchhoff Laplacian ``Δ_h = -W⁻¹ S``."""
        return (-sp.diags(1.0 / self.weights) @ self.stiffness).tocsr()

    @cached_property
    def dof_table(self):
        """Per-DOF ``(cell, edge, index along edge, x)`` labels, global x-coordinate."""
        table, cells, names, _ = self.edge_table
        cell = np.zeros(self.ndof, dtype=np.int64)
        edge = np.empty(self.ndof, dtype=object)
        local = np.zeros(self.ndof, dtype=np.int64)
        x = np.zeros(self.ndof)
        h = self.step
        seen = np.zeros(self.ndof, dtype=bool)
        for row, n, name in zip(table, cells, names):
            x0 = 2 * np.pi * n + (0.0 if name == "0" else np.pi)
            for k, g in enumerate(row):
                # vertices are labelled by the link edge of their own cell
                if g < 0 or seen[g] and not (name == "0"):
                    continue
                if k == len(row) - 1 and name != "0":
                    continue
                cell[g], edge[g], local[g], x[g] = n, name, k, x0 + k * h
                seen[g] = True
        return cell, edge, local, x

    @property
    def x(self) -> np.ndarray:
        return self.dof_table[3]

    @cached_property
    def cell_of_dof(self) -> np.ndarray:
        return self.dof_table[0]

    @cached_property
    def vertex_dofs(self) -> np.ndarray:
        """Global indices of the (unpinned) vertices, ordered along the line."""
        table = self.edge_table[0]
        v = np.unique(np.concatenate((table[:, 0], table[:, -1])))
        v = v[v >= 0]
        return v[np.argsort(self.x[v], kind="stable")]


@dataclass
class GraphFunction:
    """Values of a (complex or real) function at the DOFs of a grid."""

    grid: NecklaceGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.ndof,):
            raise ValueError(f"expected {self.grid.ndof} values, got {self.values.shape}")

    @property
    def symmetry_flag(self) -> bool:
        return self.grid.symmetric

    @classmethod
    def zeros(cls, grid: NecklaceGrid, dtype=float) -> "GraphFunction":
        return cls(grid, np.zeros(grid.ndof, dtype=dtype))

    @classmethod
    def from_callable(cls, grid: NecklaceGrid, func) -> "GraphFunction":
        """Sample ``func(cell, edge, x_global)`` at every DOF.

        ``func`` receives arrays and must return an array; vertices are sampled
        through the link edge label of their cell.
        """
        cell, edge, _, x = grid.dof_table
        out = np.zeros(grid.ndof, dtype=complex)
        for name in grid.edge_names:
            sel = edge == name
            if sel.any():
                out[sel] = func(cell[sel], name, x[sel])
        if np.all(out.imag == 0):
            out = out.real
        return cls(grid, out)

    def edge_values(self, n: int, edge: str) -> np.ndarray:
        """Samples on edge ``(n, edge)`` including both end vertices."""
        if self.grid.symmetric and edge == "-":
            edge = "+"
        table, cells, names, _ = self.grid.edge_table
        k = np.flatnonzero((cells == n) & (names == edge))
        if k.size != 1:
            raise KeyError(f"no edge ({n}, {edge})")
        row = table[k[0]]
        vals = np.zeros(row.size, dtype=self.values.dtype)
        keep = row >= 0
        vals[keep] = self.values[row[keep]]
        return vals

    def to_full(self) -> "GraphFunction":
        """Expand symmetric storage to the full three-edge layout."""
        if not self.grid.symmetric:
            return self
        full = self.grid.with_symmetry(False)
        M = self.grid.points_per_edge
        shift = 1 if self.grid.boundary == "dirichlet_truncation" else 0
        pad = np.concatenate((np.zeros(shift, dtype=self.values.dtype), self.values))
        cells = pad.reshape(self.grid.cell_count, self.grid.per_cell)
        out = np.concatenate((cells, cells[:, M + 1:]), axis=1).ravel()[shift:]
        return GraphFunction(full, out)

    def symmetric_part(self) -> "GraphFunction":
        """Project a full-layout function onto ``u_+ = u_-`` (symmetric storage)."""
        if self.grid.symmetric:
            return self
        sym = self.grid.with_symmetry(True)
        M = self.grid.points_per_edge
        shift = 1 if self.grid.boundary == "dirichlet_truncation" else 0
        pad = np.concatenate((np.zeros(shift, dtype=self.values.dtype), self.values))
        cells = pad.reshape(self.grid.cell_count, self.grid.per_cell)
        plus = cells[:, M + 1:2 * M]
        minus = cells[:, 2 * M:]
        out = np.concatenate((cells[:, :M + 1], 0.5 * (plus + minus)), axis=1)
        return GraphFunction(sym, out.ravel()[shift:])

    def __add__(self, other):
        _check_same(self, other)
        return GraphFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same(self, other)
        return GraphFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        return GraphFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.sqrt(l2_inner(self, self).real))


def _check_same(u: GraphFunction, v: GraphFunction):
    if u.grid != v.grid:
        raise ValueError("grid mismatch")


def l2_inner(u: GraphFunction, v: GraphFunction) -> complex:
    """Trapezoidal ``∫_Γ u v̄``; conjugate-linear in ``v``."""
    _check_same(u, v)
    return complex(np.sum(u.grid.weights * u.values * np.conj(v.values)))


def apply_laplacian(u: GraphFunction) -> GraphFunction:
    return GraphFunction(u.grid, u.grid.laplacian @ u.values)


def kirchhoff_flux_residual(u: GraphFunction):
    """Flux imbalance at every unpinned vertex.

    Uses second-order one-sided derivatives on each incident edge and
    returns ``(x_vertex, |Σ incoming u' - Σ outgoing u'|)``, derivatives taken
    in the direction of increasing ``x``.
    """
    grid = u.grid
    table, _, _, mult = grid.edge_table
    h = grid.step
    vals = np.zeros(table.shape, dtype=u.values.dtype)
    keep = table >= 0
    vals[keep] = u.values[table[keep]]
    d_start = (-3 * vals[:, 0] + 4 * vals[:, 1] - vals[:, 2]) / (2 * h)
    d_end = (3 * vals[:, -1] - 4 * vals[:, -2] + vals[:, -3]) / (2 * h)
    balance = np.zeros(grid.ndof, dtype=np.result_type(vals, float))
    s = table[:, 0] >= 0
    np.add.at(balance, table[s, 0], -mult[s] * d_start[s])
    e = table[:, -1] >= 0
    np.add.at(balance, table[e, -1], mult[e] * d_end[e])
    vdofs = grid.vertex_dofs
    return grid.x[vdofs], np.abs(balance[vdofs])


def write_csv(u: GraphFunction, path) -> None:
    """Columns: cell, edge, local index, x, re, im (symmetric data also lists '-')."""
    cell, edge, local, x = u.grid.dof_table
    vals = np.asarray(u.values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "edge", "local_index", "x", "re", "im"])
        for i in range(u.grid.ndof):
            w.writerow([cell[i], edge[i], local[i], repr(float(x[i])),
                        repr(float(vals[i].real)), repr(float(vals[i].imag))])
        if u.grid.symmetric:
            for i in np.flatnonzero(edge == "+"):
                w.writerow([cell[i], "-", local[i], repr(float(x[i])),
                            repr(float(vals[i].real)), repr(float(vals[i].imag))])


def read_csv(grid: NecklaceGrid, path) -> GraphFunction:
    cell, edge, local, _ = grid.dof_table
    index = {(int(c), e, int(k)): i for i, (c, e, k) in enumerate(zip(cell, edge, local))}
    vals = np.full(grid.ndof, np.nan, dtype=complex)
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["cell"]), row["edge"], int(row["local_index"]))
            if grid.symmetric and key[1] == "-":
                continue
            vals[index[key]] = float(row["re"]) + 1j * float(row["im"])
    if np.isnan(vals).any():
        raise ValueError(f"{path}: missing DOFs for this grid")
    if np.all(vals.imag == 0):
        vals = vals.real
    return GraphFunction(grid, vals)
