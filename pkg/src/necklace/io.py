"""Breather files (JSON header + CSV payload), run manifests and schema checks."""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .gapcheck import FrequencyConfig
from .graph import NecklaceGrid
from .solver.fields import TimeFourierField
from .solver.functional import BreatherState

FORMAT = "necklace-breather/1"


def load_schema(name: str) -> dict:
    text = resources.files("necklace").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc: dict, name: str) -> None:
    jsonschema.validate(doc, load_schema(name))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def grid_dict(g: NecklaceGrid) -> dict:
    return {"num_cells": g.num_cells, "points_per_edge": g.points_per_edge,
            "boundary": g.boundary, "symmetric": g.symmetric}


def write_breather(state: BreatherState, path, manifest: str | None = None) -> Path:
    """Write ``path`` (JSON header) and ``path`` with ``.csv`` suffix (payload)."""
    path = Path(path)
    payload = path.with_suffix(".csv")
    f = state.field
    cell, edge, local, x = f.grid.dof_table
    with open(payload, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "edge", "local_index", "x"] + [f"a_{2 * r + 1}" for r in range(f.J)])
        for i in range(f.grid.ndof):
            w.writerow([cell[i], edge[i], local[i], repr(float(x[i]))]
                       + [repr(float(v)) for v in f.coeffs[:, i]])
    header = {
        "format": FORMAT,
        "config": f.config.to_dict(),
        "grid": grid_dict(f.grid),
        "sign": state.sign,
        "method": state.method,
        "nt": f.nt,
        "harmonics": [int(k) for k in f.k],
        "units": {"x": "length (edges have length pi)", "a_j": "amplitude of cos(kappa*j*omega*t)"},
        "payload": payload.name,
        "payload_sha256": sha256_file(payload),
        "diagnostics": _jsonable(state.diagnostics),
        "converged": state.converged,
    }
    if manifest:
        header["manifest"] = manifest
    validate(header, "breather")
    path.write_text(json.dumps(header, indent=2, sort_keys=True))
    return path


def read_breather(path) -> BreatherState:
    path = Path(path)
    header = json.loads(path.read_text())
    validate(header, "breather")
    payload = path.parent / header["payload"]
    if sha256_file(payload) != header["payload_sha256"]:
        raise ValueError(f"{payload}: checksum mismatch")
    c = header["config"]
    cfg = FrequencyConfig(k0=c["k0"], kappa=c["kappa"], alpha=c["alpha"], A=c["A"], p=c["p"], K=c["K"])
    gd = header["grid"]
    grid = NecklaceGrid(gd["num_cells"], gd["points_per_edge"], gd["boundary"], gd["symmetric"])
    cell, edge, local, _ = grid.dof_table
    index = {(int(a), b, int(k)): i for i, (a, b, k) in enumerate(zip(cell, edge, local))}
    coeffs = np.full((cfg.num_harmonics, grid.ndof), np.nan)
    with open(payload, newline="") as fh:
        for row in csv.DictReader(fh):
            i = index[(int(row["cell"]), row["edge"], int(row["local_index"]))]
            coeffs[:, i] = [float(row[f"a_{2 * r + 1}"]) for r in range(cfg.num_harmonics)]
    if np.isnan(coeffs).any():
        raise ValueError(f"{payload}: missing degrees of freedom")
    f = TimeFourierField(cfg, grid, coeffs, header["nt"])
    return BreatherState(f, header["sign"], header["method"], header["diagnostics"],
                         converged=header.get("converged", False))


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    threads: int | None = None
    certificate: dict | None = None
    outputs: list = field(default_factory=list)
    started: float = field(default_factory=time.time)

    def input_hash(self) -> str:
        h = hashlib.sha256(json.dumps(_jsonable(self.config), sort_keys=True).encode())
        for p in self.inputs:
            h.update(Path(p).read_bytes())
        return h.hexdigest()

    def to_dict(self) -> dict:
        from . import __version__
        return _jsonable({
            "command": self.command,
            "config": self.config,
            "input_hash": self.input_hash(),
            "tool_version": __version__,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(self.started)),
            "wall_clock_s": time.time() - self.started,
            "tolerances": self.tolerances,
            "certificate": self.certificate,
            "threads": self.threads,
            "outputs": [str(o) for o in self.outputs],
        })

    def write(self, path) -> Path:
        doc = self.to_dict()
        validate(doc, "manifest")
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True))
        return Path(path)
