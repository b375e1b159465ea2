"""Newton's method on the Galerkin system ``K_j a_j ∓ W P_j(|u|^{p-1}u) = 0``."""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..exceptions import ConvergenceError, ResonanceError
from .fields import TimeFourierField
from .functional import (BreatherState, compute_diagnostics, dpower, galerkin_residual,
                         sign_value)
from .nehari import inner_maximize
from .operators import ModalOperators

log = logging.getLogger(__name__)


def jacobian(u: TimeFourierField, ops: ModalOperators, sign="focusing", reg: float = 1e-14):
    """Block matrix ``K_j δ_jj' ∓ W G_jj'`` with ``G`` from ``p|u|^{p-1}`` at the collocation times.

    Rows are scaled by ``W`` so the matrix is symmetric.
    """
    s = sign_value(sign)
    C = u.basis()
    dg = dpower(u.collocate(), u.config.p, reg if u.config.p < 2 else 0.0)
    w = u.grid.weights
    J = u.J
    blocks = [[None] * J for _ in range(J)]
    for r in range(J):
        for q in range(r, J):
            G = (2.0 / u.nt) * ((C[:, r] * C[:, q]) @ dg)
            B = sp.diags(-s * w * G)
            if r == q:
                B = ops.operator(r).form + B
            blocks[r][q] = B
            if q != r:
                blocks[q][r] = B
    return sp.bmat(blocks, format="csc")


def _residual(u, ops, sign):
    """``W``-scaled residual (``K a ∓ W N``) and its space-time ``L²`` size."""
    R = galerkin_residual(u, ops, sign)
    return R.coeffs * u.grid.weights, R.norm_l2()


def newton_solve(config, start: TimeFourierField, ops: ModalOperators | None = None,
                 sign="focusing", tol: float = 1e-10, maxiter: int = 50,
                 nehari_seed: bool = True, reg: float = 1e-14) -> BreatherState:
    """Damped Newton iteration from ``start``.

    With ``nehari_seed`` the start is first replaced by its Nehari projection
    ``m1(start)``, which fixes the amplitude scale; starting from a tiny
    field converges to the trivial solution instead.
    """
    ops = ops or ModalOperators(config, start.grid)
    u = start
    if nehari_seed:
        u = inner_maximize(start, ops, sign).field
    Rw, rn = _residual(u, ops, sign)
    history = [rn]
    for it in range(maxiter):
        if rn <= tol:
            break
        A = jacobian(u, ops, sign, reg)
        try:
            lu = splu(A)
        except RuntimeError as exc:
            raise ResonanceError(f"singular Jacobian at Newton step {it}") from exc
        step = -lu.solve(Rw.ravel()).reshape(u.coeffs.shape)
        if not np.all(np.isfinite(step)):
            raise ResonanceError(f"singular Jacobian at Newton step {it}")
        t = 1.0
        while True:
            trial = u.like(u.coeffs + t * step)
            Rw_t, rn_t = _residual(trial, ops, sign)
            if rn_t < (1 - 1e-4 * t) * rn or t < 1e-6:
                break
            t *= 0.5
        if t < 1e-6 and rn_t >= rn:
            state = BreatherState(u, sign, "newton", history=history)
            raise ConvergenceError(f"Newton line search failed at residual {rn:.2e}", state)
        u, Rw, rn = trial, Rw_t, rn_t
        history.append(rn)
        log.debug("newton it=%d residual=%.3e damping=%.3g", it, rn, t)
    else:
        if rn > tol:
            state = BreatherState(u, sign, "newton", history=history)
            raise ConvergenceError(f"Newton did not converge, residual {rn:.2e}", state)
    state = BreatherState(u, "focusing" if sign_value(sign) > 0 else "defocusing", "newton",
                          history=history, converged=True)
    state.diagnostics = compute_diagnostics(u, ops, state.sign)
    state.diagnostics["newton_iterations"] = len(history) - 1
    return state
