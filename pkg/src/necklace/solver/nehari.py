"""Two-level minimization on the generalized Nehari manifold.

Work happens in 𝓗-orthonormal modal coordinates ``y = √(T|d|/2) c``, where
the quadratic part of ``F = σJ_0 - J_1`` is ``|y₊|² - |y₋|²``.  Here σ flips
the quadratic part for the defocusing sign so that ``F`` always has the
"indefinite minus convex" structure; critical points of ``F`` and ``J``
coincide.

* inner: ``m1(w)`` maximizes ``F`` on ``{s ŵ + v : s ≥ 0, v ∈ 𝓗⁻}``
  (trust-region Newton-CG with exact Hessian-vector products);
* outer: Riemannian gradient descent of ``w ↦ F(m1(w))`` on the unit sphere
  of ``𝓗⁺``, Armijo backtracking with Barzilai-Borwein trial steps.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.optimize import minimize
from scipy.sparse.linalg import LinearOperator, minres

from ..exceptions import ConvergenceError
from .fields import TimeFourierField
from .functional import BreatherState, compute_diagnostics, dpower, power, sign_value
from .operators import ModalOperators

log = logging.getLogger(__name__)


class ReducedFunctional:
    """``F`` and its derivatives in 𝓗-orthonormal coordinates."""

    def __init__(self, ops: ModalOperators, sign="focusing", nt: int = 0, reg: float = 1e-14):
        self.ops = ops
        self.sigma = sign_value(sign)
        self.sign = "focusing" if self.sigma > 0 else "defocusing"
        cfg = ops.config
        self.template = TimeFourierField.zeros(cfg, ops.grid, nt)
        self.nt = self.template.nt
        self.C = self.template.basis()  # (nt, J)
        self.p = cfg.p
        self.T = ops.T
        self.shape = ops.d.shape
        self.plus = (self.sigma * ops.d > 0).ravel()
        self.minus = ~self.plus
        self.scale = ops.scale.ravel()
        self.reg = reg if self.p < 2 else 0.0
        self.w = ops.grid.weights

    # coordinates
    def to_coeffs(self, y: np.ndarray) -> np.ndarray:
        return self.ops.from_modal((y / self.scale).reshape(self.shape))

    def from_coeffs(self, a: np.ndarray) -> np.ndarray:
        return self.ops.to_modal(a).ravel() * self.scale

    def field(self, y: np.ndarray) -> TimeFourierField:
        return self.template.like(self.to_coeffs(y))

    # pieces
    def _collocate(self, y):
        return self.C @ self.to_coeffs(y)

    def J1(self, U: np.ndarray) -> float:
        p = self.p
        return float(2 / (p + 1) * (self.T / self.nt) * np.sum(np.abs(U) ** (p + 1) @ self.w))

    def grad_J1(self, U: np.ndarray) -> np.ndarray:
        N = (2.0 / self.nt) * (self.C.T @ power(U, self.p))
        return self.T * self.ops.to_modal(N).ravel() / self.scale

    def hessp_J1(self, U: np.ndarray, z: np.ndarray) -> np.ndarray:
        dU = self._collocate(z)
        dN = (2.0 / self.nt) * (self.C.T @ (dpower(U, self.p, self.reg) * dU))
        return self.T * self.ops.to_modal(dN).ravel() / self.scale

    def value(self, y):
        q = np.sum(y[self.plus] ** 2) - np.sum(y[self.minus] ** 2)
        return q - self.J1(self._collocate(y))

    def gradient(self, y):
        g = 2 * np.where(self.plus, y, -y)
        return g - self.grad_J1(self._collocate(y))


class InnerResult:
    def __init__(self, s, v, y, value, grad_norm, iterations):
        self.s, self.v, self.y = s, v, y
        self.value, self.grad_norm, self.iterations = value, grad_norm, iterations


def _scalar_start(rf: ReducedFunctional, w: np.ndarray) -> float:
    j1 = rf.J1(rf._collocate(w))
    if j1 <= 0:
        raise ValueError("J1 vanishes on the search direction")
    return (2 / ((rf.p + 1) * j1)) ** (1 / (rf.p - 1))


def _inner(rf: ReducedFunctional, w: np.ndarray, s0=None, v0=None,
           tol: float = 1e-10, maxiter: int = 200) -> InnerResult:
    """Maximize ``F(s w + v)`` over ``s ≥ 0``, ``v ∈ 𝓗⁻`` (w: unit, plus modes only)."""
    mi = rf.minus
    nv = int(mi.sum())
    if s0 is None:
        s0 = _scalar_start(rf, w)
    z0 = np.concatenate(([s0], np.zeros(nv) if v0 is None else v0))

    def compose(z):
        y = z[0] * w
        y[mi] = z[1:]
        return y

    def fun(z):
        y = compose(z)
        U = rf._collocate(y)
        val = np.sum(y[rf.plus] ** 2) - np.sum(z[1:] ** 2) - rf.J1(U)
        g = 2 * np.where(rf.plus, y, -y) - rf.grad_J1(U)
        return -val, -np.concatenate(([np.sum(g * w)], g[mi]))

    def hessp(z, dz):
        y = compose(z)
        dy = dz[0] * w
        dy[mi] = dz[1:]
        h = 2 * np.where(rf.plus, dy, -dy) - rf.hessp_J1(rf._collocate(y), dy)
        return -np.concatenate(([np.sum(h * w)], h[mi]))

    # globalized stage; its acceptance test compares values of F, which stops
    # being informative once |grad|² reaches the rounding level of F
    res = minimize(fun, z0, jac=True, hessp=hessp, method="trust-ncg",
                   options={"gtol": max(tol, 1e-8), "maxiter": maxiter,
                            "initial_trust_radius": 0.1 * max(s0, 1e-3)})
    z = res.x
    if z[0] < 0:
        # F is even, so the mirror point is the maximizer in the admissible half-space
        z = -z
    val, g = fun(z)
    gn = float(np.linalg.norm(g))
    nit = res.nit
    # local stage: plain Newton driven by the gradient norm alone
    for _ in range(20):
        if gn <= tol:
            break
        H = LinearOperator((z.size, z.size), matvec=lambda dz, z=z: hessp(z, dz), dtype=float)
        dz, _ = minres(H, -g, rtol=1e-3 * min(1.0, gn))
        z_new = z + dz
        val_new, g_new = fun(z_new)
        if np.linalg.norm(g_new) >= gn:
            break
        z, val, g, gn = z_new, val_new, g_new, float(np.linalg.norm(g_new))
        nit += 1
    if gn > tol:
        raise ConvergenceError(f"inner maximization stalled at gradient norm {gn:.2e}")
    return InnerResult(float(z[0]), z[1:].copy(), compose(z), -float(val), gn, nit)


def inner_maximize(w: TimeFourierField, ops: ModalOperators, sign="focusing",
                   tol: float = 1e-10, maxiter: int = 200) -> BreatherState:
    """``m1(w)``: the maximizer of ``J`` on ``ℝ⁺w ⊕ 𝓗⁻``."""
    rf = ReducedFunctional(ops, sign, w.nt)
    y = rf.from_coeffs(w.coeffs)
    wp = np.where(rf.plus, y, 0.0)
    nrm = np.linalg.norm(wp)
    if nrm == 0 or nrm < 1e-14 * np.linalg.norm(y):
        raise ValueError("w has no component in the positive space")
    res = _inner(rf, wp / nrm, tol=tol, maxiter=maxiter)
    u = rf.field(res.y)
    state = BreatherState(u, rf.sign, "inner_maximize", converged=True)
    state.diagnostics = {"s": res.s, "F_value": res.value, "grad_norm": res.grad_norm,
                         "iterations": res.iterations}
    return state


def seed_field(config, grid, center: float = np.pi / 2, width: float = 4.0,
               amplitude: float = 1.0, nt: int = 0) -> TimeFourierField:
    """Gaussian bump in the first harmonic centered on cell 0."""
    u = TimeFourierField.zeros(config, grid, nt)
    u.coeffs[0] = amplitude * np.exp(-0.5 * ((grid.x - center) / width) ** 2)
    return u


def nehari_minimize(config, start: TimeFourierField, ops: ModalOperators | None = None,
                    sign="focusing", tol_outer: float = 1e-10, tol_inner: float = 1e-11,
                    maxiter: int = 2000, armijo: float = 1e-4) -> BreatherState:
    """Ground-state search on the Nehari manifold, started from ``start``."""
    ops = ops or ModalOperators(config, start.grid)
    rf = ReducedFunctional(ops, sign, start.nt)
    y = rf.from_coeffs(start.coeffs)
    w = np.where(rf.plus, y, 0.0)
    nrm = np.linalg.norm(w)
    if nrm == 0:
        raise ValueError("start has no component in the positive space")
    w /= nrm

    cur = _inner(rf, w, tol=tol_inner)

    def outer_grad(res, w):
        g = res.s * np.where(rf.plus, rf.gradient(res.y), 0.0)
        return g - np.dot(g, w) * w

    g = outer_grad(cur, w)
    history = [(cur.value, float(np.linalg.norm(g)))]
    step = 1.0 / max(1.0, 2 * cur.s ** 2)
    prev = None
    it = 0
    while np.linalg.norm(g) > tol_outer:
        if it >= maxiter:
            state = BreatherState(rf.field(cur.y), rf.sign, "nehari", history=history)
            raise ConvergenceError(f"outer iteration cap reached, |grad| = {np.linalg.norm(g):.2e}", state)
        it += 1
        if prev is not None:
            dw, dg = w - prev[0], g - prev[1]
            curv = np.dot(dw, dg)
            if curv > 0:
                step = np.dot(dw, dw) / curv
        gg = np.dot(g, g)
        tau = step
        for _ in range(60):
            w_new = w - tau * g
            w_new /= np.linalg.norm(w_new)
            try:
                trial = _inner(rf, w_new, cur.s, cur.v, tol=tol_inner)
            except ConvergenceError:
                trial = None
            if trial is not None:
                noise = 1e2 * np.finfo(float).eps * max(1.0, abs(cur.value))
                if armijo * tau * gg < noise:
                    # the sufficient-decrease test is below rounding level; keep
                    # the nonmonotone BB step unless F visibly increases
                    if trial.value <= cur.value + noise:
                        break
                elif trial.value <= cur.value - armijo * tau * gg:
                    break
            tau *= 0.5
        else:
            # no decrease measurable in floating point: accept a tiny step if it does not increase F
            if trial is None or trial.value > cur.value + 1e-14 * abs(cur.value):
                state = BreatherState(rf.field(cur.y), rf.sign, "nehari", history=history)
                raise ConvergenceError("line search failed", state)
        if np.linalg.norm(np.where(rf.plus, trial.y, 0.0)) < 1e-12:
            raise ConvergenceError("iterate drifted into the negative space")
        prev = (w, g)
        w, cur = w_new, trial
        g = outer_grad(cur, w)
        history.append((cur.value, float(np.linalg.norm(g))))
        log.debug("nehari it=%d F=%.12e |g|=%.3e tau=%.2e", it, cur.value, np.linalg.norm(g), tau)

    u = rf.field(cur.y)
    state = BreatherState(u, rf.sign, "nehari", history=history, converged=True)
    state.diagnostics = compute_diagnostics(u, ops, rf.sign)
    state.diagnostics.update({"outer_iterations": it, "reduced_gradient": float(np.linalg.norm(g))})
    return state
