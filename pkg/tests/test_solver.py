import numpy as np
import pytest

from necklace.exceptions import CertificationError, ResonanceError
from necklace.gapcheck import FrequencyConfig
from necklace.graph import NecklaceGrid
from necklace.solver import (ModalOperators, TimeFourierField, assemble_Lk, diagnostics_norms,
                             evaluate_dJ, evaluate_J, inner_maximize, linear_resolve,
                             nehari_defects, nehari_minimize, newton_solve, nonlinear_term,
                             project_pm, seed_field)
from necklace.solver.fields import pairing
from necklace.solver.functional import J0, J1


@pytest.fixture(scope="module")
def small():
    cfg = FrequencyConfig.with_harmonics(2)
    grid = NecklaceGrid(6, 8, "periodic_cells", symmetric=True)
    return cfg, grid, ModalOperators(cfg, grid)


def _rand(cfg, grid, rng, scale=1.0):
    return TimeFourierField(cfg, grid, scale * rng.standard_normal((cfg.num_harmonics, grid.ndof)))


def test_Lk_on_constants(small):
    cfg, grid, _ = small
    for k in (1, 3):
        L = assemble_Lk(cfg, k, grid)
        out = L.apply(np.ones(grid.ndof))
        assert np.allclose(out, cfg.alpha - cfg.omega ** 2 * k * k, atol=1e-12)
        a = np.random.default_rng(k).standard_normal(grid.ndof)
        b = np.random.default_rng(k + 10).standard_normal(grid.ndof)
        assert L.quadratic(a, b) == pytest.approx(L.quadratic(b, a), rel=1e-12)


def test_linear_resolve_inverts(small):
    cfg, grid, ops = small
    f = _rand(cfg, grid, np.random.default_rng(0))
    v = linear_resolve(ops, f)
    assert np.allclose(ops.apply_L(v).coeffs, f.coeffs, atol=1e-10)


def test_uncertified_config_is_rejected():
    cfg = FrequencyConfig(kappa=1, alpha=0.2)
    grid = NecklaceGrid(4, 8, "periodic_cells", symmetric=True)
    with pytest.raises(CertificationError):
        ModalOperators(cfg, grid)


def test_dirichlet_edge_state_is_flagged():
    cfg = FrequencyConfig.with_harmonics(2)
    grid = NecklaceGrid(6, 8, symmetric=True)
    with pytest.raises(ResonanceError):
        ModalOperators(cfg, grid)


def test_nonlinear_term_cubic_oracle(small):
    cfg, grid, _ = small
    a = np.random.default_rng(1).standard_normal(grid.ndof)
    u = TimeFourierField(cfg, grid, np.vstack([a, np.zeros_like(a)]))
    # cos³θ = (3 cos θ + cos 3θ)/4
    N = nonlinear_term(u)
    assert np.allclose(N.coeffs[0], 0.75 * a ** 3, atol=1e-13)
    assert np.allclose(N.coeffs[1], 0.25 * a ** 3, atol=1e-13)
    assert np.allclose(nonlinear_term(-u).coeffs, -N.coeffs)
    assert np.allclose(nonlinear_term(u, "defocusing").coeffs, -N.coeffs)


def test_functional_zero_and_homogeneity(small):
    cfg, grid, ops = small
    assert evaluate_J(TimeFourierField.zeros(cfg, grid), ops) == 0
    u = _rand(cfg, grid, np.random.default_rng(2))
    for s in (0.5, 2.0, 3.0):
        assert J0(s * u, ops) == pytest.approx(s ** 2 * J0(u, ops), rel=1e-12)
        assert J1(s * u) == pytest.approx(s ** 4 * J1(u), rel=1e-12)


@pytest.mark.parametrize("sign", ["focusing", "defocusing"])
def test_gradient_finite_difference(small, sign):
    cfg, grid, ops = small
    rng = np.random.default_rng(3)
    u = _rand(cfg, grid, rng, 0.3)
    v = _rand(cfg, grid, rng)
    eps = 1e-5
    fd = (evaluate_J(u + eps * v, ops, sign) - evaluate_J(u - eps * v, ops, sign)) / (2 * eps)
    an = pairing(evaluate_dJ(u, ops, sign), v)
    assert abs(fd - an) <= 1e-6 * max(1, abs(an))


def test_projectors(small):
    cfg, grid, ops = small
    u = _rand(cfg, grid, np.random.default_rng(4))
    up, um = project_pm(ops, u, "+"), project_pm(ops, u, "-")
    assert np.abs((up + um - u).coeffs).max() <= 1e-12 * np.abs(u.coeffs).max()
    assert np.abs((project_pm(ops, up, "+") - up).coeffs).max() <= 1e-12
    assert np.abs(project_pm(ops, up, "-").coeffs).max() <= 1e-12
    assert J0(up, ops) > 0 > J0(um, ops)
    with pytest.raises(ValueError):
        project_pm(ops, u, "+-")


def test_negative_counts_match_lattice(small):
    _, grid, ops = small
    from necklace.solver.operators import lattice_negative_count
    for r, k in enumerate(ops.config.harmonics):
        assert ops.negative_counts()[r] == lattice_negative_count(ops.config, int(k), grid.cell_count)
    assert ops.discrete_gap > 0.1 * ops.certificate.delta_star


def test_norms_and_embedding(small):
    cfg, grid, ops = small
    u = _rand(cfg, grid, np.random.default_rng(5))
    d = diagnostics_norms(ops, u)
    assert 0 < d["H_norm"] <= d["embedding_constant"] * d["calH_norm"] * (1 + 1e-12)
    # 𝓗² = J0(P⁺u) - J0(P⁻u)
    up, um = project_pm(ops, u, "+"), project_pm(ops, u, "-")
    assert d["calH_norm"] ** 2 == pytest.approx(J0(up, ops) - J0(um, ops), rel=1e-10)


def test_inner_maximize_properties(small):
    cfg, grid, ops = small
    w = seed_field(cfg, grid, width=2.0)
    a = inner_maximize(w, ops)
    # scaling and adding negative-space components leave m1 unchanged
    b = inner_maximize(3.7 * w, ops)
    rng = np.random.default_rng(6)
    c = inner_maximize(w + project_pm(ops, _rand(cfg, grid, rng), "-"), ops)
    for other in (b, c):
        diff = np.abs(other.field.coeffs - a.field.coeffs).max()
        assert diff <= 1e-8 * np.abs(a.field.coeffs).max()
    self_def, minus_def = nehari_defects(a.field, ops)
    assert self_def <= 1e-9 and minus_def <= 1e-9
    assert evaluate_J(a.field, ops) > 0


def test_inner_maximize_scalar_oracle(small):
    # with no negative-space mixing, F(s w) = s² - c s⁴ peaks at s² = 1/(2c)
    cfg, grid, ops = small
    from necklace.solver.nehari import ReducedFunctional, _inner
    rf = ReducedFunctional(ops, "focusing")
    rng = np.random.default_rng(7)
    y = np.where(rf.plus, rng.standard_normal(rf.plus.shape), 0.0)
    y /= np.linalg.norm(y)
    c = rf.J1(rf._collocate(y))
    res = _inner(rf, y, tol=1e-11)
    assert res.value >= 1 / (4 * c) - 1e-12  # maximizing over 𝓗⁻ too can only increase F
    with pytest.raises(ValueError):
        inner_maximize(project_pm(ops, _rand(cfg, grid, rng), "-"), ops)


@pytest.mark.parametrize("sign", ["focusing", "defocusing"])
def test_nehari_minimize_small(small, sign):
    cfg, grid, ops = small
    st = nehari_minimize(cfg, seed_field(cfg, grid), ops, sign=sign, tol_outer=1e-9)
    d = st.diagnostics
    assert st.converged and d["l2_norm"] > 1e-3
    assert d["pde_residual"] <= 1e-7
    assert d["nehari_self"] <= 1e-9 and d["nehari_minus"] <= 1e-7
    assert d["ground_state_defect"] <= 1e-8
    assert np.sign(d["J_value"]) == (1 if sign == "focusing" else -1)
    # the history of F along the outer loop never climbs visibly
    vals = np.array([h[0] for h in st.history])
    assert np.all(np.diff(vals) <= 1e-10 * np.abs(vals[:-1]).max())


def test_newton_quadratic_convergence(small):
    cfg, grid, ops = small
    st = newton_solve(cfg, seed_field(cfg, grid), ops, tol=1e-11)
    h = np.array(st.history)
    assert st.converged and h[-1] <= 1e-11
    assert st.diagnostics["l2_norm"] > 1e-3
    # last steps contract quadratically
    big = h[h > 1e-9]
    ratios = big[1:] / big[:-1] ** 2
    assert len(ratios) == 0 or ratios[-1] < 1e3


def test_newton_from_tiny_start_finds_trivial_state(small):
    cfg, grid, ops = small
    st = newton_solve(cfg, seed_field(cfg, grid, amplitude=1e-6), ops, nehari_seed=False)
    assert st.diagnostics["l2_norm"] < 1e-10
