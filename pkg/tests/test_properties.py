import numpy as np
from hypothesis import given, settings, strategies as st

from necklace.bloch import bloch_forward, bloch_inverse
from necklace.gapcheck import FrequencyConfig, delta_star
from necklace.graph import GraphFunction, NecklaceGrid, apply_laplacian, l2_inner
from necklace.solver import TimeFourierField, nonlinear_term
from necklace.spectrum import A_HALF, a_of_l, band_closed_form, hill_discriminant

grids = st.builds(NecklaceGrid, st.integers(1, 5), st.integers(4, 9),
                  st.sampled_from(["dirichlet_truncation", "periodic_cells"]), st.booleans())


def _values(grid, seed, complex_=False):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(grid.ndof)
    return v + 1j * rng.standard_normal(grid.ndof) if complex_ else v


@settings(max_examples=40, deadline=None)
@given(grids, st.integers(0, 2 ** 16))
def test_laplacian_is_self_adjoint_and_nonpositive(g, seed):
    u = GraphFunction(g, _values(g, seed))
    v = GraphFunction(g, _values(g, seed + 1))
    a = l2_inner(apply_laplacian(u), v)
    b = l2_inner(u, apply_laplacian(v))
    assert abs(a - b) <= 1e-9 * (1 + abs(a))
    assert l2_inner(apply_laplacian(u), u).real <= 1e-9


@settings(max_examples=40, deadline=None)
@given(grids, st.integers(0, 2 ** 16))
def test_inner_product_hermitian(g, seed):
    u = GraphFunction(g, _values(g, seed, True))
    v = GraphFunction(g, _values(g, seed + 7, True))
    assert abs(l2_inner(u, v) - np.conj(l2_inner(v, u))) <= 1e-12 * (1 + abs(l2_inner(u, v)))
    assert l2_inner(u, u).real >= 0


@settings(max_examples=30, deadline=None)
@given(grids, st.integers(0, 2 ** 16))
def test_bloch_round_trip_any_grid(g, seed):
    u = GraphFunction(g, _values(g, seed, True))
    f = bloch_forward(u)
    assert np.allclose(bloch_inverse(f).values, u.values, atol=1e-12)
    total = f.cell_inner(f).real.sum() / f.grid.cell_count
    assert abs(total - l2_inner(u, u).real) <= 1e-12 * (1 + total)


@given(st.floats(-3, 3, allow_nan=False))
def test_a_even_periodic_bounded(l):
    a = a_of_l(l)
    assert 0 <= a <= A_HALF + 1e-15
    assert abs(a - a_of_l(-l)) <= 1e-12
    assert abs(a - a_of_l(l + 1)) <= 1e-9


@given(st.floats(0, 400, allow_nan=False))
def test_hill_discriminant_bounds(lam):
    t = hill_discriminant(lam)
    assert -2.5 - 1e-12 <= t <= 2 + 1e-12


@given(st.integers(-8, 8), st.floats(-0.49, 0.5))
def test_band_value_is_on_trace_level(m, l):
    lam = band_closed_form(m, l).lam
    assert abs(hill_discriminant(lam) - 2 * np.cos(2 * np.pi * l)) <= 1e-9 * max(1, lam)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 16), st.floats(0.1, 3.0))
def test_nonlinear_term_odd_and_homogeneous(J, seed, s):
    cfg = FrequencyConfig.with_harmonics(J)
    g = NecklaceGrid(2, 4, "periodic_cells", symmetric=True)
    rng = np.random.default_rng(seed)
    u = TimeFourierField(cfg, g, rng.standard_normal((J, g.ndof)))
    N = nonlinear_term(u).coeffs
    assert np.allclose(nonlinear_term(-u).coeffs, -N)
    assert np.allclose(nonlinear_term(s * u).coeffs, s ** 3 * N, rtol=1e-12, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([1, 3, 5, 7, 9]), st.floats(0, 2, allow_nan=False))
def test_delta_star_nonnegative_and_bounded(kappa, alpha):
    cert = delta_star(FrequencyConfig(kappa=kappa, alpha=alpha))
    assert 0 <= cert.delta_star <= cert.tail_bound
    # the enumerated value is attained by the reported pair
    if cert.delta_star > 0:
        assert any(p["distance"] == cert.delta_star for p in cert.pairs)


@given(st.sampled_from([1, 3, 5]), st.integers(1, 6))
def test_harmonics_are_odd_multiples(kappa, J):
    cfg = FrequencyConfig.with_harmonics(J, kappa=kappa)
    k = cfg.harmonics
    assert len(k) == J and np.all(k % kappa == 0) and np.all((k // kappa) % 2 == 1)
