import numpy as np
import pytest

from necklace.gapcheck import FrequencyConfig
from necklace.graph import GraphFunction, NecklaceGrid
from necklace.solver import ModalOperators, newton_solve, seed_field
from necklace.timesim import (WaveModel, WaveState, energy, initial_data, return_error,
                              simulate, step_leapfrog)


def _state(grid, u):
    return WaveState(GraphFunction(grid, u), GraphFunction(grid, np.zeros_like(u)))


@pytest.fixture(scope="module")
def grid():
    return NecklaceGrid(4, 8, "periodic_cells", symmetric=True)


def test_cfl_rejected(grid):
    m = WaveModel(grid)
    s = _state(grid, np.zeros(grid.ndof))
    with pytest.raises(ValueError):
        step_leapfrog(s, 1.01 * grid.step, m)
    step_leapfrog(s, grid.step, m)


def test_linear_constant_mode_frequency(grid):
    # tiny amplitude: u = ε cos(√α t) up to O(dt²) and O(ε³)
    m = WaveModel(grid, alpha=1.0)
    eps = 1e-6
    s0 = _state(grid, eps * np.ones(grid.ndof))
    errs = []
    for dt in (0.1, 0.05):
        n = int(round(3.0 / dt))
        s = step_leapfrog(s0, dt, m, n)
        errs.append(np.abs(s.u.values - eps * np.cos(s.t)).max() / eps)
    assert errs[1] < errs[0] / 3.5
    assert errs[1] < 1e-3


def test_reversibility(grid):
    rng = np.random.default_rng(0)
    m = WaveModel(grid, alpha=0.3)
    s0 = _state(grid, 0.05 * rng.standard_normal(grid.ndof))
    dt = 0.5 * grid.step
    back = step_leapfrog(step_leapfrog(s0, dt, m, 200), -dt, m, 200)
    assert np.abs(back.u.values - s0.u.values).max() < 1e-10
    assert abs(back.t) < 1e-12


def test_energy_error_second_order(grid):
    rng = np.random.default_rng(1)
    m = WaveModel(grid, alpha=0.3)
    x = grid.x
    s0 = _state(grid, 0.3 * np.exp(-((x - np.pi / 2) / 3) ** 2))
    e0 = energy(s0, m)
    errs = []
    for dt in (grid.step / 2, grid.step / 4):
        n = int(round(2.0 / dt))
        errs.append(abs(energy(step_leapfrog(s0, dt, m, n), m) - e0))
    assert errs[1] < errs[0] / 3.5


def test_defocusing_energy_sign(grid):
    u = np.ones(grid.ndof)
    s = _state(grid, u)
    ef = energy(s, WaveModel(grid, sign="focusing"))
    ed = energy(s, WaveModel(grid, sign="defocusing"))
    assert ed > ef


def test_breather_return_and_antiperiod():
    cfg = FrequencyConfig.with_harmonics(2)
    grid = NecklaceGrid(6, 8, "periodic_cells", symmetric=True)
    ops = ModalOperators(cfg, grid)
    b = newton_solve(cfg, seed_field(cfg, grid), ops)
    s0 = initial_data(b)
    assert np.allclose(s0.u.values, b.field.coeffs.sum(axis=0))
    assert np.abs(s0.v.values).max() == 0
    r1 = return_error(b, grid.step / 2)
    r2 = return_error(b, grid.step / 4)
    assert r2.steps % 2 == 0 and r2.period == pytest.approx(4 * np.pi)
    # two harmonics: the return error is the truncation floor, not a time-step error
    assert abs(r2.return_error - r1.return_error) < 0.1 * r1.return_error
    assert r2.antiperiod_error < 0.1
    assert r2.energy_drift < r1.energy_drift / 3 and r2.energy_drift < 1e-4
    rows, final = simulate(b, grid.step / 2, periods=1.0, every=10)
    assert rows[0, 0] == 0 and rows[-1, 0] == pytest.approx(4 * np.pi)
    # Verlet energy oscillates at O(dt²) within the period; drift order is checked above
    assert np.abs(rows[:, 1] - rows[0, 1]).max() < 1e-2 * abs(rows[0, 1])


def test_zero_field_rejected():
    cfg = FrequencyConfig.with_harmonics(1)
    grid = NecklaceGrid(6, 8, "periodic_cells", symmetric=True)
    from necklace.solver import TimeFourierField
    with pytest.raises(ValueError):
        return_error(TimeFourierField.zeros(cfg, grid), 0.1)


def test_short_domain_rejected():
    cfg = FrequencyConfig.with_harmonics(1)
    grid = NecklaceGrid(1, 8, "periodic_cells", symmetric=True)
    from necklace.solver import TimeFourierField
    f = TimeFourierField.zeros(cfg, grid)
    f.coeffs[0] = 0.1
    rows, _ = simulate(f, 0.1, periods=0.5)
    with pytest.raises(ValueError):
        simulate(f, 0.1, periods=2.0)
