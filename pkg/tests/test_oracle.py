import numpy as np
import pytest
from hypothesis import given, strategies as st

from laxhopf.errors import ConfigError, DomainError
from laxhopf.oracle import (
    CellField,
    check_cfl,
    compare_fields,
    demand,
    interface_fluxes,
    semi_analytic_cells,
    simulate,
    step_field,
    supply,
)

from helpers import FD, road

DT = 10.0 / 30.0  # CFL limit at dx = 10


@pytest.mark.parametrize("k, d, s", [(0.0, 0.0, 1.2), (0.2, 1.2, 0.0), (0.12, 1.2, 0.6), (0.02, 0.6, 1.2)])
def test_demand_supply(k, d, s):
    assert demand(FD, k) == pytest.approx(d)
    assert supply(FD, k) == pytest.approx(s)


def test_demand_rejects_bad_density():
    with pytest.raises(DomainError):
        demand(FD, 0.25)


def test_equilibrium_is_stationary():
    fld = CellField(10.0, DT, np.full(100, 0.02))
    for _ in range(50):
        fld = step_field(fld, FD, 0.6, 0.6)
    assert np.allclose(fld.k, 0.02, atol=1e-15)


def test_riemann_shock_speed():
    k = np.where(np.arange(300) < 150, 0.04, 0.2)
    fld = CellField(10.0, DT, k)
    for _ in range(100):
        fld = step_field(fld, FD, 1.2, 0.0)
    front = fld.centers[np.argmax(fld.k > 0.12)]
    expected = 1500.0 + (0.0 - 1.2) / (0.2 - 0.04) * fld.time
    assert abs(front - expected) <= 10.0


def test_capped_interface_settles_to_passing_rate():
    fld = CellField(10.0, DT, np.zeros(200))
    for _ in range(900):
        fld = step_field(fld, FD, 0.6, 1.2, caps=[(1000.0, 0.5)])
    flux = interface_fluxes(fld, FD, 0.6, 1.2, caps=[(1000.0, 0.5)])
    assert flux[100] == pytest.approx(0.5, rel=0.02)
    assert fld.k[150:].mean() == pytest.approx(0.5 / 30.0, rel=0.02)


def test_cap_moving_with_speed_limits_relative_flow():
    fld = CellField(10.0, DT, np.full(10, 0.03))
    flux = interface_fluxes(fld, FD, 0.9, 1.2, caps=[(50.0, 0.2, 5.0)])
    assert flux[5] == pytest.approx(0.2 + 5.0 * 0.03)


def test_conservation_closed_domain():
    rng = np.random.default_rng(3)
    fld = CellField(10.0, DT, rng.uniform(0, FD.k_j, 80))
    total = fld.total()
    for _ in range(10_000):
        fld = step_field(fld, FD, 0.0, 0.0)
    assert fld.total() == pytest.approx(total, rel=1e-12)
    assert fld.k.min() >= -1e-12 and fld.k.max() <= FD.k_j + 1e-12


@given(st.lists(st.floats(0, 0.2), min_size=5, max_size=40), st.floats(0, 1.5), st.floats(0, 1.5))
def test_step_conserves_against_boundary_fluxes(k, q_in, q_out):
    fld = CellField(10.0, DT, np.array(k))
    flux = interface_fluxes(fld, FD, q_in, q_out)
    nxt = step_field(fld, FD, q_in, q_out)
    assert nxt.total() - fld.total() == pytest.approx((flux[0] - flux[-1]) * DT, abs=1e-12)
    assert nxt.k.min() >= -1e-12 and nxt.k.max() <= FD.k_j + 1e-12


def test_cfl_violation():
    with pytest.raises(ConfigError):
        check_cfl(FD, 10.0, 0.34)
    check_cfl(FD, 10.0, DT)
    with pytest.raises(ConfigError):
        simulate(FD, 0, 100, 10, [(0, 100, 0.0)], [(0, 10, 0.0)], [(0, 10, 0.0)], 10.0, dt=1.0)


def test_compare_fields():
    b = np.full((4, 10), 0.05)
    assert compare_fields(b, b) == 0.0
    a = b.copy()
    a[2, 3] += FD.k_j
    assert compare_fields(a, b) == pytest.approx(FD.k_j / (b.size * 0.05))
    with pytest.raises(ConfigError):
        compare_fields(b, b[:, :5])


def test_boundary_queue_tracks_unserved_demand():
    # road fully jammed and closed downstream: nothing can enter
    run = simulate(FD, 0, 500, 20, [(0, 500, 0.2)], [(0, 20, 0.5)], [(0, 20, 0.0)], 10.0)
    assert run.inflow == pytest.approx(0.0, abs=1e-12)
    assert run.queue[-1] == pytest.approx(0.5 * 20)


def test_first_order_convergence_on_shock():
    """Downstream restriction 0.3 < inflow 0.6 sends a shock upstream."""
    sol = road(0.02, 0.6, 0.3, T=200.0, L=2000.0)
    errors = []
    for dx in (20.0, 10.0, 5.0):
        run = simulate(FD, 0, 2000, 200, [(0, 2000, 0.02)], [(0, 200, 0.6)], [(0, 200, 0.3)],
                       dx, sample_dt=10.0)
        errors.append(compare_fields(run.densities, semi_analytic_cells(sol, run.edges, run.times)))
    assert errors[-1] < 1e-3
    for coarse, fine in zip(errors, errors[1:]):
        assert coarse / fine >= 1.5
