import pytest

from laxhopf.bottleneck_propagation import (
    MovingBottleneckSpec,
    Regime,
    classify,
    propagate,
    step,
)
from laxhopf.errors import DomainError
from laxhopf.scenario import builtin_scenario

from helpers import road


@pytest.mark.parametrize("dn, expected", [
    (0.6, Regime.ACTIVE), (0.3, Regime.INACTIVE_LOW_FLOW), (-0.1, Regime.INACTIVE_CONGESTED),
    (0.0, Regime.INACTIVE_LOW_FLOW), (0.5, Regime.ACTIVE),
])
def test_classify(dn, expected):
    assert classify(10.0, 10.0 + dn * 2.0, 2.0, 0.5) is expected


def test_classify_rejects_nonpositive_dt():
    with pytest.raises(DomainError):
        classify(0, 1, 0.0, 0.5)


def test_step_active_in_uniform_flow():
    sol = road(0.02, 0.6, 0.6)
    spec = MovingBottleneckSpec(1000, 50, 2000, 5.0)
    (x1, t1), regime, seg, frag = step((1000.0, 50.0), spec, sol, 1.0, 0.5)
    assert regime is Regime.ACTIVE
    assert (x1, t1) == (1005.0, 51.0)
    assert frag.N_e - frag.N_b == pytest.approx(0.5)
    assert seg.passing_count == pytest.approx(0.5)


def test_step_empty_road_is_low_flow():
    sol = road(0.0, 0.0, 0.0)
    spec = MovingBottleneckSpec(1000, 50, 2000, 5.0)
    (x1, t1), regime, _, frag = step((1000.0, 50.0), spec, sol, 1.0, 0.5)
    assert regime is Regime.INACTIVE_LOW_FLOW and frag is None
    assert x1 == 1005.0 and t1 == 51.0


def test_step_in_jam_stands_still():
    sol = road(0.2, 0.0, 0.0)
    spec = MovingBottleneckSpec(1000, 50, 2000, 5.0)
    (x1, _), regime, seg, _ = step((1000.0, 50.0), spec, sol, 1.0, 0.5)
    assert regime is Regime.INACTIVE_CONGESTED
    assert x1 == pytest.approx(1000.0) and seg.speed == pytest.approx(0.0)


def test_single_bottleneck_scenario():
    s = builtin_scenario("single_bottleneck")
    sol = s.base_solution()
    segs, blocks = propagate(s.moving[0], sol, dt=1.0)
    active = [g for g in segs if g.regime is Regime.ACTIVE]
    assert active, "the slow vehicle should restrict traffic after entering"
    for g in active:
        assert g.speed == pytest.approx(5.0, abs=1e-12)
        assert g.passing_count == pytest.approx(0.5 * (g.t1 - g.t0), abs=1e-12)
    assert blocks
    for b in blocks:
        assert b.rate == pytest.approx(0.5, abs=1e-12)
        assert b.speed == pytest.approx(5.0, abs=1e-12)


def test_trajectory_invariants():
    s = builtin_scenario("single_bottleneck")
    sol = s.base_solution()
    segs, blocks = propagate(s.moving[0], sol, dt=1.0)
    for a, b in zip(segs, segs[1:]):
        assert (a.t1, a.x1) == (b.t0, b.x0)
    for g in segs:
        assert g.x1 >= g.x0 and g.passing_count >= 0
        assert g.speed <= s.moving[0].v_max + 1e-12
    for a, b in zip(blocks, blocks[1:]):
        assert a.t_e <= b.t_b
    for blk in blocks:
        on = [g for g in segs if blk.t_b - 1e-9 <= g.t0 < blk.t_e]
        assert all(abs(blk.position(g.t0) - g.x0) < 1e-7 for g in on)


def test_empty_road_exit_time_exact():
    sol = road(0.0, 0.0, 0.0)
    spec = MovingBottleneckSpec(300, 12.5, 2700, 9.0)
    segs, blocks = propagate(spec, sol, dt=1.0)
    assert blocks == []
    assert all(g.regime is Regime.INACTIVE_LOW_FLOW for g in segs)
    assert segs[-1].x1 == 2700
    assert segs[-1].t1 == pytest.approx(12.5 + 2400 / 9.0, abs=1e-9)


@pytest.mark.parametrize("dt", [0.5, 1.0, 2.0])
def test_constant_flow_merges_into_one_block(dt):
    # relative flow 0.9 - 5*0.03 = 0.75 sits well above the passing rate
    sol = road(0.03, 0.9, 0.9)
    spec = MovingBottleneckSpec(500, 20, 2500, 5.0)
    _, blocks = propagate(spec, sol, dt=dt)
    assert len(blocks) == 1
    assert blocks[0].rate == pytest.approx(0.5, abs=1e-12)


def test_full_speed_bottleneck_degenerates():
    sol = road(0.02, 0.6, 0.6)
    spec = MovingBottleneckSpec(500, 20, 1500, 30.0)
    segs, blocks = propagate(spec, sol, dt=1.0, n_lanes=2)
    assert all(g.regime is Regime.ACTIVE for g in segs)
    assert all(b.rate == 0.0 for b in blocks)


def test_horizon_checks():
    sol = road(0.02, 0.6, 0.6, T=100.0)
    spec = MovingBottleneckSpec(500, 20, 2500, 5.0)
    with pytest.raises(DomainError):
        propagate(spec, sol, T=200.0)
    segs, _ = propagate(spec, sol, T=100.0)
    assert segs[-1].t1 == pytest.approx(100.0)


def test_spec_validation():
    with pytest.raises(DomainError):
        MovingBottleneckSpec(100, 0, 50, 5.0)
    with pytest.raises(DomainError):
        MovingBottleneckSpec(0, 0, 50, 0.0)
    with pytest.raises(DomainError):
        MovingBottleneckSpec(0, -1, 50, 5.0)
    with pytest.raises(DomainError):
        propagate(MovingBottleneckSpec(0, 0, 50, 31.0), road(0.0, 0.0, 0.0))
