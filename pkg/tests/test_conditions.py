import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from laxhopf.conditions import (
    InternalBlock,
    build_downstream,
    build_initial,
    build_upstream,
    initial_count,
)
from laxhopf.errors import DomainError, SchemaError

ZONES = [(0, 1000, 0.04), (1000, 2000, 0.02), (2000, 3000, 0.04)]
INFLOW = [(0, 40, 1.0), (40, 180, 1.0), (180, 300, 1.0)]
OUTFLOW = [(0, 40, 0.9), (40, 180, 0.2), (180, 300, 0.9)]


def test_initial_zone_intercepts(fd):
    # continuity at x=2000 (-40 - 20 = -60) forces the third intercept to +20
    blocks = build_initial(ZONES, 0.0, fd)
    assert [b.b for b in blocks] == pytest.approx([0.0, -20.0, 20.0], abs=1e-12)
    assert initial_count(blocks, 3000.0) == pytest.approx(-100.0, abs=1e-12)


def test_initial_single_piece(fd):
    (block,) = build_initial([(0, 3000, 0.04)], 0.0, fd)
    assert block.b == 0.0
    assert block.value(1500.0) == pytest.approx(-60.0)


def test_initial_errors(fd):
    with pytest.raises(SchemaError):
        build_initial([], 0.0, fd)
    with pytest.raises(SchemaError, match="gap"):
        build_initial([(0, 10, 0.01), (20, 30, 0.01)], 0.0, fd)
    with pytest.raises(SchemaError, match="overlap"):
        build_initial([(0, 20, 0.01), (10, 30, 0.01)], 0.0, fd)
    with pytest.raises(DomainError):
        build_initial([(0, 10, 0.3)], 0.0, fd)


def test_upstream_examples(fd):
    blocks = build_upstream(INFLOW, fd)
    assert [b.d for b in blocks] == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)
    assert blocks[-1].value(300.0) == pytest.approx(300.0)
    saturated = build_upstream([(0, 40, 1.2), (40, 300, 1.2)], fd)
    assert [b.d for b in saturated] == pytest.approx([0.0, 0.0], abs=1e-12)
    assert saturated[1].value(100.0) == pytest.approx(120.0)
    (zero,) = build_upstream([(0, 10, 0.0)], fd)
    assert zero.value(0.0) == zero.value(10.0) == 0.0


def test_upstream_rejects_gaps_and_excess_flow(fd):
    with pytest.raises(SchemaError):
        build_upstream([(0, 10, 0.5), (12, 20, 0.5)], fd)
    with pytest.raises(SchemaError):
        build_upstream([(5, 10, 0.5)], fd)
    with pytest.raises(DomainError):
        build_upstream([(0, 10, 1.3)], fd)


def test_downstream_examples(fd):
    blocks = build_downstream(OUTFLOW, -100.0, fd)
    assert blocks[0].value(40.0) == pytest.approx(-64.0)
    assert blocks[-1].value(300.0) == pytest.approx(72.0)
    (closed,) = build_downstream([(0, 50, 0.0)], -100.0, fd)
    assert closed.value(0.0) == closed.value(50.0) == -100.0


def test_corner_compatibility(fd):
    ini = build_initial(ZONES, 0.0, fd)
    up = build_upstream(INFLOW, fd)
    down = build_downstream(OUTFLOW, initial_count(ini, 3000.0), fd)
    assert up[0].value(0.0) == initial_count(ini, 0.0) == 0.0
    assert down[0].value(0.0) == initial_count(ini, 3000.0)


@given(st.lists(st.tuples(st.floats(1.0, 500.0), st.floats(0.0, 0.2)), min_size=1, max_size=6))
def test_initial_is_negative_integral(pieces):
    x, rows = 0.0, []
    for length, k in pieces:
        rows.append((x, x + length, k))
        x += length
    blocks = build_initial(rows, 0.0)
    integral = 0.0
    for (lo, hi, k), b in zip(rows, blocks):
        assert b.value(lo) == pytest.approx(-integral, abs=1e-9)
        integral += k * (hi - lo)
        assert b.value(hi) == pytest.approx(-integral, abs=1e-9)


def test_internal_block_accessors(fd):
    blk = InternalBlock(0, 100, 0, 500, 0, 50)
    assert blk.speed == 5.0 and blk.rate == 0.5
    assert blk.value(250, 50) == 25.0
    assert math.isinf(blk.value(260, 50))
    blk.check_speed(fd)
    with pytest.raises(DomainError):
        InternalBlock(0, 10, 0, 1000, 0, 1).check_speed(fd)
    with pytest.raises(DomainError):
        InternalBlock(0, 10, 0, 10, 5, 1)
