import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from laxhopf.errors import DomainError
from laxhopf.fundamental_diagram import FundamentalDiagram


@pytest.mark.parametrize("k, q", [(0.0, 0.0), (0.04, 1.2), (0.2, 0.0), (0.12, 0.6)])
def test_flow_examples(fd, k, q):
    assert fd.flow(k) == pytest.approx(q, abs=1e-12)


@pytest.mark.parametrize("k", [-1e-3, 0.2001])
def test_flow_rejects_out_of_range(fd, k):
    with pytest.raises(DomainError):
        fd.flow(k)


@pytest.mark.parametrize("u, expected", [(30.0, 0.0), (-7.5, 1.5), (0.0, 1.2)])
def test_legendre_examples(fd, u, expected):
    assert fd.legendre_transform(u) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("u", [-7.6, 30.1])
def test_legendre_domain(fd, u):
    with pytest.raises(DomainError):
        fd.legendre_transform(u)


def test_legendre_matches_sampled_sup(fd):
    # 10,000 intervals, so the kink at k_c is a grid node
    ks = np.linspace(0.0, fd.k_j, 10_001)
    q = np.array([fd.flow(k) for k in ks])
    for u in np.linspace(-fd.w, fd.v, 200):
        assert abs(fd.legendre_transform(u) - np.max(q - u * ks)) <= 1e-6


def test_max_passing_rate_examples(fd):
    assert fd.max_passing_rate(5.0, 2) == pytest.approx(0.5, abs=1e-12)
    assert fd.max_passing_rate(5.0, 1) == 0.0
    per_lane = FundamentalDiagram.from_densities(30.0, 0.02, 0.1)
    assert per_lane.max_passing_rate(20.0, 2) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(DomainError):
        fd.max_passing_rate(31.0, 2)


def test_congested_speed_examples(fd):
    assert fd.congested_speed(0.2) == 0.0
    assert fd.congested_speed(0.1) == pytest.approx(7.5, abs=1e-12)
    assert fd.congested_speed(0.04) == pytest.approx(30.0, abs=1e-12)
    for bad in (0.0, 0.03, 0.21):
        with pytest.raises(DomainError):
            fd.congested_speed(bad)


def test_capacity_consistency_enforced():
    with pytest.raises(DomainError):
        FundamentalDiagram(v=30.0, w=8.0, k_c=0.04, k_j=0.2)
    with pytest.raises(DomainError):
        FundamentalDiagram(v=30.0, w=7.5, k_c=0.2, k_j=0.04)
    fd = FundamentalDiagram.from_densities(30.0, 0.04, 0.2)
    assert fd.w == pytest.approx(7.5)
    assert fd.q_max == pytest.approx(1.2)


@given(k=st.floats(0.04, 0.2))
def test_congested_speed_is_flow_over_density(k):
    fd = FundamentalDiagram(30.0, 7.5, 0.04, 0.2)
    assert fd.flow(k) / k == pytest.approx(fd.congested_speed(k), abs=1e-9)


@given(a=st.floats(0.0, 0.2), b=st.floats(0.0, 0.2), lam=st.floats(0.0, 1.0))
def test_flow_concave(a, b, lam):
    fd = FundamentalDiagram(30.0, 7.5, 0.04, 0.2)
    mid = lam * a + (1 - lam) * b
    assert fd.flow(mid) >= lam * fd.flow(a) + (1 - lam) * fd.flow(b) - 1e-12
    assert fd.flow(mid) <= fd.q_max + 1e-12


def test_flow_continuous_at_critical(fd):
    eps = 1e-12
    assert math.isclose(fd.flow(fd.k_c - eps), fd.flow(fd.k_c + eps), abs_tol=1e-9)
