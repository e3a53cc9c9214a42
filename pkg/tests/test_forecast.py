import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from cavrebound.errors import DomainError, InvalidConfig, NoFrontier, NonMonotone
from cavrebound.forecast import (
    CostShares,
    Scenario,
    aggregate_gge,
    backfire,
    energy_ratio,
    frontier,
    fuel_factor,
    grid_values,
    induced_travel_m3,
    induced_travel_m4,
    sweep_grid,
)

OVERALL = {"eps_f": -0.0989, "eps_t": -0.4007}
G1 = {"eps_f": -0.153, "eps_t": -0.290}
G5 = {"eps_f": -0.109, "eps_t": -0.474}
TABLE3 = {1: G1, 2: {"eps_f": -0.131, "eps_t": -0.403}, 3: {"eps_f": -0.097, "eps_t": -0.446},
          4: {"eps_f": -0.092, "eps_t": -0.463}, 5: G5}

neg = st.floats(-1.5, -0.01)
xs = st.floats(0.01, 0.5)
ys = st.floats(0.0, 0.9)


def test_no_change_no_travel():
    assert induced_travel_m3(-0.1, -0.4, 0.0, 0.0) == 0.0
    assert induced_travel_m4(-0.39, CostShares(0.1, 0.4), 0.0, 0.0) == 0.0


def test_m3_examples():
    assert induced_travel_m3(-0.0989, -0.4007, 0.2, 0.6) == pytest.approx(1.2 ** 0.0989 * 0.4 ** -0.4007 - 1, rel=1e-14)
    assert induced_travel_m3(-0.109, -0.474, 0.2, 0.6) == pytest.approx(0.575, abs=0.001)


def test_m4_example():
    d = induced_travel_m4(-0.3920, CostShares(0.10, 0.40), 0.2, 0.6)
    ratio = (0.10 / 1.2 + 0.40 * 0.4) / 0.50
    assert ratio == pytest.approx(0.48667, abs=1e-5)
    assert d == pytest.approx(ratio ** -0.392 - 1, rel=1e-14)
    assert d == pytest.approx(0.3262, abs=5e-4)


def test_domain_errors():
    with pytest.raises(DomainError):
        induced_travel_m3(-0.1, -0.4, 0.1, 1.0)
    with pytest.raises(DomainError):
        Scenario(0.1, 1.2)
    with pytest.raises(DomainError):
        Scenario(-1.0, 0.1)
    with pytest.raises(DomainError):
        CostShares(0.0, 0.4)


def test_energy_ratio_examples():
    assert energy_ratio(0.2, 0.2) == 1.0 and not backfire(0.2, 0.2)
    assert energy_ratio(0.470, 0.2) == pytest.approx(1.225)
    d = 1.2 ** 0.0989 - 1
    assert d == pytest.approx(0.0182, abs=1e-4)
    assert energy_ratio(d, 0.2) == pytest.approx(0.849, abs=1e-3)


def test_intensity_convention():
    assert fuel_factor(0.2, "intensity") == pytest.approx(0.8)
    assert energy_ratio(0.25, 0.2, "intensity") == pytest.approx(1.0)
    assert backfire(0.26, 0.2, "intensity") and not backfire(0.24, 0.2, "intensity")
    y_lit = frontier(OVERALL, 0.2)
    y_int = frontier(OVERALL, 0.2, convention="intensity")
    assert y_int > y_lit
    with pytest.raises(InvalidConfig):
        fuel_factor(0.2, "gallons")


def test_frontier_values_against_closed_form():
    for eps, approx in ((OVERALL, 0.336), (G1, 0.413), (G5, 0.290)):
        y = frontier(eps, 0.2)
        assert y == pytest.approx(oracles.frontier_m3(eps["eps_f"], eps["eps_t"], 0.2), abs=1e-8)
        assert y == pytest.approx(approx, abs=1e-3)
        assert abs(induced_travel_m3(eps["eps_f"], eps["eps_t"], 0.2, y) - 0.2) < 1e-9


def test_frontier_limits_and_errors():
    assert frontier(OVERALL, 1e-6) < 1e-5
    with pytest.raises(NoFrontier):
        frontier({"eps_f": -3.0, "eps_t": -0.4}, 0.2)
    with pytest.raises(NonMonotone):
        frontier({"eps_f": -0.1, "eps_t": 0.1}, 0.2)
    with pytest.raises(DomainError):
        frontier(OVERALL, 0.0)
    with pytest.raises(InvalidConfig):
        frontier({"eps_vmt": -0.4}, 0.2, path="M4")


def test_m4_frontier():
    sh = CostShares(0.10, 0.40)
    y = frontier({"eps_vmt": -0.392}, 0.15, path="M4", shares=sh)
    assert abs(induced_travel_m4(-0.392, sh, 0.15, y) - 0.15) < 1e-9


def test_default_grid_shape():
    g = sweep_grid(OVERALL)
    assert g.delta.shape == (4, 13)
    assert g.x_values.tolist() == [0.05, 0.1, 0.15, 0.2]
    assert g.y_values[0] == 0.0 and g.y_values[-1] == 0.6
    assert len(g.frontier) == 4
    assert len(list(g.rows())) == 52


def test_grid_values_include_endpoints():
    assert grid_values(0.0, 0.6, 0.05).size == 13
    assert grid_values(0.05, 0.2, 0.05).tolist() == [0.05, 0.1, 0.15, 0.2]
    assert grid_values(0.0, 0.12, 0.05).tolist() == [0.0, 0.05, 0.1, 0.12]
    with pytest.raises(InvalidConfig):
        grid_values(0, 1, 0)


def test_zero_elasticities_grid():
    g = sweep_grid({"eps_f": 0.0, "eps_t": 0.0})
    assert np.all(g.delta == 0.0)
    assert np.allclose(g.energy_ratio, 1.0 / (1.0 + g.x_values[:, None]))
    assert all(y is None for _, y in g.frontier)


def test_grid_rows_monotone_and_frontier_separates():
    for eps in (OVERALL, *TABLE3.values()):
        g = sweep_grid(eps)
        assert np.all(np.diff(g.delta, axis=1) > 0) and np.all(np.diff(g.delta, axis=0) > 0)
        for i, (x, ystar) in enumerate(g.frontier):
            above = g.y_values > ystar + 1e-9
            below = g.y_values < ystar - 1e-9
            assert np.all(g.backfire[i, above]) and not np.any(g.backfire[i, below])


def test_group_ordering():
    d1 = sweep_grid(TABLE3[1]).delta
    d5 = sweep_grid(TABLE3[5]).delta
    ys = sweep_grid(TABLE3[1]).y_values
    assert np.all(d5[:, ys >= 0.05] > d1[:, ys >= 0.05])


def test_m4_grid_requires_shares():
    with pytest.raises(InvalidConfig):
        sweep_grid({"eps_vmt": -0.39}, path="M4")
    g = sweep_grid({"eps_vmt": -0.39}, path="M4", shares=CostShares(0.1, 0.4))
    assert all(y is not None for _, y in g.frontier)


def test_gge_examples():
    assert aggregate_gge(88.85e9, 0.0, 0.0, 2.5).change == 0.0
    ch = aggregate_gge(88.85e9, 0.172, 0.0, 2.50)
    assert ch.change == pytest.approx(15.28e9, rel=1e-3)
    assert ch.change_fraction == pytest.approx(0.172)
    assert aggregate_gge(1.0, 15.26e9, 0.0, 2.50).change_usd == pytest.approx(38.15e9)
    with pytest.raises(DomainError):
        aggregate_gge(0.0, 0.1, 0.1, 2.5)


@given(neg, neg, xs, ys)
def test_backfire_identity(ef, et, X, Y):
    d = induced_travel_m3(ef, et, X, Y)
    assert bool(backfire(d, X)) == (d > X)


@given(neg, neg, st.floats(0.05, 1.0), st.floats(0.01, 5), st.floats(0.01, 5))
def test_equal_proportion_property(a, b, s, pf, pt):
    X, Y = 1.0 / s - 1.0, 1.0 - s
    d3 = induced_travel_m3(a, b, X, Y)
    assert d3 == pytest.approx(s ** (a + b) - 1.0, rel=1e-12, abs=1e-12)
    assert d3 == pytest.approx(induced_travel_m4(a + b, CostShares(pf, pt), X, Y), rel=1e-12, abs=1e-12)


@given(neg, neg, xs, ys, st.floats(1e-3, 0.05))
def test_monotone_in_x_and_y(ef, et, X, Y, h):
    d = induced_travel_m3(ef, et, X, Y)
    assert induced_travel_m3(ef, et, X + h, Y) > d
    if Y + h < 1:
        assert induced_travel_m3(ef, et, X, Y + h) > d


@given(st.floats(-0.5, -0.01), st.floats(-1.5, -0.05), st.floats(0.02, 0.4))
def test_frontier_property(ef, et, X):
    try:
        y = frontier({"eps_f": ef, "eps_t": et}, X)
    except NoFrontier:
        assert induced_travel_m3(ef, et, X, 0.0) > X
        return
    assert abs(induced_travel_m3(ef, et, X, y) - X) < 1e-9
    ref = oracles.frontier_m3(ef, et, X)
    assert math.isclose(y, ref, abs_tol=1e-6)
