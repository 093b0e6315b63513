import numpy as np
import pytest

from kdvfd.grid import (GridFunction, GridMismatchError, PeriodicGrid, TimeStamps, d3,
                        d3_composed, d_center, d_minus, d_plus, inner, l2_delta, norm_l2_delta,
                        norm_l4_delta, norm_linf, shift)


def gf(values, L=None):
    values = np.asarray(values, dtype=float)
    return GridFunction(PeriodicGrid(L if L is not None else len(values), len(values)), values)


def random_gf(rng, J=64, L=3.7):
    return GridFunction(PeriodicGrid(L, J), rng.uniform(-1, 1, J))


def test_grid_fields():
    g = PeriodicGrid(50.0, 1600)
    assert g.dx == 50.0 / 1600
    assert abs(g.dx * g.J - g.L) <= np.spacing(g.L)
    assert g.nodes[1] == g.dx


@pytest.mark.parametrize("J", [0, 3, 2.5])
def test_grid_rejects_small_J(J):
    with pytest.raises(ValueError):
        PeriodicGrid(1.0, J)


def test_grid_rejects_bad_L():
    with pytest.raises(ValueError):
        PeriodicGrid(0.0, 8)


def test_gridfunction_shape_and_readonly():
    with pytest.raises(ValueError):
        GridFunction(PeriodicGrid(1.0, 4), [1, 2, 3])
    a = gf([1, 2, 3, 4])
    with pytest.raises(ValueError):
        a.values[0] = 5
    assert a[5] == 2 and a[-1] == 4


def test_gridfunction_arithmetic_and_mismatch():
    a = gf([1, 2, 3, 4])
    b = a * 2 - 1
    assert isinstance(b, GridFunction)
    np.testing.assert_array_equal(b.values, [1, 3, 5, 7])
    c = gf([1, 2, 3, 4], L=8.0)
    with pytest.raises(GridMismatchError):
        a + c
    with pytest.raises(GridMismatchError):
        inner(a, c)


@pytest.mark.parametrize("ell,expected", [(0, [1, 2, 3, 4]), (1, [2, 3, 4, 1]), (-1, [4, 1, 2, 3]),
                                          (5, [2, 3, 4, 1])])
def test_shift(ell, expected):
    np.testing.assert_array_equal(shift(gf([1, 2, 3, 4]), ell).values, expected)


def test_shift_composition():
    a = random_gf(np.random.default_rng(1), 16)
    np.testing.assert_array_equal(shift(shift(a, 3), -7).values, shift(a, -4).values)


def test_d_plus_hand_value():
    a = GridFunction(PeriodicGrid(2.0, 4), [0, 1, 0, 0])
    np.testing.assert_allclose(d_plus(a).values, [2, -2, 0, 0], rtol=0, atol=0)
    np.testing.assert_allclose(d_minus(a).values, [0, 2, -2, 0], rtol=0, atol=0)


def test_d3_one_hot_hand_value():
    g = PeriodicGrid(8.0, 8)
    one_hot = GridFunction(g, np.eye(8)[0])
    # result_j = a[j+2] - 3a[j+1] + 3a[j] - a[j-1] with a the unit vector at 0
    np.testing.assert_array_equal(d3(one_hot).values, [3, -1, 0, 0, 0, 0, 1, -3])
    # the stencil weights seen by entry 0 (row 0 of the operator matrix)
    row0 = [d3(GridFunction(g, e)).values[0] for e in np.eye(8)]
    np.testing.assert_array_equal(row0, [3, -3, 1, 0, 0, 0, 0, -1])


@pytest.mark.parametrize("op", [d_plus, d_minus, d_center, d3, d3_composed])
def test_constants_annihilated(op):
    a = GridFunction(PeriodicGrid(2.0, 16), np.full(16, 3.25))
    assert np.all(op(a).values == 0)


def test_d_center_definition():
    a = random_gf(np.random.default_rng(2))
    dx = a.grid.dx
    np.testing.assert_allclose(d_center(a).values, ((shift(a, 1) - shift(a, -1)) / (2 * dx)).values,
                               rtol=1e-14, atol=1e-14 / dx)


@pytest.mark.parametrize("J", [4, 7, 64, 257])
def test_d3_fused_equals_composed(J):
    a = random_gf(np.random.default_rng(J), J)
    fused, composed = d3(a).values, d3_composed(a).values
    assert np.max(np.abs(fused - composed)) <= 1e-13 * np.max(np.abs(fused))


def test_norm_hand_value():
    # two cells are below the grid minimum, so use the bare-array norm
    assert l2_delta([3, 4], 0.5) == pytest.approx(3.5355339059327378, rel=1e-15)
    a = GridFunction(PeriodicGrid(2.0, 4), [3, 4, 0, 0])
    assert norm_l2_delta(a) == pytest.approx(3.5355339059327378, rel=1e-15)
    assert norm_linf(a) == 4


def test_zero_norms():
    z = PeriodicGrid(1.0, 8).zeros()
    assert norm_l2_delta(z) == norm_linf(z) == norm_l4_delta(z) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_summation_by_parts_and_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    a, b = random_gf(rng), random_gf(rng)
    lhs, rhs = inner(d_plus(a), b), -inner(a, d_minus(b))
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1.0)
    lhs, rhs = inner(d_center(a), b), -inner(a, d_center(b))
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_norm_identities(seed):
    a = random_gf(np.random.default_rng(seed))
    dx = a.grid.dx
    assert norm_l2_delta(d_plus(a)) == pytest.approx(norm_l2_delta(d_minus(a)), rel=1e-14)
    lhs = norm_l2_delta(d_plus(d_minus(a))) ** 2
    rhs = 4 / dx**2 * (norm_l2_delta(d_plus(a)) ** 2 - norm_l2_delta(d_center(a)) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_telescoping_sum():
    a = random_gf(np.random.default_rng(9), 1000)
    s = np.sum(d_plus(a).values)
    assert abs(s) <= 1e-12 * np.sum(np.abs(d_plus(a).values))


def test_timestamps():
    ts = TimeStamps()
    for dt in (0.1, 0.2, 0.05):
        ts.append(dt)
    assert len(ts) == 3 and ts.t_final == pytest.approx(0.35, rel=1e-15)
    with pytest.raises(ValueError):
        ts.append(0.0)
