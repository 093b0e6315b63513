import numpy as np
import pytest

from kdvfd.grid import GridFunction, GridMismatchError, PeriodicGrid, d3_array
from kdvfd.theta import ThetaOperator, forward, inverse, theta_symbol, verify_norm_bounds


def make(theta, r, J=64, L=1.0):
    g = PeriodicGrid(L, J)
    return ThetaOperator(theta, r * g.dx**3, g)


def rand(op, seed=0):
    return GridFunction(op.grid, np.random.default_rng(seed).uniform(-1, 1, op.grid.J))


def test_invalid_parameters():
    g = PeriodicGrid(1.0, 8)
    with pytest.raises(ValueError):
        ThetaOperator(1.5, 0.1, g)
    with pytest.raises(ValueError):
        ThetaOperator(0.5, 0.0, g)


def test_r_is_derived():
    op = make(1.0, 10.0, J=32)
    assert op.r == pytest.approx(10.0, rel=1e-14)


def test_theta_zero_is_identity():
    op = make(0.0, 5.0)
    a = rand(op)
    np.testing.assert_array_equal(op.apply(a).values, a.values)
    np.testing.assert_array_equal(op.solve(a).values, a.values)


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.0])
def test_constants_fixed(theta):
    op = make(theta, 3.0)
    a = GridFunction(op.grid, np.full(op.grid.J, 2.5))
    np.testing.assert_allclose(op.apply(a).values, 2.5, rtol=0, atol=0)


@pytest.mark.parametrize("J", [8, 9, 64])
def test_symbol_on_fourier_modes(J):
    """A e_k = symbol_k e_k for e_k(j) = exp(-2 i pi jk/J): pins the frequency convention."""
    op = make(0.7, 2.3, J=J)
    sym = op.symbol().values
    j = np.arange(J)
    for k in range(J):
        e = np.exp(-2j * np.pi * j * k / J)
        Ae = e + op.theta * op.dt * d3_array(e, op.grid.dx)
        np.testing.assert_allclose(Ae, sym[k] * e, rtol=1e-12, atol=1e-12 * abs(sym[k]))


@pytest.mark.parametrize("seed", range(3))
def test_apply_matches_spectral_oracle(seed):
    op = make(1.0, 10.0, J=128)
    a = rand(op, seed)
    spectral = np.real(inverse(op.symbol().values * forward(a.values)))
    direct = op.apply(a).values
    assert np.max(np.abs(direct - spectral)) <= 1e-12 * np.max(np.abs(direct))


def test_symbol_special_values():
    op = make(0.4, 3.0, J=16)
    sym = op.symbol().values
    assert sym[0] == 1.0
    assert sym[8] == pytest.approx(1 + 8 * 0.4 * 3.0, rel=1e-14)
    assert abs(sym[8].imag) < 1e-12
    assert np.all(np.abs(sym) >= 1.0)


@pytest.mark.parametrize("theta,r", [(1.0, 0.01), (0.5, 1.0), (0.25, 100.0)])
def test_symbol_modulus_formula(theta, r):
    xi = np.linspace(0, 1, 101)
    s = np.sin(np.pi * xi)
    expected = 1 + 16 * theta * r * s**4 * (1 + 4 * theta * r * s**2)
    np.testing.assert_allclose(np.abs(theta_symbol(theta, r, xi)) ** 2, expected, rtol=1e-13)


def test_odd_J_symbol():
    op = make(1.0, 1.0, J=7)
    assert op.symbol().values.shape == (7,)
    np.testing.assert_allclose(op.symbol().xi, np.arange(7) / 7)


@pytest.mark.parametrize("theta", [0.5, 1.0])
@pytest.mark.parametrize("r", [0.01, 1.0, 100.0])
@pytest.mark.parametrize("method", ["spectral", "banded"])
def test_solve_round_trip(theta, r, method):
    op = make(theta, r, J=96)
    a = rand(op, 4)
    rhs = op.apply(a)
    x = op.solve(rhs, method)
    assert np.linalg.norm(x.values - a.values) <= 1e-12 * np.linalg.norm(a.values) * max(1, r)
    res = np.linalg.norm(op.apply(x).values - rhs.values)
    assert res <= 1e-12 * np.linalg.norm(rhs.values)


@pytest.mark.parametrize("J", [4, 5, 512])
def test_spectral_and_banded_agree(J):
    op = make(1.0, 7.0, J=J)
    rhs = rand(op, 5)
    a = op.solve(rhs, "spectral").values
    b = op.solve(rhs, "banded").values
    assert np.linalg.norm(a - b) <= 1e-11 * np.linalg.norm(a)


def test_banded_against_dense_matrix():
    op = make(0.8, 2.0, J=10)
    A = np.column_stack([op.apply_array(col) for col in np.eye(10)])
    rhs = np.random.default_rng(0).uniform(-1, 1, 10)
    np.testing.assert_allclose(op.solve_array(rhs, "banded"), np.linalg.solve(A, rhs), rtol=1e-12)


def test_inverse_is_contraction():
    op = make(1.0, 3.0, J=64)
    for seed in range(20):
        rhs = rand(op, seed).values
        assert np.linalg.norm(op.solve_array(rhs)) <= np.linalg.norm(rhs) * (1 + 1e-14)


@pytest.mark.parametrize("theta", [0.0, 0.25, 0.49])
def test_explicit_part_dominated_under_cfl(theta):
    J = 64
    g = PeriodicGrid(1.0, J)
    dt = g.dx**3 / (4 * (1 - 2 * theta))
    op = ThetaOperator(theta, dt, g)
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = rng.uniform(-1, 1, J)
        explicit = a - (1 - theta) * dt * d3_array(a, g.dx)
        assert np.linalg.norm(explicit) <= np.linalg.norm(op.apply_array(a)) * (1 + 1e-12)


def test_linearity():
    op = make(1.0, 5.0)
    a, b = rand(op, 1), rand(op, 2)
    lhs = op.solve(2 * a - 3 * b).values
    rhs = 2 * op.solve(a).values - 3 * op.solve(b).values
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-13)


def test_grid_mismatch():
    op = make(1.0, 1.0, J=16)
    with pytest.raises(GridMismatchError):
        op.apply(PeriodicGrid(2.0, 16).zeros())


def test_norm_bounds_zero_and_theta_zero():
    rep = verify_norm_bounds(make(1.0, 1.0), 3, 0, zero=True)
    assert rep.decomposition_residual == 0.0
    rep = verify_norm_bounds(make(0.0, 1.0), 10, 0)
    assert rep.decomposition_residual == 0.0 and rep.passed()


def test_norm_bounds_decomposition():
    g = PeriodicGrid(1.0, 256)
    rep = ThetaOperator(1.0, 10 * g.dx**3, g).verify_norm_bounds(100, 3)
    assert rep.passed()
    assert rep.decomposition_residual <= 1e-12
