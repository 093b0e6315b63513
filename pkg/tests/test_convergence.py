import math

import numpy as np
import pytest

from kdvfd.convergence import (ExactError, aggregate_rate, exact_error, observed_rate,
                               rate_table, self_error, theory_rates, transfer)
from kdvfd.grid import GridFunction, PeriodicGrid, norm_l2_delta
from kdvfd.initial_data import cell_average, constant, sinusoidal
from kdvfd.scheme import SchemeConfig


@pytest.mark.parametrize("s,proved,conjectured", [
    (3.0, 0.5, 0.5),
    (1.0, 0.1, 1 / 6),
    (6.0, 1.0, 1.0),
    (0.75, 0.75 / 10.5, 0.125),
    (4.5, 0.75, 0.75),
    (8.0, 1.0, 1.0),
])
def test_theory_rates(s, proved, conjectured):
    th = theory_rates(s)
    assert th.q_proved == pytest.approx(proved, rel=1e-14)
    assert th.q_conjectured == pytest.approx(conjectured, rel=1e-14)


def test_theory_rates_unavailable_below_three_quarters():
    th = theory_rates(0.5)
    assert th.q_proved is None and th.q_conjectured == pytest.approx(1 / 12)
    with pytest.raises(ValueError):
        theory_rates(0.0)


def test_rate_from_published_errors():
    assert observed_rate(6.2062e-5, 3.1033e-5) == pytest.approx(0.9999, abs=5e-5)


def test_rate_table_basic():
    rows = rate_table([(1600, 4.0), (3200, 2.0), (6400, 2.0)])
    assert rows[0].rate is None
    assert rows[1].rate == 1.0
    assert rows[2].rate == 0.0
    assert [r.J for r in rows] == [1600, 3200, 6400]


def test_rate_table_scale_invariant():
    errs = [(100, 0.3), (200, 0.17), (400, 0.05)]
    a = [r.rate for r in rate_table(errs)]
    b = [r.rate for r in rate_table([(J, 7.3 * e) for J, e in errs])]
    np.testing.assert_allclose(a[1:], b[1:], rtol=1e-13)


def test_rate_table_flags():
    rows = rate_table([(8, 1.0), (16, 0.0), (32, 1e-20, 1.0), (64, 1e-3, 1.0)])
    assert rows[1].flag == "nonpositive error" and rows[1].rate is None
    assert rows[2].flag == "noise floor" and rows[2].rate is None
    assert rows[3].rate is None


def test_rate_table_requires_doubling():
    with pytest.raises(ValueError):
        rate_table([(100, 1.0), (300, 0.5)])


def test_single_row():
    rows = rate_table([(1600, 0.1)])
    assert len(rows) == 1 and rows[0].rate is None
    assert aggregate_rate(rows) is None


def test_aggregate_is_mean_of_finest_two():
    rows = rate_table([(4, 1.0), (8, 0.5), (16, 0.2), (32, 0.1)])
    rates = [r.rate for r in rows if r.rate is not None]
    assert aggregate_rate(rows) == pytest.approx((rates[-1] + rates[-2]) / 2)


def travelling(t, x):
    return np.sin(2 * np.pi * (x - t))


def test_exact_error_self_comparison_is_zero():
    g = PeriodicGrid(1.0, 32)
    obs = ExactError(travelling, g)
    for n, t in enumerate([0.0, 0.01, 0.02]):
        obs(n, t, obs.reference(t))
    assert obs.finish() == 0.0


def test_exact_error_zero_reference():
    g = PeriodicGrid(1.0, 16)
    obs = ExactError(lambda t, x: np.zeros(np.shape(x)), g)
    vs = [GridFunction(g, np.full(16, k)) for k in (1.0, 3.0, 2.0)]
    for n, v in enumerate(vs):
        obs(n, 0.01 * n, v)
    assert obs.finish() == pytest.approx(3.0)


def test_exact_error_constant_run():
    g = PeriodicGrid(1.0, 16)
    v0 = cell_average(constant(1.5), g)
    err = exact_error(v0, SchemeConfig(t_final=0.05), lambda t, x: np.full(np.shape(x), 1.5))
    assert err <= 1e-14


def test_point_and_space_time_references_differ_by_order_dt():
    g = PeriodicGrid(1.0, 64)
    gaps = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        point = ExactError(travelling, g, "point")
        avg = ExactError(travelling, g, "cell_time")
        gaps.append(norm_l2_delta(point.reference(0.1) - avg.reference(0.1, 0.1 + dt)))
    assert gaps[0] / gaps[1] == pytest.approx(2.0, rel=0.02)
    assert gaps[1] / gaps[2] == pytest.approx(2.0, rel=0.02)


def test_cell_time_mode_lags_one_step():
    g = PeriodicGrid(1.0, 16)
    obs = ExactError(travelling, g, "cell_time")
    times = [0.0, 0.1, 0.2, 0.3]
    for n, t in enumerate(times):
        last = n == 0 or n + 1 == len(times)
        obs(n, t, obs.reference(t) if last else obs.reference(t, times[n + 1]))
    assert obs.finish() <= 1e-14
    assert [h[0] for h in obs.history] == [0, 1, 2, 3]


def test_transfer():
    fine = np.arange(8.0)
    np.testing.assert_array_equal(transfer(fine, "restrict"), [0.5, 2.5, 4.5, 6.5])
    np.testing.assert_array_equal(transfer(fine, "sample"), [0, 2, 4, 6])
    with pytest.raises(ValueError):
        transfer(fine, "other")


def test_projection_discrepancy_of_grid_transfer():
    f = sinusoidal(50.0)
    sample_gap, restrict_gap = [], []
    for J in (200, 400, 800):
        coarse = cell_average(f, PeriodicGrid(50.0, J)).values
        fine = cell_average(f, PeriodicGrid(50.0, 2 * J)).values
        dx = 50.0 / J
        sample_gap.append(math.sqrt(dx) * np.linalg.norm(coarse - transfer(fine, "sample")))
        restrict_gap.append(math.sqrt(dx) * np.linalg.norm(coarse - transfer(fine, "restrict")))
    assert max(restrict_gap) <= 1e-13
    assert sample_gap[0] / sample_gap[1] == pytest.approx(2.0, rel=0.01)
    assert sample_gap[1] / sample_gap[2] == pytest.approx(2.0, rel=0.01)


@pytest.mark.parametrize("alignment", ["synchronized", "shared"])
@pytest.mark.parametrize("how", ["restrict", "sample"])
def test_self_error_trivial_data(alignment, how):
    cfg = SchemeConfig(t_final=0.1)
    g = PeriodicGrid(1.0, 16)
    assert self_error(cfg, constant(0.0), g, alignment, how).error == 0.0
    assert self_error(cfg, constant(2.0), g, alignment, how).error <= 1e-14


@pytest.mark.parametrize("alignment", ["synchronized", "shared"])
def test_self_error_sinusoid_halves(alignment):
    cfg = SchemeConfig(t_final=0.1)
    errs = [self_error(cfg, sinusoidal(50.0), PeriodicGrid(50.0, J), alignment).error
            for J in (400, 800, 1600)]
    for a, b in zip(errs, errs[1:]):
        assert 1.7 < a / b < 2.3


def test_self_error_time_levels_coincide():
    cfg = SchemeConfig(t_final=0.1)
    res = self_error(cfg, sinusoidal(50.0), PeriodicGrid(50.0, 400))
    assert res.history[-1][1] == 0.1
    assert res.fine_steps >= res.steps
