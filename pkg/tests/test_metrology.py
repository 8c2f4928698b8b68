import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from giantmag import (
    ConfigError,
    EmitterConfig,
    NumericalError,
    PhysicalScale,
    TimeGrid,
    cfi_map,
    cfi_per_time_dynamic,
    cfi_per_time_markov,
    dde_evolve,
    decay_rate,
    decay_slope,
    grid_for_run,
    make_grid,
    sensitivity,
    variance_from_population,
)
from giantmag.metrology import markov_variance, sensitivity_vs_M, write_sensitivity_csv

DIMLESS = PhysicalScale.dimensionless()


def test_variance_examples():
    assert variance_from_population(0.5, 1.0) == 0.25
    assert variance_from_population(0.5, 0.0) == math.inf
    for p in (0.0, 1.0):
        with pytest.raises(ValueError, match="boundary-population"):
            variance_from_population(p, 1.0)
    out = variance_from_population(np.array([0.5, 0.2]), np.array([0.0, 2.0]))
    assert out[0] == math.inf and out[1] == pytest.approx(0.04)


def test_variance_identity_on_exponentials():
    rng = np.random.default_rng(7)
    R = rng.uniform(1e-3, 1.0, 100)
    t = rng.uniform(0.1, 5.0, 100) / R
    s = rng.uniform(-3, 3, 100)
    P = np.exp(-R * t)
    general = variance_from_population(P, -t * s * P)
    np.testing.assert_allclose(general, markov_variance(R, t, s), rtol=1e-10)


def test_markov_cfi_examples():
    dark = EmitterConfig(M=2, Omega=math.pi)
    assert cfi_per_time_markov(dark, t=3.0, scale=DIMLESS) == 0.0
    assert cfi_per_time_markov(EmitterConfig(M=1), t=3.0, scale=DIMLESS) == 0.0
    cfg = EmitterConfig(M=8).with_phase(2.1 * math.pi)
    R, s = decay_rate(cfg), decay_slope(cfg)
    small_t = cfi_per_time_markov(cfg, t=1e-12, scale=DIMLESS)
    assert small_t == pytest.approx(s**2 / R, rel=1e-9)
    t = 3.7
    assert cfi_per_time_markov(cfg, t=t, scale=DIMLESS) == pytest.approx(t * s**2 / math.expm1(R * t), rel=1e-14)


def test_markov_cfi_variance_consistency():
    scale = PhysicalScale()
    cfg = EmitterConfig(M=12).with_phase(2.08 * math.pi)
    R, s = decay_rate(cfg), decay_slope(cfg)
    for t in (0.5, 10.0, 80.0):
        f = cfi_per_time_markov(cfg, t=t, scale=scale)
        var_H = markov_variance(R, t, s) * scale.omega_ref**2 / scale.gamma**2
        t_sec = t / scale.omega_ref
        assert f * var_H * t_sec == pytest.approx(1.0, rel=1e-12)


@given(st.floats(1e8, 1e12), st.floats(1e3, 1e10))
def test_scale_covariance(gamma, omega_ref):
    cfg = EmitterConfig(M=6).with_phase(2.15 * math.pi)
    base = PhysicalScale(omega_ref=omega_ref, gamma=gamma)
    double = PhysicalScale(omega_ref=omega_ref, gamma=2 * gamma)
    f1 = cfi_per_time_markov(cfg, t=4.0, scale=base)
    f2 = cfi_per_time_markov(cfg, t=4.0, scale=double)
    assert f2 == pytest.approx(4 * f1, rel=1e-13)
    assert sensitivity(f2) == pytest.approx(0.5 * sensitivity(f1), rel=1e-13)


def test_sensitivity_examples():
    assert sensitivity(1e16) == pytest.approx(1e-8, rel=1e-15)
    assert sensitivity(4.0) == 0.5
    for bad in (0.0, -1.0, np.nan):
        with pytest.raises(ValueError, match="nonpositive-cfi"):
            sensitivity(bad)


# -- dynamic CFI -----------------------------------------------------------------


@pytest.fixture(scope="module")
def curve2(opt2):
    tg = TimeGrid.from_samples(3.0 / decay_rate(opt2), 300)
    return cfi_per_time_dynamic(opt2, grid_for_run(opt2, tg.t_max), time_grid=tg)


@pytest.fixture(scope="module")
def curve30(opt30):
    tg = TimeGrid.from_samples(5.0 / decay_rate(opt30), 300)
    return cfi_per_time_dynamic(opt30, grid_for_run(opt30, tg.t_max), time_grid=tg)


def test_dynamic_matches_markov_small_M(curve2, opt2):
    R = decay_rate(opt2)
    rt = R * curve2.t
    band = (rt >= 0.2) & (rt <= 2.0)
    markov = cfi_per_time_markov(opt2, t=curve2.t[band], scale=curve2.scale)
    np.testing.assert_allclose(curve2.f_H[band], markov, rtol=0.05)


def test_small_M_early_deviation_is_retardation(opt2):
    # Early on, R_eff carries a ln|c(Omega)|/t term from the delayed switch-on of
    # the second leg, and its Omega-derivative lowers the slope.  The DDE and a
    # wide-window exact run agree on the deficit, which fades at late times.
    dimless = PhysicalScale.dimensionless()
    tg = TimeGrid(100.0, 0.5)
    grid = grid_for_run(opt2, tg.t_max, window=(0.3, 6 * math.pi))
    exact = cfi_per_time_dynamic(opt2, grid, time_grid=tg, scale=dimless)
    ratio = exact.f_H / cfi_per_time_markov(opt2, t=exact.t, scale=dimless) - 1
    coarse = ratio[19::20]
    assert np.all(coarse < 0)
    assert np.all(np.diff(coarse) > 0)
    assert ratio[39] < -0.05 and abs(ratio[199]) < 0.01
    h = 1e-4
    slopes = []
    for om in (opt2.Omega - h, opt2.Omega + h):
        traj = dde_evolve(opt2.with_omega(om), TimeGrid(20.0, 0.05))
        slopes.append(-math.log(traj.population[-1]) / 20.0)
    dde_slope = (slopes[1] - slopes[0]) / (2 * h)
    i = int(np.searchsorted(exact.t, 20.0))
    assert dde_slope == pytest.approx(exact.dR_dOmega[i], rel=0.01)


def test_dynamic_curve_interior_maximum(curve2, curve30):
    for c in (curve2, curve30):
        assert c.has_interior_max
        assert c.f_H[0] < c.f_max and c.f_H[-1] < c.f_max
        assert np.all(c.f_H >= 0)
        assert np.all(np.isfinite(c.S_H))


def test_dynamic_richardson_invariance(curve30, opt30):
    assert curve30.richardson_error < 0.01
    tg = TimeGrid(curve30.t[-1], curve30.t[1] - curve30.t[0])
    half = cfi_per_time_dynamic(opt30, grid_for_run(opt30, tg.t_max), time_grid=tg,
                                delta_Omega=curve30.delta_Omega / 2)
    assert half.f_max == pytest.approx(curve30.f_max, rel=0.01)


def test_dynamic_richardson_failure(opt2):
    tg = TimeGrid.from_samples(3.0 / decay_rate(opt2), 50)
    grid = grid_for_run(opt2, tg.t_max)
    with pytest.raises(NumericalError, match="finite-difference-unstable"):
        cfi_per_time_dynamic(opt2, grid, time_grid=tg, delta_Omega=0.3, richardson_tol=1e-6)


def test_dynamic_window_check(opt2):
    grid = make_grid(opt2, 40, (2.4 * math.pi, 2.6 * math.pi))
    with pytest.raises(ConfigError):
        cfi_per_time_dynamic(opt2, grid, delta_Omega=1.0)


def test_points_invariants(curve30):
    pts = curve30.points()
    assert len(pts) == curve30.t.size
    for p in pts[1::37]:
        assert p.S_H == pytest.approx(1 / math.sqrt(p.f_H), rel=1e-14)
        assert p.var_H == pytest.approx(p.var_Omega / curve30.scale.gamma**2, rel=1e-14)
        assert p.f_H * p.var_H * p.t == pytest.approx(1.0, rel=1e-12)
        assert p.engine == "exact" and p.M == 30


def test_direct_error_transfer_close(curve2):
    # substituting R_eff into the exponential form is exact algebra, so the two
    # routes differ only by finite-difference rounding
    mid = curve2.peak_index
    assert curve2.f_H_direct[mid] == pytest.approx(curve2.f_H[mid], rel=1e-6)


def test_small_engine_curve(opt2):
    tg = TimeGrid.from_samples(3.0 / decay_rate(opt2), 60)
    c = cfi_per_time_dynamic(opt2, grid_for_run(opt2, tg.t_max), time_grid=tg, engine="small")
    assert c.engine == "small" and np.all(c.f_H >= 0)
    with pytest.raises(ValueError):
        cfi_per_time_dynamic(opt2, grid_for_run(opt2, tg.t_max), time_grid=tg, engine="bogus")


# -- maps --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_map():
    return cfi_map(EmitterConfig(M=1), [4, 8, 12], TimeGrid.from_samples(500.0, 200))


def test_map_shape_and_ridge(small_map):
    assert small_map.f_H.shape == (3, 200)
    assert np.all(small_map.f_H >= 0)
    ridge = small_map.ridge()
    assert [r[0] for r in ridge] == [4, 8, 12]
    assert ridge[0][2] < ridge[1][2] < ridge[2][2]
    for _, t, f, s in ridge:
        assert s == pytest.approx(1 / math.sqrt(f))


def test_map_csv(small_map, tmp_path):
    lines = small_map.to_csv(tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "M,t,fH,SH" and len(lines) == 601
    lines = small_map.ridge_to_csv(tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "M,t_opt,fH_max,SH" and len(lines) == 4


def test_map_parallel_matches_serial(small_map):
    par = cfi_map(EmitterConfig(M=1), [4, 8, 12], TimeGrid.from_samples(500.0, 200), jobs=2)
    np.testing.assert_array_equal(par.f_H, small_map.f_H)


def test_sensitivity_vs_M_table(tmp_path):
    rows = sensitivity_vs_M(EmitterConfig(M=1), [4, 8], [0.1, 0.2], TimeGrid.from_samples(300.0, 120))
    assert [(r.M, r.G) for r in rows] == [(4, 0.1), (8, 0.1), (4, 0.2), (8, 0.2)]
    assert all(r.SH > 0 and math.isfinite(r.SH) for r in rows)
    assert rows[1].SH < rows[0].SH and rows[3].SH < rows[2].SH
    head = write_sensitivity_csv(rows, tmp_path / "s.csv").read_text().splitlines()[0]
    assert head == "M,G,t_opt,fH_max,SH"
