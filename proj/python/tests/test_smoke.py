import math

import pytest

import ommap


def test_psi_double_well_at_origin():
    assert ommap.psi("double-well", 0.0, 1.0) == pytest.approx(3.0)


def test_drift_names():
    assert {"double-well", "ou", "zero"} <= set(ommap.drift_names())


def test_phi_of_constant_zero_path():
    p = ommap.make_unconditioned("double-well", 1.0, 0.0, 0.01, 100)
    zero = ommap.GridPath(0.0, 0.01, [0.0] * 101)
    assert p.phi(zero) == pytest.approx(4.0, abs=1e-12)
    assert p.variant == "unconditioned"


def test_euler_maruyama_is_seeded():
    a = ommap.euler_maruyama("double-well", 1.0, -1.0, 0.01, 200, seed=3)
    b = ommap.euler_maruyama("double-well", 1.0, -1.0, 0.01, 200, seed=3)
    assert a.values == b.values
    assert len(a) == 201
    assert a.horizon == pytest.approx(2.0)


def test_bridge_map_converges_and_keeps_endpoints():
    p = ommap.make_bridge("double-well", 1.0, -1.0, 1.0, 0.05, 40)
    r = ommap.minimize(p, p.shift())
    assert r.converged
    assert r.minimizer[0] == -1.0
    assert r.minimizer[40] == 1.0
    assert r.value <= p.value(p.shift())


def test_multistart_on_smoothing_problem():
    p = ommap.make_smoothing("double-well", 1.0, -1.0, [1.0, 2.0], [-0.9, 0.8], 0.2, 0.05, 40)
    rep = ommap.multistart(p, n_starts=4, seed=2)
    assert rep.n_starts == 4
    assert 1 <= len(rep.minima) <= 4
    values = [m.value for m in rep.minima]
    assert values == sorted(values)


def test_gradient_vanishes_on_pinned_start():
    p = ommap.make_unconditioned("ou", 1.0, 0.5, 0.1, 10)
    g = p.gradient(p.shift())
    assert g[0] == 0.0


def test_ball_probability_matches_erf():
    prob, se = ommap.ball_prob([1.0], [0.0], 1.0, 200000, seed=1)
    assert abs(prob - math.erf(1.0 / math.sqrt(2.0))) < 5.0 * se


def test_fit_power_law():
    f = ommap.fit_power_law([1.0, 2.0, 4.0], [1.0, 0.5, 0.25])
    assert f.alpha == pytest.approx(1.0)
    assert f.c == pytest.approx(1.0)


def test_errors_are_translated():
    with pytest.raises(ommap._core.InvalidParameter):
        ommap.make_unconditioned("triple-well", 1.0, 0.0, 0.1, 10)
    with pytest.raises(ommap._core.NoFit):
        ommap.fit_power_law([1.0], [1.0])


def test_quick_gradient_check(tmp_path):
    (res,) = ommap.run_checks([1], quick=True, work_dir=str(tmp_path))
    assert res.id == 1
    assert res.passed
    assert str(res).startswith("PASS")
