import math

import numpy as np
import pytest

import sspde


def test_kappa_bar_and_exponents():
    k = sspde.kappa_bar()
    assert 0.132 < k < 1 / 3
    ex = sspde.exponents(0.1, 0.01)
    assert ex["beta2"] == pytest.approx(2.2 / 2.8, rel=1e-14)
    assert ex["beta1"] == pytest.approx(0.920159, rel=1e-6)
    assert ex["valid"]
    assert not sspde.exponents(0.2, 1e-6)["valid"]


def test_recursions():
    r = sspde.growth_envelope(1.0, [1.0] * 9, 0.5)
    assert r["envelope"][-1] == pytest.approx(30.25)
    assert r["dominated"]
    a = math.exp(-1.0)
    m = sspde.massive_recursion(1.0, a, [1.0] * 199, 0.5)
    assert m["iteration"][-1] == pytest.approx((1 / (1 - a)) ** 2, abs=1e-6)
    assert sspde.moment_fixed_point(1.0, a, 1.0, 0.5) == pytest.approx(2.5027, abs=1e-4)


def test_renorm_constants():
    assert sspde.gpam_renorm_constant(1.0) == pytest.approx(4 / (2 * math.pi) ** 2, rel=1e-14)
    assert sspde.gpam_renorm_constant(0.5) == pytest.approx(7 / (4 * math.pi**2), rel=1e-14)
    assert sspde.gpam_renorm_constant(2.0) == 0.0
    assert sspde.wiener_renorm_constant(0.5, 2.0) == 0.0
    with pytest.raises(ValueError):
        sspde.gpam_renorm_constant(0.0)


def test_noise_is_deterministic_and_real():
    a = sspde.sample_gpam_noise(32, 0.125, 7)
    b = sspde.sample_gpam_noise(32, 0.125, 7)
    assert a.shape == (32, 32)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sspde.sample_gpam_noise(32, 0.125, 8))
    assert np.all(np.isfinite(a))


def test_solve_scalar_ode():
    n = 16
    noise = np.full((n, n), 0.8)
    u0 = np.full((n, n), 0.5)
    out = sspde.solve(noise, "linear", 0.3, u0, dt=1e-3, t_end=1.0)
    assert not out["blew_up"]
    assert np.allclose(out["final_state"], 0.5 * math.exp(0.5), rtol=1e-6)
    assert len(out["times"]) == len(out["sup"]) == 1001


def test_solve_heat_eigenfunction():
    n = 32
    x = 2 * np.pi * np.arange(n) / n
    u0 = np.cos(x)[:, None] * np.ones(n)[None, :]
    out = sspde.solve(np.zeros((n, n)), "zero", 0.0, u0, dt=1e-3, t_end=0.5, store_every=100)
    assert np.allclose(out["final_state"], np.exp(-0.5) * u0, atol=1e-6)
    assert len(out["stored"]) == 6


def test_bad_input_raises():
    with pytest.raises(ValueError):
        sspde.solve(np.zeros((16, 16)), "tanh", 0.0, np.zeros((16, 16)), dt=1e-3, t_end=1.0)
    with pytest.raises(ValueError):
        sspde.solve(np.zeros((16, 8)), "sin", 0.0, np.zeros((16, 16)), dt=1e-3, t_end=1.0)


def test_order_bounds():
    rep = sspde.gpam_order_bounds(32, 3 / 32, 5, n_slices=40)
    assert rep["C1"] > 0 and math.isfinite(rep["C1"])
    assert rep["C2"] > 0 and math.isfinite(rep["C2"])


def test_zero_noise_study():
    assert "flow" in sspde.study_names()
    out = sspde.run_study(
        "renorm_sensitivity",
        {"noise.family": "zero", "u0": "zero", "seeds": "1-2", "solver.n_spatial": 16, "solver.dt": 0.005},
    )
    assert out["pass"]
    assert out["summary"]["pass"]
    assert out["tables"]
    with pytest.raises(ValueError):
        sspde.run_study("flow", {"no.such.key": 1})
