from __future__ import annotations

import numpy as np
import pytest

from dyonlab.errors import ConfigurationError, DomainError
from dyonlab.grid import default_grid
from dyonlab.shoot import (_accumulate, _bisect, _bracket, classify_f, classify_h, solve_f, solve_h, solve_j,
                           zero_profile)


@pytest.fixture(scope="module")
def tanh_h(grid25):
    x = grid25.nodes
    return zero_profile(grid25, "h").replace(values=np.tanh(x), derivs=1 - np.tanh(x) ** 2)


def test_classify_f_populates_both_sets(grid25, tanh_h):
    z = zero_profile(grid25)
    assert classify_f(-1e-6, z, tanh_h).tag == "A1"
    assert classify_f(-100.0, z, tanh_h).tag == "A2"


def test_classify_f_accepts_closed_form(oracle0):
    # the separatrix is unstable (growth ~ e^{2 rho}), so rounding at the
    # 1e-16 level pulls even the exact a off it beyond rho ~ 14
    g = default_grid(1e-4, 10.0)
    F, h, J = oracle0.profiles(g)
    assert classify_f(-1 / 6, J, h).tag == "accept"


def test_classify_rejects_bad_parameters(bps_profiles):
    F, h, J = bps_profiles
    with pytest.raises(DomainError):
        classify_f(0.1, J, h)
    with pytest.raises(DomainError):
        classify_h(-1.0, F, 1.0)
    with pytest.raises(DomainError):
        classify_h(1.0, F, 0.0)


def test_solve_f_closed_form(bps_profiles, oracle0):
    F0, h, J = bps_profiles
    F, a, info = solve_f(J, h)
    x = F.grid.nodes
    assert a == pytest.approx(-1 / 6, abs=1e-5)
    assert np.max(np.abs(F.values - oracle0.F(x))) <= 1e-6
    assert np.all(np.diff(F.values) <= 0) and F.values.min() >= 0 and F.values.max() <= 1
    assert F.values[-1] <= 1e-6
    # (F - 1)/rho^2 increasing on (0, 1]
    m = x <= 1.0
    r = (F.values[m] - 1) / x[m] ** 2
    assert np.all(np.diff(r) >= -1e-8 * np.abs(r[1:]) - 4e-16 / x[m][1:] ** 2)


def test_solve_f_dyon_family(oracle06):
    g = default_grid(1e-4, 25 / 0.8)
    _, h, J = oracle06.profiles(g)
    _, a, _ = solve_f(J, h)
    assert a == pytest.approx(-0.8**2 / 6, abs=1e-5)


def test_solve_h_linear_path(bps_profiles, oracle0):
    F, _, _ = bps_profiles
    h1, b1, _ = solve_h(F, 0.0)
    h2, b2, _ = solve_h(F, 0.0, trial_b=2.0)
    x = F.grid.nodes
    assert b1 == pytest.approx(1 / 3, abs=1e-6)
    # the rescaling imposes (rho h)' = 1 at rho_max; 1 - h ~ 1/rho is not yet 0 at 25
    m = x <= 15.0
    assert np.max(np.abs(h1.values[m] - oracle0.h(x[m]))) <= 1e-3
    assert np.max(np.abs(h1.values - h2.values)) <= 1e-12


def test_solve_h_linear_path_far_boundary(oracle0):
    g = default_grid(1e-4, 2000.0)
    F, _, _ = oracle0.profiles(g)
    h, b, _ = solve_h(F, 0.0)
    x = g.nodes
    assert b == pytest.approx(1 / 3, abs=1e-6)
    assert np.max(np.abs(h.values - oracle0.h(x))) <= 1e-6


def test_classify_h_populates_both_sets(monopole_beta1):
    F = monopole_beta1.F
    assert classify_h(1e-8, F, 1.0).tag == "B1"
    assert classify_h(1e3, F, 1.0).tag == "B2"


def test_solve_h_shooting(monopole_beta1):
    F = monopole_beta1.F
    h, b, info = solve_h(F, 1.0, guess=None)
    assert h.values[-1] >= 1 - 1e-4
    assert np.all(np.diff(h.values) >= -1e-12)
    assert b == pytest.approx(monopole_beta1.b_star, rel=1e-6)
    x = F.grid.nodes
    m = x <= 1.0
    r = h.values[m] / x[m]
    assert np.all(np.diff(r) <= 1e-8 * np.abs(r[1:]) + 4e-16 / x[m][1:])


def test_bracket_invariant(monopole_beta1):
    F = monopole_beta1.F
    seen = []

    def classify(b):
        out = classify_h(b, F, 1.0)
        seen.append(out)
        return out

    lo, hi = _bracket(classify, 1.0, "B1", "B2", None, "h")
    lo, hi, _ = _bisect(classify, lo, hi, "B1", "B2", 1e-6, "h")
    assert lo.parameter < hi.parameter
    assert lo.tag in ("B1", "accept") and hi.tag in ("B2", "accept")
    assert (hi.parameter - lo.parameter) <= 1e-6 * hi.parameter


def test_solve_j(oracle06):
    g = default_grid(1e-4, 25 / 0.8)
    F, _, _ = oracle06.profiles(g)
    J, c, _ = solve_j(F, 0.6)
    J2, c2, _ = solve_j(F, 0.6, trial_c=2.0)
    x = g.nodes
    assert c == pytest.approx(0.16, abs=1e-5)
    assert np.max(np.abs(J.values - oracle06.J(x))) <= 1e-6
    assert J.derivs[-1] == pytest.approx(0.6, abs=1e-10)
    assert np.all(J.derivs <= 0.6 + 1e-9)
    assert np.all(J.derivs[x <= 15.0] < 0.6)  # beyond, C - J' is below the rounding of C
    assert np.all(np.diff(J.derivs) >= -1e-12)
    assert np.max(np.abs(J.values - J2.values)) <= 1e-12


def test_solve_j_zero_and_range(bps_profiles):
    F, _, _ = bps_profiles
    J, c, _ = solve_j(F, 0.0)
    assert c == 0.0 and not J.values.any()
    with pytest.raises(ConfigurationError):
        solve_j(F, 1.0)


def test_accumulate_is_fourth_order():
    errs = []
    for dx in (0.1, 0.05):
        x = np.arange(0.0, 10.0 + dx / 2, dx)
        d = _accumulate(-1.0, -np.exp(-10.0), np.exp(-x), dx)
        errs.append(np.max(np.abs(d + np.exp(-x))))
    assert errs[0] / errs[1] > 12.0
