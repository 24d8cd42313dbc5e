from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyonlab.errors import ConfigurationError, DomainError
from dyonlab.grid import default_grid
from dyonlab.model import (ModelParameters, StateVector, f_rhs, h_rhs_Hform, j_rhs, residual,
                           residual_arrays)
from dyonlab.verify import bps_oracle


class _Sol:
    def __init__(self, F, h, J, params):
        self.F, self.h, self.J, self.params = F, h, J, params


def test_f_rhs_vacuum_and_zero():
    assert f_rhs(1.0, 0.0, 0.0, 0.0) == 0.0
    for h in (0.0, 0.3, 1.0):
        assert f_rhs(1.0, -1.0, 0.0, h) == pytest.approx(0.0, abs=1e-15)


def test_f_rhs_roots_without_sources():
    for f in (0.0, -1.0, -2.0):
        assert f_rhs(1.3, f, 0.0, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_f_rhs_matches_closed_form():
    o = bps_oracle(0.0)
    assert f_rhs(1.0, o.F(1.0) - 1.0, 0.0, o.h(1.0)) == pytest.approx(o.F(1.0, 2), abs=1e-12)


def test_h_rhs_examples():
    assert h_rhs_Hform(1.0, 0.0, 1.0, 1.0) == 0.0
    assert h_rhs_Hform(2.0, 2.0, 0.0, 1.0) == 0.0
    o = bps_oracle(0.0)
    H = 1.0 * o.h(1.0)
    # (rho h)'' = rho h'' + 2 h'
    expected = o.h(1.0, 2) + 2.0 * o.h(1.0, 1)
    assert h_rhs_Hform(1.0, H, o.F(1.0), 0.0) == pytest.approx(expected, abs=1e-12)


def test_j_rhs_examples():
    assert j_rhs(1.0, 0.0, 1.0) == 0.0
    assert j_rhs(2.0, 5.0, 0.0) == 0.0
    o = bps_oracle(0.6)
    assert j_rhs(1.0, o.J(1.0), o.F(1.0)) == pytest.approx(o.J(1.0, 2), abs=1e-12)


@pytest.mark.parametrize("fn,args", [(f_rhs, (0.0, 0.0, 0.0, 0.0)), (h_rhs_Hform, (-1.0, 0.0, 1.0, 1.0)),
                                     (j_rhs, (1.0, math.nan, 1.0)), (f_rhs, (1.0, math.inf, 0.0, 0.0))])
def test_rhs_rejects_bad_input(fn, args):
    with pytest.raises(DomainError):
        fn(*args)


@settings(max_examples=200, deadline=None)
@given(rho=st.floats(0.01, 50), h=st.floats(-2, 2), dh=st.floats(-5, 5), F=st.floats(-2, 2),
       beta=st.floats(0, 3))
def test_hform_agrees_with_original_form(rho, h, dh, F, beta):
    # H = rho h, H' = h + rho h', H'' = 2 h' + rho h''
    hpp = (2 * F * F * h + 0.5 * beta**2 * h * (h * h - 1) * rho**2 - 2 * dh * rho) / rho**2
    Hpp = 2 * dh + rho * hpp
    got = h_rhs_Hform(rho, rho * h, F, beta)
    assert got == pytest.approx(Hpp, rel=1e-12, abs=1e-12 * (1 + abs(Hpp) + abs(dh)))


@settings(max_examples=100, deadline=None)
@given(C=st.floats(0, 1, exclude_max=True))
def test_nu_identity(C):
    p = ModelParameters(1.0, C)
    assert p.nu**2 + C**2 == pytest.approx(1.0, abs=1e-15)


def test_parameter_validation():
    with pytest.raises(ConfigurationError, match=r"C must satisfy 0 <= C < 1"):
        ModelParameters(1.0, 1.2)
    with pytest.raises(ConfigurationError):
        ModelParameters(-0.1)
    with pytest.raises(ConfigurationError):
        ModelParameters(1.0, 0.0, g=0.0)
    with pytest.raises(ConfigurationError):
        ModelParameters(1.0, 0.3, mode="monopole")
    with pytest.raises(ConfigurationError):
        ModelParameters(1.0, mode="other")
    assert ModelParameters(1.0, mode="monopole").monopole


def test_state_vector_requires_positive_rho():
    StateVector(1e-9, 0.0, 0.0)
    with pytest.raises(DomainError):
        StateVector(0.0, 0.0, 0.0)


@pytest.mark.parametrize("C", [0.0, 0.3, 0.6, 0.9])
def test_closed_form_family_has_small_residuals(C):
    o = bps_oracle(C)
    g = default_grid(1e-4, 25.0 / o.nu)
    F, h, J = o.profiles(g)
    res = residual(_Sol(F, h, J, ModelParameters(0.0, C)))
    assert max(res) < 1e-6


def test_residual_is_fourth_order():
    o = bps_oracle(0.0)
    errs = []
    for sp in (0.1, 0.05):
        g = default_grid(1e-4, 25.0, spacing=sp)
        F, h, J = o.profiles(g)
        errs.append(max(residual(_Sol(F, h, J, ModelParameters(0.0)))))
    assert errs[0] / errs[1] > 8.0


def test_constant_triple_has_zero_f_residual():
    g = default_grid(1e-3, 10.0)
    x = g.nodes
    one, zero = np.ones_like(x), np.zeros_like(x)
    rF, _, _ = residual_arrays(x, one, zero, zero, zero, zero, zero, 1.0)
    assert np.all(rF == 0.0)


def test_residual_is_local():
    o = bps_oracle(0.0)
    g = default_grid(1e-4, 25.0)
    x = g.nodes
    F, dF = o.F(x), o.F(x, 1)
    h, dh = o.h(x), o.h(x, 1)
    z = np.zeros_like(x)
    base = residual_arrays(x, F, dF, h, dh, z, z, 0.0)[0]
    i = 400
    F2 = F.copy()
    F2[i] += 1e-3
    pert = residual_arrays(x, F2, dF, h, dh, z, z, 0.0)[0]
    changed = np.flatnonzero(np.abs(pert - base) > 1e-12) + 1  # residual index k is node k+1
    assert set(changed) <= {i - 1, i, i + 1}
    assert abs(pert[i - 1]) > abs(base[i - 1])


def test_residual_needs_three_nodes():
    x = np.array([0.5, 1.0])
    with pytest.raises(ConfigurationError):
        residual_arrays(x, x, x, x, x, x, x, 1.0)


def test_monopole_residual_reports_zero_for_j():
    o = bps_oracle(0.0)
    g = default_grid(1e-4, 25.0)
    F, h, J = o.profiles(g)
    assert residual(_Sol(F, h, J, ModelParameters(0.0, mode="monopole")))[2] == 0.0
