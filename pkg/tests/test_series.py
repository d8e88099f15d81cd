"""Truncated power-series arithmetic."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fctlq.series import MAX_ORDER, Jet


def jet_from(coefs):
    return Jet(np.asarray(coefs, dtype=complex))


small_coefs = st.lists(
    st.floats(min_value=-3.0, max_value=3.0, allow_nan=False),
    min_size=2, max_size=6,
)


def test_variable_and_constant():
    x = Jet.variable(2.0, 3)
    assert x.value == 2.0
    assert x.coef[1] == 1.0
    c = Jet.constant(5.0, 3)
    assert np.allclose(c.coef, [5.0, 0, 0, 0])
    assert ((x + c) * x).value == 14.0


def test_polynomial_identity():
    # (1 + x)^3 expanded two ways
    x = Jet.variable(0.0, 5)
    one = Jet.constant(1.0, 5)
    lhs = (one + x).pow_int(3)
    rhs = one + 3 * x + 3 * x * x + x * x * x
    assert np.allclose(lhs.coef, rhs.coef, atol=1e-14)


def test_exp_derivatives():
    x = Jet.variable(0.7, 6)
    e = x.exp()
    want = math.exp(0.7)
    assert np.allclose(e.derivatives(), want, atol=1e-12)


def test_log_inverts_exp():
    x = Jet.variable(0.3, 6)
    f = (x * x + Jet.constant(1.5, 6)).exp()
    back = f.log()
    assert abs(back.coef[0] - (0.3**2 + 1.5)) < 1e-12
    assert abs(back.coef[1] - 0.6) < 1e-12
    assert abs(back.coef[2] - 1.0) < 1e-12


def test_division_by_series():
    x = Jet.variable(0.0, 8)
    one = Jet.constant(1.0, 8)
    inv = one / (one - x)
    assert np.allclose(inv.coef, np.ones(9), atol=1e-14)


def test_shift_down_removes_common_zero():
    # f = x + x^2 about 0; f/x = 1 + x
    f = jet_from([0.0, 1.0, 1.0, 0.0])
    g = f.shift_down(1)
    assert np.allclose(g.coef[:2], [1.0, 1.0], atol=1e-15)


def test_compose_chain_rule():
    outer = Jet.variable(0.25, 4).exp()    # exp about the inner value
    x = Jet.variable(0.5, 4)
    inner = x * x                          # x^2, value 0.25
    delta = inner - Jet.constant(inner.coef[0], inner.order)
    composed = outer.compose(delta)
    # d/dx exp(x^2) = 2x exp(x^2)
    want1 = 2 * 0.5 * math.exp(0.25)
    assert abs(composed.derivatives()[1] - want1) < 1e-12


def test_truncate():
    f = Jet.variable(1.0, 6).exp()
    t = f.truncate(2)
    assert t.order == 2
    assert np.allclose(t.coef, f.coef[:3])


def test_order_cap():
    with pytest.raises(Exception):
        Jet.variable(0.0, MAX_ORDER + 1)


@given(a=small_coefs, b=small_coefs)
@settings(max_examples=60, deadline=None)
def test_product_commutes_and_distributes(a, b):
    n = min(len(a), len(b)) - 1
    fa = jet_from(a[: n + 1])
    fb = jet_from(b[: n + 1])
    assert np.allclose((fa * fb).coef, (fb * fa).coef, atol=1e-12)
    assert np.allclose(
        (fa * (fa + fb)).coef, (fa * fa + fa * fb).coef, atol=1e-10
    )


@given(a=small_coefs)
@settings(max_examples=60, deadline=None)
def test_exp_log_roundtrip(a):
    coefs = np.asarray(a, dtype=complex)
    coefs[0] = 1.5 + abs(coefs[0])  # keep the constant term away from 0
    f = jet_from(coefs)
    assert np.allclose(f.exp().log().coef, f.coef, atol=1e-9)


@given(a=small_coefs, m=st.integers(min_value=0, max_value=4))
@settings(max_examples=60, deadline=None)
def test_pow_int_is_repeated_product(a, m):
    f = jet_from(a)
    direct = f.pow_int(m)
    by_mult = Jet.constant(1.0, f.order)
    for _ in range(m):
        by_mult = by_mult * f
    assert np.allclose(direct.coef, by_mult.coef, atol=1e-9)
