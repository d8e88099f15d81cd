"""Quadrature engine, contour selection, Lambert W, PGF inversion."""

import math

import numpy as np
import pytest

import fctlq.analytic as analytic
from fctlq import ArrivalModel, FctlInstance, QuadratureError
from fctlq.analytic import (
    choose_contour,
    circle_quadrature,
    contour_budget,
    injectivity_radius,
    invert_pgf,
    lambert_w,
    outer_real_root,
)


def test_lambert_w_inverts_w_exp_w():
    xs = np.concatenate([
        np.linspace(-1 / np.e + 1e-9, 0.0, 25),
        np.linspace(1e-6, 10.0, 50),
    ])
    for x in xs:
        w = lambert_w(x)
        assert abs(w * np.exp(w) - x) <= 1e-13 * max(1.0, abs(x))
        assert w >= -1.0 - 1e-12  # principal branch


def test_lambert_w_known_values():
    assert abs(lambert_w(0.0)) < 1e-15
    assert abs(lambert_w(np.e) - 1.0) < 1e-14
    assert abs(lambert_w(-1 / np.e) + 1.0) < 1e-6  # square-root branch point


def test_cauchy_coefficient_extraction():
    # k-th Taylor coefficient of exp via (1/2*pi*i) * integral exp(z)/z^(k+1)
    for k in (0, 1, 4):
        val = circle_quadrature(lambda z: np.exp(z) / z ** (k + 1), 0.7)
        want = 1.0 / math.factorial(k)
        assert abs(val - want) < 1e-12


def test_quadrature_history_is_geometric():
    val, hist = circle_quadrature(
        lambda z: np.exp(z) / z, 0.8, n0=4, return_history=True
    )
    assert abs(val - 1.0) < 1e-13
    deltas = [d for _, _, d in hist if d is not None and d > 1e-13]
    for a, b in zip(deltas, deltas[1:]):
        assert b < 0.5 * a


def test_quadrature_bails_out_on_node_cap():
    # integrand with a pole on the contour never settles; the pole sits at
    # an irrational angle so no node divides by exactly zero
    pole = 0.5 * np.exp(0.7j)
    with pytest.raises(QuadratureError):
        circle_quadrature(lambda z: 1.0 / (z - pole), 0.5, n0=4, max_nodes=64)


def test_contour_radii_ordering(corpus):
    for inst in corpus:
        t0 = injectivity_radius(inst.arrivals)
        r0, capped = outer_real_root(inst.g, inst.a)
        assert t0 > 1.0
        assert r0 > 1.0
        spec = choose_contour(inst)
        assert 1.0 < spec.radius < r0
        assert spec.radius <= t0
        if not capped:
            # R0 really solves z^g = A(z)
            assert abs(r0 ** inst.g - inst.a.eval(r0)) < 1e-9 * r0 ** inst.g


def test_contour_budget_consistency():
    inst = FctlInstance(4, 6, ArrivalModel.poisson(0.3))
    budget, t0, r0, capped = contour_budget(inst.g, inst.arrivals, inst.a)
    assert budget == min(t0, budget)
    assert not capped
    assert 1.0 < r0 < t0


def test_geometric_radius_cap():
    m = ArrivalModel.geometric(0.35)
    t0 = injectivity_radius(m)
    assert t0 < m.radius  # never probes beyond the series' convergence disk


def test_invert_pgf_poisson():
    m = ArrivalModel.poisson(0.3)
    coef, imag_max = invert_pgf(m.eval, 12)
    want = m.taylor(12)
    assert np.max(np.abs(coef - want)) < 1e-12
    assert imag_max < 1e-12


def test_invert_pgf_rejects_negative_kmax():
    with pytest.raises(ValueError):
        invert_pgf(lambda z: z, -1)
