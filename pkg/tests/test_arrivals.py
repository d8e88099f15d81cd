"""Arrival-model surface: validation, pgf identities, sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fctlq import ArrivalModel, ConfigError, FctlInstance, StabilityError
from fctlq.arrivals import PowerPgf

MODELS = [
    ArrivalModel.bernoulli(0.4),
    ArrivalModel.poisson(0.38),
    ArrivalModel.geometric(0.35),
    ArrivalModel.finite([0.6, 0.25, 0.1, 0.05]),
]


@pytest.mark.parametrize("bad", [
    lambda: ArrivalModel.bernoulli(1.0),
    lambda: ArrivalModel.bernoulli(-0.2),
    lambda: ArrivalModel.poisson(1.0),
    lambda: ArrivalModel.poisson(-0.1),
    lambda: ArrivalModel.geometric(1.0),
    lambda: ArrivalModel.finite([0.5, 0.4]),
    lambda: ArrivalModel.finite([-0.1, 1.1]),
])
def test_invalid_parameters_rejected(bad):
    with pytest.raises(ConfigError):
        bad()


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_taylor_is_a_distribution(model):
    coef = model.taylor(200)
    assert np.all(coef >= 0)
    assert abs(np.sum(coef) - 1.0) < 1e-12


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_moments_match_taylor(model):
    coef = model.taylor(300)
    k = np.arange(len(coef))
    mean = float(np.sum(k * coef))
    second = float(np.sum(k * k * coef))
    assert abs(model.mean - mean) < 1e-10
    assert abs(model.second_moment - second) < 1e-9
    assert abs(model.variance - (second - mean * mean)) < 1e-9


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_eval_normalization_and_disk_bound(model):
    assert abs(model.eval(1.0) - 1.0) < 1e-14
    theta = np.linspace(0.0, 2 * np.pi, 37)
    on_circle = model.eval(np.exp(1j * theta))
    assert np.all(np.abs(on_circle) <= 1.0 + 1e-12)
    # eval agrees with the series inside the disk
    coef = model.taylor(400)
    for w in (0.0, 0.3, -0.5, 0.8j):
        series = np.polyval(coef[::-1], w)
        assert abs(model.eval(w) - series) < 1e-10


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_deriv_matches_central_difference(model):
    h = 1e-6
    for w in (0.3, 0.7):
        fd = (model.eval(w + h) - model.eval(w - h)) / (2 * h)
        assert abs(model.deriv(w) - fd) / max(abs(fd), 1e-12) < 1e-7
    assert abs(model.deriv(1.0) - model.mean) < 1e-10


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_jet_matches_derivatives(model):
    coef = np.asarray(model.jet(0.6, 3))
    h = 1e-5
    f = model.eval
    d1 = (f(0.6 + h) - f(0.6 - h)) / (2 * h)
    d2 = (f(0.6 + h) - 2 * f(0.6) + f(0.6 - h)) / h**2
    assert abs(coef[0] - f(0.6)) < 1e-13
    assert abs(coef[1] - d1) / abs(d1) < 1e-8
    # second-order term only where the pgf actually curves
    if abs(d2) > 1e-4:
        assert abs(2 * coef[2] - d2) / abs(d2) < 1e-5


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_power_pgf_is_iid_sum(model):
    for m in (1, 3, 7):
        p = PowerPgf(model, m)
        assert abs(p.mean - m * model.mean) < 1e-12
        for w in (0.2, 0.9, -0.4):
            assert abs(p.eval(w) - model.eval(w) ** m) < 1e-12
        coef = p.taylor(200)
        direct = model.taylor(200)
        conv = np.array([1.0])
        for _ in range(m):
            conv = np.convolve(conv, direct)[:201]
        assert np.max(np.abs(coef[:150] - conv[:150])) < 1e-12


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_power_taylor_tail_complement(model):
    n = 40
    coef = model.power_taylor(5, n)
    tail = model.power_tail(5, n)
    assert abs(np.sum(coef) + tail - 1.0) < 1e-12
    assert tail >= -1e-15


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_sampling_moments(model):
    rng = np.random.default_rng(12345)
    x = model.sample(rng, 200_000)
    assert x.dtype == np.int64
    assert np.all(x >= 0)
    se = np.sqrt(model.variance / len(x))
    assert abs(np.mean(x) - model.mean) < 5 * se


def test_power_pgf_sampling_moments():
    rng = np.random.default_rng(99)
    for model in MODELS:
        p = PowerPgf(model, 6)
        x = p.sample(rng, 100_000)
        se = np.sqrt(6 * model.variance / len(x))
        assert abs(np.mean(x) - p.mean) < 5 * se


def test_instance_stability_guard():
    with pytest.raises(StabilityError):
        FctlInstance(2, 3, ArrivalModel.poisson(0.5))
    with pytest.raises(StabilityError):
        FctlInstance(1, 1, ArrivalModel.bernoulli(0.5))
    inst = FctlInstance(2, 2, ArrivalModel.poisson(0.45))
    assert inst.c == 4
    assert abs(inst.load - 4 * 0.45 / 2) < 1e-15


def test_instance_cycle_pgf_is_cth_power(corpus):
    for inst in corpus[:8]:
        for w in (0.3, 0.75, 1.0):
            assert abs(inst.a.eval(w) - inst.arrivals.eval(w) ** inst.c) < 1e-12
        assert abs(inst.a.mean - inst.c * inst.arrivals.mean) < 1e-10


@given(p=st.floats(min_value=0.0, max_value=0.999))
@settings(max_examples=40, deadline=None)
def test_bernoulli_identities(p):
    m = ArrivalModel.bernoulli(p)
    assert abs(m.eval(1.0) - 1.0) < 1e-14
    assert abs(m.mean - p) < 1e-14
    assert abs(m.variance - p * (1 - p)) < 1e-13
    w = 0.37
    assert abs(m.eval(w) - (1 - p + p * w)) < 1e-14


@given(lam=st.floats(min_value=0.0, max_value=0.999))
@settings(max_examples=40, deadline=None)
def test_poisson_identities(lam):
    m = ArrivalModel.poisson(lam)
    assert abs(m.mean - lam) < 1e-13
    assert abs(m.variance - lam) < 1e-12
    w = 0.6
    assert abs(m.eval(w) - np.exp(lam * (w - 1))) < 1e-13


@given(mu=st.floats(min_value=1e-6, max_value=0.999))
@settings(max_examples=40, deadline=None)
def test_geometric_identities(mu):
    m = ArrivalModel.geometric(mu)
    assert abs(m.mean - mu) < 1e-12
    coef = m.taylor(400)
    # geometric on {0,1,...}: success ratio q = mu/(1+mu)
    q = mu / (1 + mu)
    assert abs(coef[0] - (1 - q)) < 1e-12
    if len(coef) > 2 and coef[1] > 1e-12:
        assert abs(coef[2] / coef[1] - q) < 1e-9
