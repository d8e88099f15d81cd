"""Contour-integral backend: normalization, jets, pmf inversion, guards."""

import numpy as np
import pytest

from fctlq import (
    ArrivalModel,
    FORM_FULL_DISK,
    FORM_LOG_KERNEL,
    FctlInstance,
    solve_contour,
)
from fctlq.contour import (
    eval_pgf,
    eval_pgf_jet,
    mean_overflow,
    pmf_overflow,
    prob_empty,
    variance_overflow,
)


def test_pgf_normalization(corpus, pipelines):
    for inst in corpus:
        sol = pipelines[str(inst)].contour
        val = complex(np.asarray(eval_pgf(sol, 1.0)).reshape(-1)[0])
        assert abs(val - 1.0) < 1e-10


def test_pgf_real_monotone_on_unit_interval(corpus, pipelines):
    ws = np.linspace(0.0, 1.0, 9)
    for inst in corpus[:10]:
        sol = pipelines[str(inst)].contour
        vals = [complex(np.asarray(eval_pgf(sol, w)).reshape(-1)[0]) for w in ws]
        res = np.array([v.real for v in vals])
        ims = np.array([abs(v.imag) for v in vals])
        assert np.all(ims < 1e-10)
        assert np.all(np.diff(res) >= -1e-12)  # PGFs increase on [0, 1]
        assert res[0] > 0.0


def test_forms_agree_inside_validity_region(corpus, pipelines):
    for inst in corpus[:8]:
        sol = pipelines[str(inst)].contour
        for w in (0.0, 0.4, 0.9):
            full = complex(np.asarray(eval_pgf(sol, w, form=FORM_FULL_DISK)).reshape(-1)[0])
            logk = complex(np.asarray(eval_pgf(sol, w, form=FORM_LOG_KERNEL)).reshape(-1)[0])
            assert abs(full - logk) < 1e-9


def test_unknown_form_rejected(pipelines, corpus):
    sol = pipelines[str(corpus[0])].contour
    with pytest.raises(Exception):
        eval_pgf(sol, 0.5, form="nope")


def test_moments_match_jet(corpus, pipelines):
    for inst in corpus:
        sol = pipelines[str(inst)].contour
        jet = eval_pgf_jet(sol, 1.0, 2)
        coef = np.asarray(jet.coef)
        mean = mean_overflow(sol)
        var = variance_overflow(sol)
        assert abs(coef[0] - 1.0) < 1e-10
        assert abs(coef[1].real - mean) < 1e-8 * max(1.0, mean)
        # var = X''(1) + m - m^2 and X''(1) = 2 c2
        want = 2 * coef[2].real + mean - mean * mean
        assert abs(var - want) < 1e-6 * max(1.0, var)


def test_pmf_is_a_distribution(corpus, pipelines):
    for inst in corpus:
        dist = pipelines[str(inst)].contour.pmf_overflow()
        p = np.asarray(dist.pmf)
        assert np.all(p >= -1e-12)
        assert dist.tail >= -1e-12
        assert abs(np.sum(p) + dist.tail - 1.0) < 1e-8
        assert abs(p[0] - prob_empty(pipelines[str(inst)].contour)) < 1e-10


def test_pmf_mean_consistency():
    inst = FctlInstance(4, 6, ArrivalModel.poisson(0.3))
    sol = solve_contour(inst)
    dist = pmf_overflow(sol, tail_target=1e-12)
    p = np.asarray(dist.pmf)
    mean_from_pmf = float(np.sum(np.arange(len(p)) * p))
    assert abs(mean_from_pmf - mean_overflow(sol)) < 1e-7


def test_jet_matches_central_differences():
    inst = FctlInstance(20, 30, ArrivalModel.poisson(0.36))
    sol = solve_contour(inst)
    jet = eval_pgf_jet(sol, 1.0, 2)
    coef = np.asarray(jet.coef)
    h = 1e-5

    def x(w):
        return complex(np.asarray(eval_pgf(sol, w)).reshape(-1)[0]).real

    d1 = (x(1 + h) - x(1 - h)) / (2 * h)
    d2 = (x(1 + h) - 2 * x(1.0) + x(1 - h)) / h**2
    assert abs(coef[1].real - d1) / abs(d1) < 1e-6
    assert abs(2 * coef[2].real - d2) / abs(d2) < 1e-6


def test_moment_values_against_root_backend(pipelines, corpus):
    from fctlq.classic import moments_root_form

    for inst in corpus:
        pl = pipelines[str(inst)]
        mean_c = mean_overflow(pl.contour)
        var_c = variance_overflow(pl.contour)
        mean_r, var_r = moments_root_form(pl.rootset, inst)
        assert abs(mean_c - mean_r) / max(abs(mean_c), 1e-12) < 1e-8
        assert abs(var_c - var_r) / max(abs(var_c), 1e-12) < 1e-8
