"""Root-based backend: product form, boundary, profile, green and delay laws."""

import numpy as np
import pytest

from fctlq import ArrivalModel, FctlInstance, find_roots
from fctlq.classic import (
    CONVENTION_CO_ARRIVAL,
    CONVENTION_QUEUE_ONLY,
    cycle_profile,
    delay_distribution,
    effective_green,
    moments_root_form,
    pgf_root_form,
    pgf_root_form_jet,
    pmf_root_form,
    solve_boundary,
)


def test_pgf_exact_at_one(corpus, pipelines):
    for inst in corpus:
        rs = pipelines[str(inst)].rootset
        val = complex(pgf_root_form(rs, inst, 1.0))
        assert abs(val - 1.0) < 1e-13


def test_pgf_near_one_window_follows_jet():
    # regression: the removable singularity at w=1 must not be filled by a
    # lossy two-point limit
    inst = FctlInstance(20, 30, ArrivalModel.poisson(0.38))
    rs = find_roots(inst)
    jet = pgf_root_form_jet(rs, inst, 1.0, 2)
    c = np.asarray(jet.coef)
    for dw in (1e-7, -1e-7, 5e-7, -5e-7, 9e-7):
        got = complex(pgf_root_form(rs, inst, 1.0 + dw))
        want = c[0] + c[1] * dw + c[2] * dw * dw
        assert abs(got - want) < 1e-12


def test_pgf_matches_moments(corpus, pipelines):
    for inst in corpus:
        rs = pipelines[str(inst)].rootset
        jet = pgf_root_form_jet(rs, inst, 1.0, 2)
        coef = np.asarray(jet.coef)
        mean, var = moments_root_form(rs, inst)
        assert abs(coef[1].real - mean) < 1e-9 * max(1.0, abs(mean))
        want_var = 2 * coef[2].real + mean - mean * mean
        assert abs(var - want_var) < 1e-7 * max(1.0, abs(var))


def test_pmf_distribution_and_empty_prob(corpus, pipelines):
    for inst in corpus:
        dist = pipelines[str(inst)].pmf
        p = np.asarray(dist.pmf)
        assert np.all(p >= -1e-12)
        assert abs(np.sum(p) + dist.tail - 1.0) < 1e-8
        w0 = complex(pgf_root_form(pipelines[str(inst)].rootset, inst, 0.0))
        assert abs(p[0] - w0.real) < 1e-9


def test_jet_base_half_matches_differences():
    inst = FctlInstance(5, 7, ArrivalModel.poisson(0.4))
    rs = find_roots(inst)
    jet = pgf_root_form_jet(rs, inst, 0.5, 3)
    coef = np.asarray(jet.coef)
    h = 1e-5

    def x(w):
        return complex(pgf_root_form(rs, inst, w)).real

    d1 = (x(0.5 + h) - x(0.5 - h)) / (2 * h)
    d2 = (x(0.5 + h) - 2 * x(0.5) + x(0.5 - h)) / h**2
    assert abs(coef[0].real - x(0.5)) < 1e-12
    assert abs(coef[1].real - d1) / abs(d1) < 1e-8
    assert abs(2 * coef[2].real - d2) / abs(d2) < 1e-4


def profile_for(pipelines, inst):
    pl = pipelines[str(inst)]
    return cycle_profile(inst, pl.boundary, pl.pmf)


def test_profile_wraps_and_masses(corpus, pipelines):
    for inst in corpus[:14]:
        prof = profile_for(pipelines, inst)
        assert len(prof.pmfs) == inst.c + 1
        first = np.asarray(prof.pmfs[0])
        last = np.asarray(prof.pmfs[inst.c])
        n = max(len(first), len(last))
        a = np.zeros(n); a[: len(first)] = first
        b = np.zeros(n); b[: len(last)] = last
        assert np.max(np.abs(a - b)) < 1e-12  # row c repeats row 0
        for row in prof.pmfs:
            row = np.asarray(row)
            assert np.all(row >= -1e-12)
            assert np.sum(row) < 1.0 + 1e-9


def test_profile_red_slots_add_mean_arrivals(corpus, pipelines):
    for inst in corpus[:14]:
        prof = profile_for(pipelines, inst)
        mu = inst.arrivals.mean
        means = [float(np.sum(np.arange(len(p)) * np.asarray(p))) for p in prof.pmfs]
        for k in range(inst.g, inst.c):
            # red slot k+1 adds exactly one slot of arrivals
            assert abs(means[k + 1] - means[k] - mu) < 1e-7
        for k in range(inst.g):
            # green slots drain at most one vehicle and add mu
            assert means[k + 1] <= means[k] + mu + 1e-9
            assert means[k + 1] >= means[k] - 1.0 + mu - 1e-7


def test_profile_row_g_is_overflow(corpus, pipelines):
    for inst in corpus[:14]:
        pl = pipelines[str(inst)]
        prof = profile_for(pipelines, inst)
        over = np.asarray(prof.pmfs[inst.g])
        want = np.asarray(pl.pmf.pmf)
        n = min(len(over), len(want))
        assert np.max(np.abs(over[:n] - want[:n])) < 1e-9


def test_effective_green_telescopes(corpus, pipelines):
    for inst in corpus:
        q = pipelines[str(inst)].boundary.q
        eg = effective_green(q, inst.g)
        p = np.asarray(eg.pmf)
        assert len(p) == inst.g + 1
        assert abs(np.sum(p) - 1.0) < 1e-12
        assert np.all(p >= -1e-12)
        assert abs(p[0] - q[0]) < 1e-14
        assert abs(p[inst.g] - (1.0 - q[inst.g - 1])) < 1e-12


def test_delay_zero_mass_equals_empty_green_start():
    inst = FctlInstance(20, 30, ArrivalModel.poisson(0.36))
    rs = find_roots(inst)
    b = solve_boundary(rs, inst)
    prof = cycle_profile(inst, b, pmf_root_form(rs, inst))
    for slot in (1, 10, 20):
        dd = delay_distribution(inst, prof, slot, convention=CONVENTION_CO_ARRIVAL)
        start_empty = float(np.asarray(prof.pmfs[slot - 1])[0])
        # arrivals in an empty-start green slot pass with zero delay;
        # any queued vehicle forces delay >= 1
        assert abs(dd.pmf[0] - start_empty) < 1e-9


def test_delay_red_slot_has_minimum_wait():
    inst = FctlInstance(4, 6, ArrivalModel.poisson(0.3))
    rs = find_roots(inst)
    b = solve_boundary(rs, inst)
    prof = cycle_profile(inst, b, pmf_root_form(rs, inst))
    slot = 7  # red slot: must wait for the residual red period
    dd = delay_distribution(inst, prof, slot, convention=CONVENTION_CO_ARRIVAL)
    c = inst.c
    min_wait = c - slot + 1  # residual red plus the departure slot
    assert np.all(np.asarray(dd.pmf[:min_wait]) < 1e-14)
    assert dd.pmf[min_wait] > 0.0


def test_delay_conventions_ordered():
    inst = FctlInstance(20, 30, ArrivalModel.poisson(0.36))
    rs = find_roots(inst)
    b = solve_boundary(rs, inst)
    prof = cycle_profile(inst, b, pmf_root_form(rs, inst))
    for slot in (5, 10, 30):
        qo = delay_distribution(inst, prof, slot, convention=CONVENTION_QUEUE_ONLY)
        co = delay_distribution(inst, prof, slot, convention=CONVENTION_CO_ARRIVAL)
        m_qo = float(np.sum(np.arange(len(qo.pmf)) * np.asarray(qo.pmf)))
        m_co = float(np.sum(np.arange(len(co.pmf)) * np.asarray(co.pmf)))
        # same-slot predecessors can only add delay
        assert m_co >= m_qo - 1e-10


def test_delay_pmf_is_distribution(corpus, pipelines):
    inst = [i for i in corpus if i.g == 5][0]
    prof = profile_for(pipelines, inst)
    for slot in range(1, inst.c + 1):
        dd = delay_distribution(inst, prof, slot)
        assert abs(np.sum(dd.pmf) + dd.tail - 1.0) < 1e-9
        assert np.all(np.asarray(dd.pmf) >= -1e-12)


def test_delay_rejects_bad_inputs():
    inst = FctlInstance(4, 6, ArrivalModel.poisson(0.3))
    rs = find_roots(inst)
    b = solve_boundary(rs, inst)
    prof = cycle_profile(inst, b, pmf_root_form(rs, inst))
    with pytest.raises(ValueError):
        delay_distribution(inst, prof, 5, convention="nope")
