"""Shared corpus and cached solver pipelines.

The corpus spans the three required arrival families plus one geometric
case, green lengths 1 through 100, and loads from 0.32 up to 0.98.  Every
instance is stable.  Pipelines (roots, boundary, pmf, contour solution)
are built once per session; tests that must measure their own runtime
build fresh objects instead of using the cache.
"""

from dataclasses import dataclass, field

import numpy as np
import pytest

from fctlq import (
    ArrivalModel,
    FctlInstance,
    find_roots,
    solve_boundary,
    solve_contour,
)
from fctlq.classic import pmf_root_form


def corpus_specs():
    a = ArrivalModel
    return [
        (1, 1, a.bernoulli(0.4)),
        (1, 2, a.poisson(0.3)),
        (1, 1, a.finite([0.75, 0.15, 0.10])),
        (1, 3, a.bernoulli(0.2)),
        (2, 2, a.bernoulli(0.45)),
        (2, 3, a.poisson(0.35)),
        (2, 2, a.finite([0.65, 0.25, 0.10])),
        (2, 1, a.poisson(0.5)),
        (5, 5, a.bernoulli(0.49)),
        (5, 7, a.poisson(0.4)),
        (5, 4, a.finite([0.60, 0.30, 0.08, 0.02])),
        (5, 3, a.poisson(0.2)),
        (5, 5, a.finite([0.80, 0.10, 0.05, 0.03, 0.02])),
        (20, 30, a.poisson(0.3)),
        (20, 30, a.poisson(0.36)),
        (20, 30, a.poisson(0.38)),
        (20, 25, a.bernoulli(0.42)),
        (20, 30, a.finite([0.75, 0.15, 0.07, 0.03])),
        (20, 10, a.geometric(0.35)),
        (100, 50, a.poisson(0.6)),
        (100, 60, a.bernoulli(0.55)),
        (100, 50, a.finite([0.60, 0.25, 0.10, 0.05])),
    ]


def build_corpus():
    return [FctlInstance(g, r, m) for g, r, m in corpus_specs()]


@pytest.fixture(scope="session")
def corpus():
    return build_corpus()


@pytest.fixture(scope="session")
def small_corpus(corpus):
    """Instances the exact Markov oracle covers comfortably."""
    picked = [inst for inst in corpus if inst.g <= 5 and inst.c <= 12]
    assert len(picked) >= 10
    return picked


@dataclass
class Pipeline:
    instance: FctlInstance
    rootset: object
    boundary: object
    pmf: object
    contour: object
    _cache: dict = field(default_factory=dict)


@pytest.fixture(scope="session")
def pipelines(corpus):
    out = {}
    for inst in corpus:
        rs = find_roots(inst)
        out[str(inst)] = Pipeline(
            instance=inst,
            rootset=rs,
            boundary=solve_boundary(rs, inst),
            pmf=pmf_root_form(rs, inst),
            contour=solve_contour(inst),
        )
    return out


def rel_err(a, b):
    a = complex(np.asarray(a).reshape(-1)[0])
    b = complex(np.asarray(b).reshape(-1)[0])
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def total_variation(p, p_tail, q, q_tail):
    n = max(len(p), len(q))
    pp = np.zeros(n)
    qq = np.zeros(n)
    pp[: len(p)] = p
    qq[: len(q)] = q
    return 0.5 * (np.sum(np.abs(pp - qq)) + abs(p_tail - q_tail))


def propagate_reds(pmf, y, r):
    """Overflow pmf pushed through the r red slots (plain convolutions)."""
    p = np.asarray(pmf, dtype=float)
    for _ in range(r):
        p = np.convolve(p, y)
    return p


def matched_distance(a, b):
    """Max distance under the optimal pairing of two point sets.

    Sorting complex arrays misorders near-ties in the real part, so set
    equality has to go through an assignment, not elementwise comparison.
    """
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a)
    b = np.asarray(b)
    assert a.shape == b.shape
    cost = np.abs(a[:, None] - b[None, :])
    ii, jj = linear_sum_assignment(cost)
    return float(cost[ii, jj].max())
