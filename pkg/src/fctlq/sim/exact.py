"""Brute-force stationary distribution of the slot-level Markov chain.

An oracle independent of both analytical backends: no roots, no
contours, just the queue on {0..K} pushed through per-slot kernels (red
slots add arrivals, green slots serve one vehicle when busy and pass
arrivals otherwise).  Power iteration on the one-cycle operator,
anchored at the end-of-green overflow point, converges geometrically
for stable instances.

Truncation at K makes the operator substochastic; iterates are
renormalized and K is grown until the per-cycle mass loss and the
measured fixed-point gap are inside tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..arrivals import FctlInstance
from ..classic import QueueDistribution, _arrival_pmf
from ..errors import SolverError, TruncationError

#: max-norm change between normalized sweeps at convergence
POWER_TOL = 1e-13

#: per-cycle truncation leak forcing K growth
LEAK_TOL = 1e-10

#: required max-norm gap of the converged fixed point
STATIONARY_TOL = 1e-12

K_CAP = 100_000
MAX_SWEEPS = 500_000


@dataclass
class ExactStationary:
    """Converged chain with per-slot distributions.

    pmfs is indexed like the analytical cycle profile: pmfs[k] for
    k < g is the queue at the start of green slot k+1, pmfs[g] is the
    overflow, pmfs[g+j] the start of red slot g+j+1, and pmfs[c] the
    start of the next cycle (equal to pmfs[0]).
    """

    g: int
    r: int
    overflow: QueueDistribution
    pmfs: list
    gap: float
    leak: float
    truncation: int
    sweeps: int

    @property
    def idle_probabilities(self):
        """q_k = P(queue empty at the end of green slot k), k = 0..g-1,
        with k = 0 read as the start of the green phase."""
        return np.array([float(self.pmfs[k].pmf[0]) for k in range(self.g)])


def _red_step(p, y, k_cap):
    full = np.convolve(p, y)
    leak = float(full[k_cap + 1 :].sum())
    return full[: k_cap + 1], leak


def _green_step(p, y, k_cap):
    served = np.convolve(p[1:], y)
    leak = float(served[k_cap + 1 :].sum())
    out = np.zeros(k_cap + 1)
    seg = served[: k_cap + 1]
    out[: len(seg)] = seg
    out[0] += p[0]
    return out, leak


def _cycle(p, y, g, r, k_cap):
    leak = 0.0
    for _ in range(r):
        p, d = _red_step(p, y, k_cap)
        leak += d
    for _ in range(g):
        p, d = _green_step(p, y, k_cap)
        leak += d
    return p, leak


def exact_stationary(instance: FctlInstance, truncation=None) -> ExactStationary:
    """Stationary overflow and per-slot queue distributions by iteration.

    truncation seeds the state cap K; it grows (doubling, up to
    K_CAP) until the per-cycle leak is below LEAK_TOL and the converged
    vector satisfies the fixed-point equation to STATIONARY_TOL.
    """
    y = _arrival_pmf(instance.arrivals)
    g, r = instance.g, instance.r
    k = int(truncation) if truncation else 512
    warm = None

    while True:
        p = np.zeros(k + 1)
        if warm is not None:
            p[: len(warm)] = warm
        else:
            p[0] = 1.0
        sweeps = 0
        while True:
            nxt, leak = _cycle(p, y, g, r, k)
            nxt = nxt / nxt.sum()
            diff = float(np.max(np.abs(nxt - p)))
            p = nxt
            sweeps += 1
            if diff <= POWER_TOL:
                break
            if sweeps >= MAX_SWEEPS:
                raise SolverError(
                    f"power iteration did not converge in {MAX_SWEEPS} sweeps"
                )
        check, leak = _cycle(p, y, g, r, k)
        gap = float(np.max(np.abs(check - p)))
        if leak <= LEAK_TOL and gap <= STATIONARY_TOL:
            break
        warm = p
        if k >= K_CAP:
            raise TruncationError(
                f"state cap {k} leaves leak {leak:g} and gap {gap:g} above tolerance"
            )
        k = min(2 * k, K_CAP)

    pmfs = [None] * (instance.c + 1)
    pmfs[g] = QueueDistribution(p.copy())
    cur = p
    for j in range(r):
        cur, _ = _red_step(cur, y, k)
        pmfs[g + 1 + j] = QueueDistribution(cur.copy())
    pmfs[0] = QueueDistribution(cur.copy())
    for s in range(1, g):
        cur, _ = _green_step(cur, y, k)
        pmfs[s] = QueueDistribution(cur.copy())

    return ExactStationary(
        g=g,
        r=r,
        overflow=pmfs[g],
        pmfs=pmfs,
        gap=gap,
        leak=leak,
        truncation=k,
        sweeps=sweeps,
    )
