"""Root-based queue solution: boundary probabilities, PGF product form,
per-slot distributions, effective green time, and delay laws.

Everything here consumes a certified :class:`~fctlq.roots.RootSet`; nothing
touches the contour machinery, so results from this module and the contour
backend are genuinely independent cross-checks of each other.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .arrivals import FctlInstance
from .errors import CrossCheckError, SolverError, TruncationError
from .series import Jet

logger = logging.getLogger(__name__)

#: default tail target when truncating distributions
TAIL_TARGET = 1e-10
#: hard cap on distribution support during propagation
SUPPORT_CAP = 100_000


@dataclass
class QueueDistribution:
    """Probability mass on 0..len(pmf)-1 plus explicitly tracked tail mass."""

    pmf: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        self.pmf = np.asarray(self.pmf, dtype=float)

    @property
    def support(self):
        return np.arange(len(self.pmf))

    def mean(self):
        return float(self.support @ self.pmf)

    def variance(self):
        m = self.mean()
        return float((self.support - m) ** 2 @ self.pmf)

    def prob(self, k):
        return float(self.pmf[k]) if 0 <= k < len(self.pmf) else 0.0

    def prob_greater(self, k):
        """P(X > k), counting the unrepresented tail."""
        inside = float(np.sum(self.pmf[k + 1 :])) if k + 1 < len(self.pmf) else 0.0
        return inside + self.tail

    def total(self):
        return float(np.sum(self.pmf)) + self.tail


@dataclass
class BoundaryProbabilities:
    """Idle probabilities along the green period.

    ``q[k]`` is the stationary probability that the queue is empty at the
    end of green slot k, for k = 0..g-1, with k = 0 meaning the start of the
    green period. These are nondecreasing in k (once the queue clears during
    green it stays clear).
    """

    q: np.ndarray
    residual: float
    condition: float


@dataclass
class CycleProfile:
    """Stationary per-slot queue data over one cycle.

    Index k = 0 is the start of the green period; 1..g are the ends of the
    green slots; g+1..c the ends of the red slots (so row c repeats row 0 in
    distribution).
    """

    means: np.ndarray
    zero_probs: np.ndarray
    pmfs: list | None
    q_gap: float
    stationarity_gap: float


def _green_step(p, y):
    """One green slot: depart one if the queue is nonempty; arrivals that meet
    an empty queue pass through and do not join."""
    out = np.convolve(p[1:], y)
    if len(out) == 0:
        out = np.zeros(1)
    out[0] += p[0]
    return out


def _red_step(p, y):
    return np.convolve(p, y)


def _trim(p, budget):
    """Drop trailing mass below the running truncation budget."""
    if len(p) > SUPPORT_CAP:
        dropped = float(np.sum(p[SUPPORT_CAP:]))
        budget[0] += dropped
        p = p[:SUPPORT_CAP]
        if budget[0] > TAIL_TARGET:
            raise TruncationError(
                f"support cap {SUPPORT_CAP} exceeded with {budget[0]:g} mass dropped"
            )
    cum = np.cumsum(p[::-1])[::-1]
    keep = np.nonzero(cum > 1e-16)[0]
    if len(keep) == 0:
        return p[:1], budget
    last = keep[-1]
    budget[0] += float(cum[last + 1]) if last + 1 < len(p) else 0.0
    return p[: last + 1], budget


def _boundary_by_propagation(rootset, instance):
    """q_k by stepping the root-form overflow pmf through one cycle.

    Falls entirely inside the root backend: the overflow pmf comes from the
    product form, the red steps are plain convolutions and the green steps
    keep the empty state absorbing within the cycle.
    """
    y = _arrival_pmf(instance.arrivals)
    p = pmf_root_form(rootset, instance, tail_target=1e-13).pmf
    for _ in range(instance.r):
        p = np.convolve(p, y)
    q = np.empty(instance.g)
    q[0] = p[0]
    for k in range(1, instance.g):
        nxt = np.convolve(p[1:], y)
        nxt[0] += p[0]
        p = nxt
        q[k] = p[0]
    return q


def solve_boundary(rootset, instance: FctlInstance):
    """Boundary idle probabilities from the unit-disk roots.

    For each non-unit root z_j the numerator of the queue PGF must vanish,
    giving sum_k q_k z_j^k Y(z_j)^(g-1-k) = 0; the normalization
    sum_k q_k = (g - A'(1)) / (1 - E[Y]) closes the g x g system.  The
    dense system's conditioning grows exponentially with g; above 1e12 the
    q values are instead obtained by propagating the root-form overflow pmf
    around the cycle, and the system only certifies them (the forward
    residual of the true solution stays small however ill-conditioned the
    inverse problem is).
    """
    g = instance.g
    model = instance.arrivals
    norm = (g - instance.a.mean) / (1.0 - model.mean)

    if g == 1:
        q = np.array([norm])
        return BoundaryProbabilities(q=q, residual=0.0, condition=1.0)

    zs = rootset.roots[1:]
    yz = model.eval(zs)
    k = np.arange(g)
    rows = zs[:, None] ** k[None, :] * yz[:, None] ** (g - 1 - k[None, :])
    scale = np.max(np.abs(rows), axis=1, keepdims=True)
    mat = np.zeros((g, g), dtype=complex)
    mat[: g - 1] = rows / scale
    mat[g - 1] = 1.0
    rhs = np.zeros(g, dtype=complex)
    rhs[g - 1] = norm

    condition = float(np.linalg.cond(mat))
    if condition > 1e12:
        q = _boundary_by_propagation(rootset, instance)
        residual = float(np.max(np.abs(mat @ q.astype(complex) - rhs)))
        if residual > 1e-7:
            raise SolverError(f"propagated boundary residual {residual:g} above 1e-7")
    else:
        sol = np.linalg.solve(mat, rhs)
        residual = float(np.max(np.abs(mat @ sol - rhs)))
        if residual > 1e-9:
            raise SolverError(f"boundary system residual {residual:g} above 1e-9")
        if np.max(np.abs(sol.imag)) > 1e-7:
            raise SolverError("boundary probabilities came out non-real")
        q = sol.real.copy()
    if np.any(q < -1e-9) or np.any(np.diff(q) < -1e-9):
        raise SolverError("boundary probabilities not increasing in [0, 1]")
    return BoundaryProbabilities(q=q, residual=residual, condition=condition)


def pgf_root_form(rootset, instance: FctlInstance, w):
    """Overflow-queue PGF evaluated through the factorized product form.

    X(w) = C * (w - Y(w)) / (w^g - A(w)) * prod_k (Y(w) - w u_k) / (1 - u_k)
    with u_k = Y(z_k)/z_k over the non-unit roots and C the normalization
    (g - A'(1)) / (1 - E[Y]). The removable singularity at w = 1 is filled
    by the order-2 jet about 1 (exact limit, no cancellation); points near
    a non-unit root are averaged over w(1 +/- 1e-7).
    """
    w_arr = np.atleast_1d(np.asarray(w, dtype=complex))
    out = _root_form_raw(rootset, instance, w_arr)

    one = np.abs(w_arr - 1.0) < 1e-6
    sing = np.zeros_like(one)
    for z in rootset.roots[1:]:
        sing |= np.abs(w_arr - z) < 1e-6
    sing &= ~one
    if np.any(one):
        jet = pgf_root_form_jet(rootset, instance, 1.0, 2)
        dw = w_arr[one] - 1.0
        out[one] = jet.coef[0] + jet.coef[1] * dw + jet.coef[2] * dw * dw
    if np.any(sing):
        ws = w_arr[sing]
        h = 1e-7
        hi = _root_form_raw(rootset, instance, ws * (1.0 + h))
        lo = _root_form_raw(rootset, instance, ws * (1.0 - h))
        out[sing] = 0.5 * (hi + lo)
    return out[0] if np.ndim(w) == 0 else out


def _root_form_raw(rootset, instance, w):
    g = instance.g
    model = instance.arrivals
    c0 = (g - instance.a.mean) / (1.0 - model.mean)
    with np.errstate(invalid="ignore", divide="ignore"):
        yw = model.eval(w)
        num = (w - yw) / (w**g - instance.a.eval(w))
        if g == 1:
            prod = np.ones_like(w)
        else:
            u = model.eval(rootset.roots[1:]) / rootset.roots[1:]
            factors = (yw[None, :] - w[None, :] * u[:, None]) / (1.0 - u[:, None])
            prod = np.prod(factors, axis=0)
    return c0 * num * prod


def pgf_root_form_jet(rootset, instance: FctlInstance, base, order):
    """Jet of the product-form PGF about ``base``.

    At base 1 the (w - Y(w)) and (w^g - A(w)) factors both vanish to first
    order; the quotient is taken after shifting both jets down, which keeps
    the expansion exact instead of relying on a numerical limit.
    """
    g = instance.g
    model = instance.arrivals
    c0 = (g - instance.a.mean) / (1.0 - model.mean)
    pad = 1 if abs(base - 1.0) < 1e-12 else 0
    k = order + pad

    wj = Jet.variable(complex(base), k)
    yj = Jet(model.jet(complex(base), k))
    aj = yj.pow_int(instance.c)
    numer = wj - yj
    denom = wj.pow_int(g) - aj
    if pad:
        numer = numer.shift_down(1)
        denom = denom.shift_down(1)
    else:
        numer = numer.truncate(order)
        denom = denom.truncate(order)
    result = numer / denom

    if g > 1:
        u = model.eval(rootset.roots[1:]) / rootset.roots[1:]
        yj_o = yj.truncate(order)
        wj_o = wj.truncate(order)
        for uk in u:
            result = result * ((yj_o - wj_o * uk) / (1.0 - uk))
    return Jet(result.coef * c0)


def moments_root_form(rootset, instance: FctlInstance):
    """(mean, variance) of the overflow queue from the product form."""
    jet = pgf_root_form_jet(rootset, instance, 1.0, 2)
    c1, c2 = jet.coef[1], jet.coef[2]
    mean = c1
    var = 2.0 * c2 + c1 - c1**2
    for name, v in (("mean", mean), ("variance", var)):
        if abs(v.imag) > 1e-9 * max(1.0, abs(v)):
            raise SolverError(f"root-form {name} has imaginary residue {v.imag:g}")
    return float(mean.real), float(var.real)


def pmf_root_form(rootset, instance: FctlInstance, kmax=None, tail_target=1e-9):
    """Overflow pmf through the product form (FFT inversion on a subunit circle)."""
    from .analytic import invert_pgf

    def pgf(w):
        return pgf_root_form(rootset, instance, w)

    if kmax is not None:
        coef, _ = invert_pgf(pgf, kmax)
        pmf = _clean_pmf(coef)
        return QueueDistribution(pmf, tail=max(0.0, 1.0 - float(np.sum(pmf))))

    k = 64
    while True:
        coef, _ = invert_pgf(pgf, k)
        pmf = _clean_pmf(coef)
        cum = np.cumsum(pmf)
        hit = np.nonzero(cum > 1.0 - tail_target)[0]
        if len(hit):
            cut = int(hit[0]) + 1
            return QueueDistribution(pmf[:cut], tail=max(0.0, 1.0 - float(cum[cut - 1])))
        if k >= 2**14:
            raise SolverError(f"pmf tail target {tail_target} not reached by k={k}")
        k *= 2


def _clean_pmf(coef):
    pmf = np.asarray(coef, dtype=float)
    worst = float(pmf.min(initial=0.0))
    if worst < -1e-12:
        raise SolverError(f"pmf inversion produced negative mass {worst:g}")
    n_clamped = int(np.sum(pmf < 0.0))
    if n_clamped:
        logger.debug("clamped %d slightly negative pmf entries (min %g)", n_clamped, worst)
    return np.maximum(pmf, 0.0)


def cycle_profile(instance: FctlInstance, q, overflow_pmf, keep_pmfs=True):
    """Propagate the overflow distribution around one stationary cycle.

    Checks along the way: the propagated P(X_k = 0) for k = 0..g-1 must match
    the boundary probabilities ``q`` within 1e-8, and one full cycle must
    return to the overflow distribution it started from (stationarity).
    """
    model = instance.arrivals
    g, c = instance.g, instance.c
    y = _arrival_pmf(model)
    budget = [overflow_pmf.tail]

    pmfs = [None] * (c + 1)
    p = np.asarray(overflow_pmf.pmf, dtype=float)
    pmfs[g] = p
    for j in range(instance.r):
        p, budget = _trim(_red_step(p, y), budget)
        pmfs[g + 1 + j] = p
    pmfs[0] = p
    for s in range(1, g + 1):
        p, budget = _trim(_green_step(p, y), budget)
        if s < g:
            pmfs[s] = p

    # one full cycle must come back to the overflow pmf it started from
    stationarity_gap = _pmf_gap(p, overflow_pmf.pmf)

    qs = np.array([pmfs[k][0] for k in range(g)])
    q_gap = float(np.max(np.abs(qs - np.asarray(q.q)))) if q is not None else 0.0
    if q is not None and q_gap > 1e-8:
        raise CrossCheckError(
            f"boundary probabilities disagree with propagated pmfs by {q_gap:g}"
        )

    means = np.array([float(np.arange(len(pk)) @ pk) for pk in pmfs])
    zeros = np.array([float(pk[0]) for pk in pmfs])
    return CycleProfile(
        means=means,
        zero_probs=zeros,
        pmfs=pmfs if keep_pmfs else None,
        q_gap=q_gap,
        stationarity_gap=stationarity_gap,
    )


def _pmf_gap(a, b):
    n = max(len(a), len(b))
    pa = np.zeros(n)
    pa[: len(a)] = a
    pb = np.zeros(n)
    pb[: len(b)] = b
    return float(np.max(np.abs(pa - pb)))


def _arrival_pmf(model, tol=1e-16):
    """Per-slot arrival pmf truncated to tail below tol."""
    sup = model.support_max
    if sup is not None:
        return model.taylor(sup)
    n = 8
    while model.power_tail(1, n) > tol:
        n *= 2
        if n > SUPPORT_CAP:
            raise TruncationError("arrival pmf does not decay below the tail target")
    return model.taylor(n)


def effective_green(q, g):
    """Distribution of usable green slots per cycle.

    The server idles from green slot k+1 on exactly when the queue clears at
    slot k, so P(G = k) = q_k - q_(k-1) for 0 < k < g, P(G = 0) = q_0, and
    P(G = g) = 1 - q_(g-1) (the green never goes idle).
    """
    qv = np.asarray(q.q if isinstance(q, BoundaryProbabilities) else q, dtype=float)
    if len(qv) != g:
        raise ValueError(f"need {g} boundary probabilities, got {len(qv)}")
    pmf = np.empty(g + 1)
    pmf[0] = qv[0]
    pmf[1:g] = np.diff(qv)
    pmf[g] = 1.0 - qv[g - 1]
    if pmf.min() < -1e-9:
        raise SolverError("effective-green pmf came out negative")
    return QueueDistribution(np.maximum(pmf, 0.0), tail=0.0)


CONVENTION_QUEUE_ONLY = "queue_only"
CONVENTION_CO_ARRIVAL = "co_arrival"


def delay_distribution(instance: FctlInstance, profile: CycleProfile, slot,
                       convention=CONVENTION_CO_ARRIVAL):
    """Delay law for a vehicle arriving in cycle slot ``slot`` (1-based).

    The vehicle sees the stationary queue at the start of its slot
    (profile row slot-1). Under ``co_arrival`` it also queues behind the
    same-slot arrivals that precede it: a tagged arrival has U predecessors
    with P(U = u) = P(Y > u) / E[Y] (size-biased position). ``queue_only``
    ignores co-arrivals (U = 0).

    Green-slot arrivals that find the queue empty pass with zero delay. A
    queued vehicle in position j (vehicles to clear before it, counting
    itself into the slot it departs) waits j slots plus r for every red
    period the service crosses.
    """
    g, r, c = instance.g, instance.r, instance.c
    if not 1 <= slot <= c:
        raise ValueError(f"slot must be in 1..{c}, got {slot}")
    if profile.pmfs is None:
        raise ValueError("cycle_profile must be built with keep_pmfs=True")
    model = instance.arrivals

    if convention == CONVENTION_QUEUE_ONLY:
        u = np.array([1.0])
    elif convention == CONVENTION_CO_ARRIVAL:
        if model.mean == 0.0:
            return QueueDistribution(np.array([1.0]), tail=0.0)
        y = _arrival_pmf(model)
        sf = 1.0 - np.cumsum(y)
        u = np.maximum(sf[:-1], 0.0) / model.mean
        if len(u) == 0:
            u = np.array([1.0])
    else:
        raise ValueError(f"unknown delay convention {convention!r}")

    p = profile.pmfs[slot - 1]
    tail_in = 1.0 - float(np.sum(p))

    if slot <= g:
        # positions j >= 1 for vehicles that actually queue (n >= 1)
        queued = np.convolve(p[1:], u)  # mass at position (n-1) + u + 1 = n + u
        positions = np.arange(1, len(queued) + 1)
        s_rel = g - slot
        over = np.maximum(positions - s_rel, 0)
        wraps = (over + g - 1) // g
        delays_j = positions + r * wraps
        dmax = int(delays_j.max(initial=0))
        pmf = np.zeros(dmax + 1)
        pmf[0] = p[0]
        np.add.at(pmf, delays_j, queued)
    else:
        pos_mass = np.convolve(p, u)  # position j = n + u + 1
        positions = np.arange(1, len(pos_mass) + 1)
        wraps = (positions + g - 1) // g
        delays_j = (c - slot) + positions + (wraps - 1) * r
        pmf = np.zeros(int(delays_j.max()) + 1)
        np.add.at(pmf, delays_j, pos_mass)

    return QueueDistribution(pmf, tail=max(0.0, tail_in))
