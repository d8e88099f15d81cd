"""Generalized fixed-cycle queues and the bulk-service bound.

The standard model fixes one departure opportunity per green slot and
independent per-slot arrivals.  The generalization keeps the overflow
recursion but lets a per-slot composite B(z) replace the arrival PGF
inside the kernel and a per-cycle composite A(z) replace Y(z)^c, with a
normalization function xi(z) vanishing at 1.  Four concrete variants are
provided (right-turn lanes, randomly interrupted green, driver
hesitation, dependent red-period arrivals) plus fully custom surfaces.

Evaluation uses the exponential contour form only; there is no
root-product rearrangement here.  Validity therefore extends over a
neighbourhood of [0, 1] established by a positivity scan of the log
argument on the quadrature nodes at build time, and every later
evaluation re-checks its own nodes.

The bulk-service queue (all g departures at once, cycle arrivals A) is
the classical single-transform bound; for Bernoulli slot arrivals it
coincides with the fixed-cycle overflow exactly, otherwise it dominates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import analytic
from .analytic import _choose_contour_core, circle_quadrature, invert_pgf
from .arrivals import ArrivalModel, FctlInstance, PowerPgf
from .classic import QueueDistribution, _clean_pmf
from .contour import JET_PMF_MAX, _check_principal_rows, _real
from .errors import ConfigError, ContourValidityError, SolverError, StabilityError
from .roots import default_truncation, find_roots_surface
from .series import MAX_ORDER, Jet

logger = logging.getLogger(__name__)

VARIANT_RIGHT_TURN = "right_turn"
VARIANT_INTERRUPTED = "interrupted"
VARIANT_HESITATION = "hesitation"
VARIANT_DEPENDENT_RED = "dependent_red"
VARIANT_CUSTOM = "custom"

VARIANTS = (
    VARIANT_RIGHT_TURN,
    VARIANT_INTERRUPTED,
    VARIANT_HESITATION,
    VARIANT_DEPENDENT_RED,
)

#: points of [0, 1] probed by the build-time positivity scan
SCAN_GRID = 17

#: smallest |xi(z_l)| accepted at the non-unit characteristic roots
XI_ROOT_TOL = 1e-9


# -- composite PGF surfaces ---------------------------------------------------
#
# The solver machinery only needs eval/deriv/taylor/tail/mean/radius from a
# cycle surface, plus log_eval/dlog_eval when the plain logarithm of the
# evaluated product would wind (large powers do).  Products of slot PGFs and
# support-weighted mixtures cover every variant below.


class ProductPgf:
    """Product of PowerPgf factors, A(z) = prod_i Y_i(z)^{m_i}."""

    def __init__(self, parts):
        self.parts = list(parts)
        if not self.parts:
            raise ConfigError("product surface needs at least one factor")

    @property
    def mean(self):
        return sum(p.mean for p in self.parts)

    @property
    def radius(self):
        return min(p.radius for p in self.parts)

    def eval(self, z):
        out = self.parts[0].eval(z)
        for p in self.parts[1:]:
            out = out * p.eval(z)
        return out

    def deriv(self, z):
        evals = [p.eval(z) for p in self.parts]
        total = np.zeros_like(np.asarray(evals[0], dtype=complex))
        for i, p in enumerate(self.parts):
            term = np.asarray(p.deriv(z), dtype=complex)
            for j, e in enumerate(evals):
                if j != i:
                    term = term * e
            total = total + term
        return total

    def log_eval(self, z):
        # factor-wise logs stay wrap-free where it matters: a power factor
        # logs its base PGF, which keeps clear of the negative reals near
        # the unit circle even when the assembled product winds many times
        out = 0.0
        for p in self.parts:
            if hasattr(p, "model") and hasattr(p, "power"):
                out = out + p.power * np.log(p.model.eval(z))
            else:
                out = out + np.log(p.eval(z))
        return out

    def dlog_eval(self, z):
        out = 0.0
        for p in self.parts:
            if hasattr(p, "model") and hasattr(p, "power"):
                out = out + p.power * p.model.deriv(z) / p.model.eval(z)
            else:
                out = out + p.deriv(z) / p.eval(z)
        return out

    def taylor(self, n):
        out = self.parts[0].taylor(n)
        for p in self.parts[1:]:
            out = np.convolve(out, p.taylor(n))[: n + 1]
        return out

    def tail(self, n):
        # coefficients are probabilities summing to 1, so the mass beyond n
        # is exactly 1 minus the truncated sum
        return max(0.0, 1.0 - float(np.sum(self.taylor(n))))


class MixturePgf:
    """Support-weighted mixture A(z) = sum_j w_j * Y(z)^{m_j} * z^{t_j}."""

    def __init__(self, model: ArrivalModel, powers, shifts, weights):
        self.model = model
        self.powers = [int(m) for m in powers]
        self.shifts = [int(t) for t in shifts]
        self.weights = [float(w) for w in weights]
        if not len(self.powers) == len(self.shifts) == len(self.weights):
            raise ConfigError("mixture components must align")
        if any(m < 0 for m in self.powers) or any(t < 0 for t in self.shifts):
            raise ConfigError("mixture powers and shifts must be non-negative")

    @property
    def mean(self):
        return sum(
            w * (m * self.model.mean + t)
            for w, m, t in zip(self.weights, self.powers, self.shifts)
        )

    @property
    def radius(self):
        return self.model.radius

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        y = self.model.eval(z)
        out = np.zeros_like(y)
        for w, m, t in zip(self.weights, self.powers, self.shifts):
            out = out + w * y**m * z**t
        return out

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        y = self.model.eval(z)
        yp = self.model.deriv(z)
        out = np.zeros_like(y)
        for w, m, t in zip(self.weights, self.powers, self.shifts):
            term = np.zeros_like(y)
            if m > 0:
                term = term + m * y ** (m - 1) * yp * z**t
            if t > 0:
                term = term + t * z ** (t - 1) * y**m
            out = out + w * term
        return out

    def taylor(self, n):
        out = np.zeros(n + 1)
        for w, m, t in zip(self.weights, self.powers, self.shifts):
            if t > n:
                continue
            out[t:] += w * self.model.power_taylor(m, n - t)
        return out

    def tail(self, n):
        total = 0.0
        for w, m, t in zip(self.weights, self.powers, self.shifts):
            total += w * (1.0 if t > n else self.model.power_tail(m, n - t))
        return total

    def sample(self, rng, size):
        """Draw totals: pick a component by weight, then sum m_j slot draws plus t_j."""
        n = int(np.prod(size)) if not np.isscalar(size) else int(size)
        comp = rng.choice(len(self.weights), size=n, p=self.weights)
        out = np.zeros(n, dtype=np.int64)
        for j, (m, t) in enumerate(zip(self.powers, self.shifts)):
            mask = comp == j
            cnt = int(mask.sum())
            if cnt == 0:
                continue
            vals = PowerPgf(self.model, m).sample(rng, cnt) if m > 0 else np.zeros(cnt, dtype=np.int64)
            out[mask] = vals + t
        return out.reshape(size) if not np.isscalar(size) else out


class SlotCompositePgf:
    """Per-slot composite B(z) = Y(z) * (1 - p + p z).

    The linear factor thins one departure per slot: with probability p the
    head vehicle hesitates and re-joins, which acts like one extra arrival.
    """

    def __init__(self, model: ArrivalModel, p: float):
        self.model = model
        self.p = float(p)

    @property
    def mean(self):
        return self.model.mean + self.p

    @property
    def radius(self):
        return self.model.radius

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        return self.model.eval(z) * (1.0 - self.p + self.p * z)

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        lin = 1.0 - self.p + self.p * z
        return self.model.deriv(z) * lin + self.p * self.model.eval(z)

    def jet(self, base, order):
        yj = self.model.jet(base, order)
        lin = np.zeros(order + 1, dtype=complex)
        lin[0] = 1.0 - self.p + self.p * base
        if order >= 1:
            lin[1] = self.p
        return (Jet(yj) * Jet(lin)).coef


# -- normalization functions ---------------------------------------------------


class XiLinear:
    """xi(z) = slope * (z - 1)."""

    def __init__(self, slope: float):
        if slope == 0.0:
            raise ConfigError("normalization slope must be non-zero")
        self.slope = float(slope)

    def eval(self, z):
        return self.slope * (np.asarray(z, dtype=complex) - 1.0)

    def jet(self, base, order):
        out = np.zeros(order + 1, dtype=complex)
        out[0] = self.slope * (base - 1.0)
        if order >= 1:
            out[1] = self.slope
        return out

    @property
    def deriv1(self):
        return self.slope


class XiZMinusB:
    """xi(z) = z - B(z) for a slot surface B with B'(1) < 1."""

    def __init__(self, bsurf):
        self.bsurf = bsurf

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        return z - self.bsurf.eval(z)

    def jet(self, base, order):
        out = -np.asarray(self.bsurf.jet(base, order), dtype=complex)
        out[0] += base
        if order >= 1:
            out[1] += 1.0
        return out

    @property
    def deriv1(self):
        return 1.0 - float(np.real(self.bsurf.deriv(1.0)))


# -- instances -----------------------------------------------------------------


@dataclass(frozen=True)
class VariantParams:
    """Parameters selecting and configuring one generalized variant.

    variant: one of right_turn, interrupted, hesitation, dependent_red.
    p: hesitation probability (hesitation only), 0 <= p < 1.
    phase_pmf: interrupted only; {(red, green): prob} over realized phase
        lengths within one cycle, greens all positive.
    red_arrivals: dependent_red only; PGF surface of the red-period total.
    """

    variant: str
    p: Optional[float] = None
    phase_pmf: Optional[dict] = None
    red_arrivals: Optional[object] = None

    @classmethod
    def right_turn(cls):
        return cls(variant=VARIANT_RIGHT_TURN)

    @classmethod
    def interrupted(cls, phase_pmf):
        return cls(variant=VARIANT_INTERRUPTED, phase_pmf=dict(phase_pmf))

    @classmethod
    def hesitation(cls, p):
        return cls(variant=VARIANT_HESITATION, p=float(p))

    @classmethod
    def dependent_red(cls, red_arrivals):
        missing = [
            attr for attr in ("eval", "taylor", "mean")
            if not hasattr(red_arrivals, attr)
        ]
        if missing:
            raise ConfigError(
                "dependent_red needs a pgf surface exposing eval/taylor/mean, "
                f"got {type(red_arrivals).__name__}"
            )
        return cls(variant=VARIANT_DEPENDENT_RED, red_arrivals=red_arrivals)


@dataclass(frozen=True, eq=False)
class GeneralizedInstance:
    """A generalized cycle: g opportunities, slot surface B, cycle surface A,
    normalization xi.  ``contour`` is filled by validation."""

    g: int
    b: object
    a: object
    xi: object
    variant: str = VARIANT_CUSTOM
    base: Optional[FctlInstance] = None
    params: Optional[VariantParams] = None
    contour: Optional[analytic.ContourSpec] = field(default=None, compare=False)

    def validated(self):
        if self.contour is None:
            spec = validate_generalized(self)
            object.__setattr__(self, "contour", spec)
        return self


def build_variant(base: FctlInstance, params: VariantParams) -> GeneralizedInstance:
    """Assemble and validate the generalized instance for one variant."""
    y = base.arrivals
    c = base.c
    g = base.g

    if params.variant == VARIANT_RIGHT_TURN:
        # a right-turning head vehicle departs even in red; the cycle keeps
        # standard arrivals but the boundary normalization pivots on Y(0)
        gi = GeneralizedInstance(
            g=g,
            b=y,
            a=PowerPgf(y, c),
            xi=XiLinear(y.y0),
            variant=params.variant,
            base=base,
            params=params,
        )

    elif params.variant == VARIANT_INTERRUPTED:
        if not params.phase_pmf:
            raise ConfigError("interrupted variant needs a phase pmf")
        pairs = sorted(params.phase_pmf.items())
        weights = [float(w) for _, w in pairs]
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise ConfigError("phase pmf weights must be a distribution")
        reds = [int(rg[0]) for rg, _ in pairs]
        greens = [int(rg[1]) for rg, _ in pairs]
        if any(r < 0 for r in reds) or any(gr <= 0 for gr in greens):
            raise ConfigError("phase lengths need red >= 0 and green >= 1")
        big_g = max(greens)
        # unused opportunities of a short green pad the cycle surface by
        # plain z powers: they pass the queue through untouched
        gi = GeneralizedInstance(
            g=big_g,
            b=y,
            a=MixturePgf(
                y,
                powers=[r + gr for r, gr in zip(reds, greens)],
                shifts=[big_g - gr for gr in greens],
                weights=weights,
            ),
            xi=XiZMinusB(y),
            variant=params.variant,
            base=base,
            params=params,
        )

    elif params.variant == VARIANT_HESITATION:
        if params.p is None or not 0.0 <= params.p < 1.0:
            raise ConfigError("hesitation probability must lie in [0, 1)")
        bsurf = SlotCompositePgf(y, params.p)
        bern = ArrivalModel.bernoulli(params.p) if params.p > 0.0 else None
        if bern is None:
            asurf = PowerPgf(y, c)
        else:
            asurf = ProductPgf([PowerPgf(y, c), PowerPgf(bern, g)])
        gi = GeneralizedInstance(
            g=g,
            b=bsurf,
            a=asurf,
            xi=XiZMinusB(bsurf),
            variant=params.variant,
            base=base,
            params=params,
        )

    elif params.variant == VARIANT_DEPENDENT_RED:
        red = params.red_arrivals
        if red is None:
            raise ConfigError("dependent_red variant needs the red-period PGF")
        if isinstance(red, ArrivalModel):
            red = PowerPgf(red, 1)
        gi = GeneralizedInstance(
            g=g,
            b=y,
            a=ProductPgf([red, PowerPgf(y, g)]),
            xi=XiZMinusB(y),
            variant=params.variant,
            base=base,
            params=params,
        )

    else:
        raise ConfigError(f"unknown variant {params.variant!r}")

    return gi.validated()


def validate_generalized(gi: GeneralizedInstance) -> analytic.ContourSpec:
    """Check the admissibility conditions; returns the contour to use.

    Raises StabilityError when a drift condition fails, ConfigError when a
    normalization condition fails, the contour machinery's own errors when
    no valid circle exists.
    """
    bmean = float(np.real(gi.b.deriv(1.0)))
    if not bmean < 1.0:
        raise StabilityError(
            f"unstable generalized instance: B'(1) = {bmean:g} must be strictly below 1"
        )
    amean = float(np.real(gi.a.deriv(1.0)))
    if not amean < gi.g:
        raise StabilityError(
            f"unstable generalized instance: A'(1) = {amean:g} must be strictly below g = {gi.g}"
        )

    xi1 = complex(np.asarray(gi.xi.eval(1.0), dtype=complex).reshape(()))
    if abs(xi1) > 1e-12:
        raise ConfigError(f"normalization must vanish at 1, got |xi(1)| = {abs(xi1):g}")
    if abs(gi.xi.deriv1) < 1e-12:
        raise ConfigError("normalization slope xi'(1) vanishes")

    spec = _choose_contour_core(gi.g, gi.b, gi.a)

    # the non-unit characteristic roots must keep clear of the zeros of xi,
    # otherwise the kernel's poles collide with the normalization
    n = default_truncation(gi.g, gi.g + int(math.ceil(amean)))
    rootset = find_roots_surface(gi.g, gi.a, n)
    inner = rootset.roots[1:]
    if len(inner):
        gap = np.abs(np.asarray(gi.xi.eval(inner), dtype=complex))
        if float(gap.min()) <= XI_ROOT_TOL:
            worst = inner[int(gap.argmin())]
            raise ConfigError(
                f"normalization vanishes at a characteristic root ({worst:.6g})"
            )

    _positivity_scan(gi, spec)
    return spec


def _positivity_scan(gi: GeneralizedInstance, spec):
    """Verify the log argument stays principal-branch safe for z across
    [0, 1] on the initial quadrature nodes."""
    nodes = spec.radius * np.exp(2j * np.pi * np.arange(spec.nodes) / spec.nodes)
    b_nodes = gi.b.eval(nodes)
    zs = np.linspace(0.0, 1.0, SCAN_GRID)
    bz = gi.b.eval(zs)
    q = (zs[:, None] * b_nodes[None, :] - nodes[None, :] * bz[:, None]) / (
        b_nodes[None, :] - nodes[None, :]
    )
    _check_principal_rows(q)


# -- evaluation ----------------------------------------------------------------


class GeneralizedSolution:
    """Contour evaluation for one generalized instance."""

    def __init__(self, gi: GeneralizedInstance, quad_tol=analytic.QUAD_TOL,
                 quad_rtol=1e-12):
        self.gi = gi.validated()
        self.spec = self.gi.contour
        self.quad_tol = quad_tol
        self.quad_rtol = quad_rtol
        self._cache = {}

    def _nodes(self, z):
        n = len(z)
        hit = self._cache.get(n)
        if hit is not None:
            return hit
        g = self.gi.g
        b = self.gi.b.eval(z)
        a = self.gi.a.eval(z)
        ap = self.gi.a.deriv(z)
        kernel = (g * z ** (g - 1) - ap) / (z**g - a)
        data = {"b": b, "kernel": kernel}
        self._cache[n] = data
        return data

    # -- PGF ------------------------------------------------------------------

    def eval_pgf(self, w):
        """X(w) for scalar or array w inside the contour; branch validity is
        checked per node and evaluation near 1 goes through the local
        series, where the removable factors cancel."""
        w_arr = np.atleast_1d(np.asarray(w, dtype=complex))
        if np.any(np.abs(w_arr) >= self.spec.radius):
            raise ContourValidityError(
                f"PGF evaluation needs |w| < {self.spec.radius:g}"
            )
        out = np.empty(w_arr.shape, dtype=complex)
        near = np.abs(w_arr - 1.0) < 1e-6
        if np.any(near):
            jet = self.eval_pgf_jet(1.0, 2)
            dw = w_arr[near] - 1.0
            vals = jet.coef[0] + jet.coef[1] * dw + jet.coef[2] * dw * dw
            vals[dw == 0.0] = 1.0
            out[near] = vals
        if np.any(~near):
            rest = w_arr[~near]
            chunk = max(1, 2**21 // max(self.spec.nodes, 1024))
            vals = np.empty(rest.shape, dtype=complex)
            for i in range(0, len(rest), chunk):
                vals[i : i + chunk] = self._eval_chunk(rest[i : i + chunk])
            out[~near] = vals
        return out[0] if np.ndim(w) == 0 else out

    def _eval_chunk(self, w):
        bw = self.gi.b.eval(w)

        def f(z):
            d = self._nodes(z)
            q = (w[:, None] * d["b"][None, :] - z[None, :] * bw[:, None]) / (
                d["b"][None, :] - z[None, :]
            )
            _check_principal_rows(q)
            return np.log(q) * d["kernel"][None, :]

        integral = circle_quadrature(
            f, self.spec.radius, n0=self.spec.nodes, tol=self.quad_tol, rtol=self.quad_rtol
        )
        return np.exp(integral) * self._prefactor(w, bw)

    def _prefactor(self, w, bw):
        xiw = np.asarray(self.gi.xi.eval(w), dtype=complex)
        bmean = float(np.real(self.gi.b.deriv(1.0)))
        return (1.0 - bmean) / (w - bw) * xiw / self.gi.xi.deriv1

    # -- series in w ------------------------------------------------------------

    def eval_pgf_jet(self, base, order):
        """Jet of X about a real base in [0, 1]."""
        if not 0.0 <= base <= 1.0:
            raise ContourValidityError("series expansion bases must lie in [0, 1]")
        at_one = abs(base - 1.0) < 1e-12
        inner = order + 1 if at_one else order
        if inner > MAX_ORDER:
            raise ValueError(f"jet order {order} exceeds cap {MAX_ORDER - int(at_one)}")
        bjet = np.asarray(self.gi.b.jet(complex(base), inner), dtype=complex)

        def f(z):
            d = self._nodes(z)
            u = np.zeros((inner + 1, len(z)), dtype=complex)
            u[0] = base * d["b"] - z * bjet[0]
            if inner >= 1:
                u[1] = d["b"] - z * bjet[1]
            for j in range(2, inner + 1):
                u[j] = -z * bjet[j]
            q = u / (d["b"] - z)[None, :]
            _check_principal_rows(q[:1])
            lq = Jet(q).log()
            return lq.coef * d["kernel"][None, :]

        fjet = circle_quadrature(
            f, self.spec.radius, n0=self.spec.nodes, tol=self.quad_tol, rtol=self.quad_rtol
        )
        expo = Jet(fjet).exp()
        if at_one:
            expo = expo.truncate(order)

        # prefactor (1 - B'(1)) / (w - B(w)) * xi(w) / xi'(1) as a jet; at
        # base 1 both xi and w - B(w) vanish, so divide the shifted series
        xi = Jet(np.asarray(self.gi.xi.jet(complex(base), inner), dtype=complex))
        den = -Jet(bjet)
        den.coef[0] += base
        if inner >= 1:
            den.coef[1] += 1.0
        if at_one:
            xi = xi.shift_down(1)
            den = den.shift_down(1)
        bmean = float(np.real(self.gi.b.deriv(1.0)))
        scale = (1.0 - bmean) / self.gi.xi.deriv1
        pf = (xi / den) * scale
        return expo * pf

    # -- reductions ---------------------------------------------------------------

    def mean_overflow(self):
        jet = self.eval_pgf_jet(1.0, 1)
        return _real(jet.coef[1], 1e-10, "generalized mean")

    def variance_overflow(self):
        jet = self.eval_pgf_jet(1.0, 2)
        c1, c2 = jet.coef[1].real, jet.coef[2].real
        return 2.0 * c2 + c1 - c1**2

    def prob_empty(self):
        return float(self.eval_pgf_jet(0.0, 0).coef[0].real)

    def pmf_overflow(self, kmax=None, tail_target=1e-9):
        """Overflow pmf; series propagation while it suffices, Fourier
        inversion beyond (subject to the branch checks on the circle)."""
        if kmax is not None:
            if kmax <= JET_PMF_MAX:
                jet = self.eval_pgf_jet(0.0, kmax)
                return QueueDistribution(_clean_pmf(jet.coef))
            coef, imag_max = invert_pgf(self.eval_pgf, kmax)
            if imag_max > 1e-9:
                raise SolverError(f"pmf inversion left imaginary mass {imag_max:g}")
            return QueueDistribution(_clean_pmf(coef))

        jet = self.eval_pgf_jet(0.0, JET_PMF_MAX)
        pmf = np.maximum(jet.coef.real, 0.0)
        csum = np.cumsum(pmf)
        hit = np.nonzero(csum > 1.0 - tail_target)[0]
        if len(hit):
            return QueueDistribution(_clean_pmf(jet.coef[: hit[0] + 1]))
        k = 2 * JET_PMF_MAX
        while k <= 2**14:
            coef, imag_max = invert_pgf(self.eval_pgf, k)
            if imag_max > 1e-9:
                raise SolverError(f"pmf inversion left imaginary mass {imag_max:g}")
            csum = np.cumsum(np.maximum(coef, 0.0))
            hit = np.nonzero(csum > 1.0 - tail_target)[0]
            if len(hit):
                return QueueDistribution(_clean_pmf(coef[: hit[0] + 1]))
            k *= 2
        raise SolverError("pmf tail did not close below the target by k = 2^14")


def solve_generalized(gi: GeneralizedInstance, **kwargs) -> GeneralizedSolution:
    return GeneralizedSolution(gi, **kwargs)


def eval_generalized_pgf(gi: GeneralizedInstance, z):
    """One-shot X(z); build a GeneralizedSolution for repeated evaluation."""
    return GeneralizedSolution(gi).eval_pgf(z)


# -- bulk service ----------------------------------------------------------------


class BulkSolution:
    """Transform of the bulk-service queue: g departures at once, cycle
    arrivals A.  Dominates the fixed-cycle overflow; exact for Bernoulli
    slot arrivals."""

    def __init__(self, g: int, apgf, quad_tol=analytic.QUAD_TOL, quad_rtol=1e-12):
        amean = float(np.real(apgf.deriv(1.0)))
        if not amean < g:
            raise StabilityError(
                f"unstable bulk queue: A'(1) = {amean:g} must be strictly below g = {g}"
            )
        self.g = int(g)
        self.apgf = apgf
        self.quad_tol = quad_tol
        self.quad_rtol = quad_rtol
        r0, capped = analytic.outer_real_root(g, apgf)
        radius = 1.0 + analytic.ETA * (r0 - 1.0)
        av = float(np.real(apgf.eval(radius))) / radius**g
        if not av < 1.0:
            raise ContourValidityError(
                f"bulk contour radius {radius} violates validity: A/rho^g = {av:g}"
            )
        self.spec = analytic.ContourSpec(
            radius=radius, nodes=256, epsilon_budget=r0 - 1.0,
            t0=math.inf, r0=r0, r0_capped=capped,
        )
        self._cache = {}

    def _nodes(self, z):
        n = len(z)
        hit = self._cache.get(n)
        if hit is not None:
            return hit
        a = self.apgf.eval(z)
        ap = self.apgf.deriv(z)
        kernel = (self.g * z ** (self.g - 1) - ap) / (z**self.g - a)
        self._cache[n] = kernel
        return kernel

    def eval_pgf(self, w):
        w_arr = np.atleast_1d(np.asarray(w, dtype=complex))
        if np.any(np.abs(w_arr) >= self.spec.radius):
            raise ContourValidityError(
                f"PGF evaluation needs |w| < {self.spec.radius:g}"
            )
        out = np.empty(w_arr.shape, dtype=complex)
        one = np.abs(w_arr - 1.0) < 5e-16
        out[one] = 1.0

        if np.any(~one):
            rest = w_arr[~one]

            def f(z):
                kernel = self._nodes(z)
                q = (rest[:, None] - z[None, :]) / (1.0 - z[None, :])
                _check_principal_rows(q)
                return np.log(q) * kernel[None, :]

            integral = circle_quadrature(
                f, self.spec.radius, n0=self.spec.nodes,
                tol=self.quad_tol, rtol=self.quad_rtol,
            )
            out[~one] = np.exp(integral)
        return out[0] if np.ndim(w) == 0 else out

    def eval_pgf_jet(self, base, order):
        if order > MAX_ORDER:
            raise ValueError(f"jet order {order} exceeds cap {MAX_ORDER}")
        if not 0.0 <= base <= 1.0:
            raise ContourValidityError("series expansion bases must lie in [0, 1]")

        def f(z):
            kernel = self._nodes(z)
            u = np.zeros((order + 1, len(z)), dtype=complex)
            u[0] = (base - z) / (1.0 - z)
            if order >= 1:
                u[1] = 1.0 / (1.0 - z)
            _check_principal_rows(u[:1])
            lq = Jet(u).log()
            return lq.coef * kernel[None, :]

        fjet = circle_quadrature(
            f, self.spec.radius, n0=self.spec.nodes, tol=self.quad_tol, rtol=self.quad_rtol
        )
        return Jet(fjet).exp()

    def mean_overflow(self):
        jet = self.eval_pgf_jet(1.0, 1)
        return _real(jet.coef[1], 1e-10, "bulk mean")


def bulk_service_pgf(g: int, apgf, w):
    """X_b(w) of the bulk-service queue with cycle arrivals A."""
    return BulkSolution(g, apgf).eval_pgf(w)


def bulk_service_mean(g: int, apgf):
    return BulkSolution(g, apgf).mean_overflow()
