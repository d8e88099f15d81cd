"""Contour-integral solver backend.

The overflow-queue PGF is computed as the exponential of a single contour
integral over a circle |z| = radius with 1 < radius < min(t0, R0); no
root-finding is involved, which makes this backend an independent check of
the root-based one.

Two integrand forms are available:

* ``full_disk`` (default): valid for every w inside the contour,
  exp of the integral of
  [(Y'(z)z - Y(z)) / (z - Y(z))] * [(w - Y(w)) / (z Y(w) - w Y(z))]
  * ln(1 - A(z)/z^g).
  On the contour |A(z)/z^g| < 1, so 1 - A/z^g has positive real part and the
  principal log is safe unconditionally.
* ``log_kernel``: exp of the integral of
  ln((w Y(z) - z Y(w)) / (Y(z) - z)) * (z^g - A(z))' / (z^g - A(z)).
  Its principal-branch validity is only guaranteed for w near [0, 1]; the
  evaluation guards itself with per-node branch checks and raises
  :class:`ContourValidityError` outside.

Derivatives (moments, pmf entries) come from propagating a truncated power
series in w through the log_kernel integrand, whose branch checks always
pass for bases in [0, 1].
"""

import logging

import numpy as np

from . import analytic
from .analytic import choose_contour, circle_quadrature, invert_pgf
from .arrivals import FctlInstance
from .classic import QueueDistribution, _clean_pmf
from .errors import ContourValidityError, CrossCheckError, SolverError
from .series import MAX_ORDER, Jet

logger = logging.getLogger(__name__)

FORM_FULL_DISK = "full_disk"
FORM_LOG_KERNEL = "log_kernel"

#: largest pmf index computed through series propagation before switching to
#: Fourier inversion of the PGF
JET_PMF_MAX = 24


class ContourSolution:
    """Contour-based solution for one instance; caches per-node data."""

    def __init__(self, instance: FctlInstance, spec=None, quad_tol=analytic.QUAD_TOL,
                 quad_rtol=1e-12):
        self.instance = instance
        self.spec = spec if spec is not None else choose_contour(instance)
        self.quad_tol = quad_tol
        self.quad_rtol = quad_rtol
        self._cache = {}

    # -- node data -----------------------------------------------------------

    def _nodes(self, z):
        """Static per-node quantities, cached by node count."""
        n = len(z)
        hit = self._cache.get(n)
        if hit is not None:
            return hit
        model = self.instance.arrivals
        g = self.instance.g
        y = model.eval(z)
        yp = model.deriv(z)
        a = self.instance.a.eval(z)
        ap = self.instance.a.deriv(z)
        kden = z**g - a
        kernel = (g * z ** (g - 1) - ap) / kden
        data = {"y": y, "yp": yp, "a": a, "ap": ap, "kernel": kernel}
        self._cache[n] = data
        return data

    # -- PGF evaluation --------------------------------------------------------

    def eval_pgf(self, w, form=FORM_FULL_DISK):
        """X(w) for scalar or array w with |w| < contour radius."""
        w_arr = np.atleast_1d(np.asarray(w, dtype=complex))
        if np.any(np.abs(w_arr) >= self.spec.radius):
            raise ContourValidityError(
                f"PGF evaluation needs |w| < {self.spec.radius:g}"
            )
        out = np.empty(w_arr.shape, dtype=complex)
        chunk = max(1, 2**21 // max(self.spec.nodes, 1024))
        for i in range(0, len(w_arr), chunk):
            out[i : i + chunk] = self._eval_chunk(w_arr[i : i + chunk], form)
        return out[0] if np.ndim(w) == 0 else out

    def _eval_chunk(self, w, form):
        model = self.instance.arrivals
        g = self.instance.g
        yw = model.eval(w)

        if form == FORM_FULL_DISK:

            def f(z):
                d = self._nodes(z)
                base = (d["yp"] * z - d["y"]) / (z - d["y"])
                lg = np.log(1.0 - d["a"] / z**g)
                den = z[None, :] * yw[:, None] - w[:, None] * d["y"][None, :]
                return base[None, :] * lg[None, :] * ((w - yw)[:, None] / den)

        elif form == FORM_LOG_KERNEL:

            def f(z):
                d = self._nodes(z)
                q = (w[:, None] * d["y"][None, :] - z[None, :] * yw[:, None]) / (
                    d["y"][None, :] - z[None, :]
                )
                _check_principal_rows(q)
                return np.log(q) * d["kernel"][None, :]

        else:
            raise ValueError(f"unknown integrand form {form!r}")

        integral = circle_quadrature(
            f, self.spec.radius, n0=self.spec.nodes, tol=self.quad_tol, rtol=self.quad_rtol
        )
        return np.exp(integral)

    # -- series in w ---------------------------------------------------------

    def eval_pgf_jet(self, base, order):
        """Jet of X about ``base`` (real, in [0, 1]); order capped at 64."""
        if order > MAX_ORDER:
            raise ValueError(f"jet order {order} exceeds cap {MAX_ORDER}")
        if not 0.0 <= base <= 1.0:
            raise ContourValidityError("series expansion bases must lie in [0, 1]")
        model = self.instance.arrivals
        ybase = model.jet(complex(base), order)

        def f(z):
            d = self._nodes(z)
            u = np.zeros((order + 1, len(z)), dtype=complex)
            u[0] = base * d["y"] - z * ybase[0]
            if order >= 1:
                u[1] = d["y"] - z * ybase[1]
            for j in range(2, order + 1):
                u[j] = -z * ybase[j]
            q = u / (d["y"] - z)[None, :]
            _check_principal_rows(q[:1])
            lq = Jet(q).log()
            return lq.coef * d["kernel"][None, :]

        fjet = circle_quadrature(f, self.spec.radius, n0=self.spec.nodes, tol=self.quad_tol, rtol=self.quad_rtol)
        return Jet(fjet).exp()

    # -- reductions ------------------------------------------------------------

    def mean_overflow(self):
        """E[X] by direct quadrature of the first-derivative integrand."""
        model = self.instance.arrivals
        mu = model.mean

        def f(z):
            d = self._nodes(z)
            return (d["y"] - z * mu) / (d["y"] - z) * d["kernel"]

        val = circle_quadrature(f, self.spec.radius, n0=self.spec.nodes, tol=self.quad_tol, rtol=self.quad_rtol)
        return _real(val, 1e-10, "mean")

    def variance_overflow(self):
        """Var[X] by direct quadrature, cross-checked against the series route."""
        model = self.instance.arrivals
        vy = model.variance
        ey2 = model.second_moment
        ey = model.mean

        def f(z):
            d = self._nodes(z)
            return (
                (z**2 * vy - z * d["y"] * (1.0 + ey2 - 2.0 * ey))
                / (z - d["y"]) ** 2
                * d["kernel"]
            )

        val = circle_quadrature(f, self.spec.radius, n0=self.spec.nodes, tol=self.quad_tol, rtol=self.quad_rtol)
        direct = _real(val, 1e-10, "variance")

        jet = self.eval_pgf_jet(1.0, 2)
        c1, c2 = jet.coef[1].real, jet.coef[2].real
        via_jet = 2.0 * c2 + c1 - c1**2
        if abs(direct - via_jet) > 1e-8 * max(1.0, abs(direct)):
            raise CrossCheckError(
                f"variance routes disagree: direct {direct!r} vs series {via_jet!r}"
            )
        return direct

    def prob_empty(self):
        return float(self.eval_pgf_jet(0.0, 0).coef[0].real)

    def pmf_overflow(self, kmax=None, tail_target=1e-9):
        """Overflow pmf; series propagation for small supports, Fourier
        inversion of the PGF beyond JET_PMF_MAX."""
        if kmax is not None:
            if kmax <= JET_PMF_MAX:
                pmf = _clean_pmf(self.eval_pgf_jet(0.0, kmax).coef.real)
            else:
                coef, _ = invert_pgf(lambda w: self.eval_pgf(w), kmax)
                pmf = _clean_pmf(coef)
            return QueueDistribution(pmf, tail=max(0.0, 1.0 - float(np.sum(pmf))))

        jet = self.eval_pgf_jet(0.0, JET_PMF_MAX)
        pmf = _clean_pmf(jet.coef.real)
        cum = np.cumsum(pmf)
        hit = np.nonzero(cum > 1.0 - tail_target)[0]
        if len(hit):
            cut = int(hit[0]) + 1
            return QueueDistribution(pmf[:cut], tail=max(0.0, 1.0 - float(cum[cut - 1])))

        k = 2 * JET_PMF_MAX
        while True:
            coef, _ = invert_pgf(lambda w: self.eval_pgf(w), k)
            pmf = _clean_pmf(coef)
            cum = np.cumsum(pmf)
            hit = np.nonzero(cum > 1.0 - tail_target)[0]
            if len(hit):
                cut = int(hit[0]) + 1
                return QueueDistribution(pmf[:cut], tail=max(0.0, 1.0 - float(cum[cut - 1])))
            if k >= 2**14:
                raise SolverError(f"pmf tail target {tail_target} not reached by k={k}")
            k *= 2


def _real(val, tol, what):
    if abs(val.imag) > tol * max(1.0, abs(val)):
        raise SolverError(f"{what} has imaginary residue {val.imag:g}")
    return float(val.real)


def _check_principal_rows(q):
    """Reject rows whose values make the principal log discontinuous along
    the (cyclic) node sequence: zeros, points on the cut, a crossing of the
    negative real axis, or net winding around the origin."""
    mag = np.abs(q)
    if np.any(mag < 1e-300):
        raise ContourValidityError("log argument vanished on the contour")
    if np.any((q.real < 0.0) & (np.abs(q.imag) <= 1e-14 * mag)):
        raise ContourValidityError("log argument landed on the branch cut")

    nxt = np.roll(q, -1, axis=-1)
    im_flip = (np.sign(q.imag) * np.sign(nxt.imag)) < 0
    with np.errstate(invalid="ignore", divide="ignore"):
        t = q.imag / (q.imag - nxt.imag)
    cross_re = q.real + t * (nxt.real - q.real)
    if np.any(im_flip & (cross_re < 0.0)):
        raise ContourValidityError("log argument crosses the branch cut along the contour")

    ang = np.angle(q)
    dif = np.angle(np.exp(1j * (np.roll(ang, -1, axis=-1) - ang)))
    winding = np.abs(np.sum(dif, axis=-1)) / (2.0 * np.pi)
    if np.any(winding > 0.5):
        raise ContourValidityError("log argument winds around the origin on the contour")


# -- module-level op surface -------------------------------------------------


def solve_contour(instance, spec=None):
    """Build a contour solution for the instance."""
    return ContourSolution(instance, spec=spec)


def eval_pgf(sol: ContourSolution, w, form=FORM_FULL_DISK):
    return sol.eval_pgf(w, form=form)


def eval_pgf_jet(sol: ContourSolution, base, order):
    return sol.eval_pgf_jet(base, order)


def mean_overflow(sol: ContourSolution):
    return sol.mean_overflow()


def variance_overflow(sol: ContourSolution):
    return sol.variance_overflow()


def prob_empty(sol: ContourSolution):
    return sol.prob_empty()


def pmf_overflow(sol: ContourSolution, kmax=None, tail_target=1e-9):
    return sol.pmf_overflow(kmax=kmax, tail_target=tail_target)
