"""Shared analytic machinery: special functions, contour selection, quadrature.

The contour-integral solvers integrate over a circle |z| = radius with
1 < radius, where the radius must stay inside two limits derived from the
arrival PGF:

* the injectivity radius t0, the largest t such that w -> Y(w)/w is
  one-to-one on |w| < t (equivalently the first zero of t*Y'(t) - Y(t),
  which is negative at t = 1 and strictly increasing for PGFs);
* the smallest real root R0 > 1 of z^g = A(z), the first singularity of the
  queue PGF beyond the closed unit disk.

``choose_contour`` places the circle halfway into the admissible budget.
``circle_quadrature`` is the trapezoid rule on that circle with doubling
refinement; for integrands analytic in an annulus around the circle it
converges geometrically, and the doubling stops once two successive
estimates agree to ``tol`` absolutely.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ContourValidityError, QuadratureError, SolverError

#: hard cap on any contour-selection scan along the real axis
RADIUS_CAP = 10.0
#: fraction of the admissible budget used by choose_contour
ETA = 0.5
#: absolute tolerance for quadrature refinement
QUAD_TOL = 1e-12
#: node-count ceiling for quadrature refinement
MAX_NODES = 2**20
#: imaginary parts below this (for quantities known real) are discarded
IMAG_TOL = 1e-9


def lambert_w(x):
    """Principal branch of the Lambert W function, w * exp(w) = x.

    Accepts scalars or arrays, real or complex. Wraps the library evaluation
    and polishes with one Halley step; the relative residual is verified to
    1e-13. Real input >= -1/e gives real output.
    """
    arr = np.asarray(x)
    scalar = arr.ndim == 0
    z = arr.astype(complex)
    with np.errstate(all="ignore"):
        w = special.lambertw(z, k=0)

        # At the branch point -1/e the library value can be NaN; the series
        # W(-1/e + d) = -1 + p - p^2/3 + ..., p = sqrt(2(e*z + 1)), covers it.
        near_branch = np.abs(z + 1.0 / math.e) < 1e-10
        if np.any(near_branch):
            p = np.sqrt(2.0 * (math.e * z + 1.0))
            w = np.where(near_branch, -1.0 + p - p**2 / 3.0, w)

        # Halley polish; skip near the branch point where w + 1 ~ 0.
        ew = np.exp(w)
        fw = w * ew - z
        denom = ew * (w + 1.0) - (w + 2.0) * fw / (2.0 * w + 2.0)
        safe = (np.abs(w + 1.0) > 1e-8) & ~near_branch
        w = np.where(safe, w - fw / np.where(safe, denom, 1.0), w)

    resid = np.abs(w * np.exp(w) - z)
    scale = np.maximum(np.abs(z), 1e-300)
    bad = resid > 1e-13 * np.maximum(scale, 1.0)
    if np.any(bad & ~near_branch):
        worst = float(np.max(resid / np.maximum(scale, 1.0)))
        raise SolverError(f"lambert_w residual {worst:g} above 1e-13")

    if np.isrealobj(arr) and np.all(np.abs(w.imag) < 1e-13):
        w = w.real
    return w[()] if scalar else w


def injectivity_radius(pgf, *, scan_cap=1e6, xtol=1e-13):
    """Largest t with w -> pgf(w)/w injective on |w| < t.

    Returns the first root of h(t) = t*pgf'(t) - pgf(t) beyond 1, or
    ``pgf.radius`` (possibly inf) when h stays negative over the whole
    scannable range. h(1) = E - 1 < 0 always; h is strictly increasing for
    PGFs, so a sign change brackets the unique root.
    """

    def h(t):
        return float(t * pgf.deriv(t).real - pgf.eval(t).real)

    radius = pgf.radius
    limit = min(scan_cap, radius * (1.0 - 1e-9) if math.isfinite(radius) else scan_cap)

    lo, hi = 1.0, None
    t = min(2.0, limit)
    while True:
        if h(t) > 0.0:
            hi = t
            break
        lo = t
        if t >= limit:
            return radius
        t = min(t * 2.0, limit)

    while hi - lo > xtol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def outer_real_root(g, apgf, *, cap=RADIUS_CAP, xtol=1e-13):
    """Smallest real root beyond 1 of D(t) = t^g - A(t).

    Returns ``(root, capped)``. When D has no sign change up to
    min(cap, radius of A), the scan limit is returned with ``capped=True``;
    the contour machinery only needs a point where D is still positive.
    """
    radius = apgf.radius
    limit = min(cap, radius * (1.0 - 1e-9) if math.isfinite(radius) else cap)

    def d(t):
        with np.errstate(over="ignore"):
            return float(t) ** g - float(np.real(apgf.eval(float(t))))

    start = 1.0 + 1e-9
    if not d(start) > 0.0:
        raise SolverError(
            "z^g - A(z) is not positive just beyond 1; instance too close to critical"
        )

    # fine steps first so near-critical roots are not skipped, coarser after
    grid = [start]
    t = 1.0 + 1e-6
    while t < min(1.05, limit):
        grid.append(t)
        t *= 1.001
    while t < limit:
        grid.append(t)
        t *= 1.02
    grid.append(limit)

    prev_t, prev_d = grid[0], d(grid[0])
    bracket = None
    for t in grid[1:]:
        cur = d(t)
        if prev_d > 0.0 >= cur:
            bracket = (prev_t, t)
            break
        prev_t, prev_d = t, cur
    if bracket is None:
        return limit, True

    lo, hi = bracket
    while hi - lo > xtol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if d(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False


@dataclass(frozen=True)
class ContourSpec:
    """Circle used by the contour quadratures, with its derivation data."""

    radius: float
    nodes: int
    epsilon_budget: float
    t0: float
    r0: float
    r0_capped: bool


def contour_budget(g, bpgf, apgf):
    """Admissible budget min(t0, R0) for a cycle with PGFs B (slot) and A (cycle)."""
    t0 = injectivity_radius(bpgf)
    t0_eff = min(t0, bpgf.radius * (1.0 - 1e-9), RADIUS_CAP)
    r0, capped = outer_real_root(g, apgf)
    return t0, t0_eff, r0, capped


def choose_contour(instance, nodes=256):
    """Contour for a standard instance: radius halfway into min(t0, R0) - 1."""
    return _choose_contour_core(instance.g, instance.arrivals, instance.a, nodes)


def _choose_contour_core(g, bpgf, apgf, nodes=256):
    t0, t0_eff, r0, capped = contour_budget(g, bpgf, apgf)
    budget = min(t0_eff, r0)
    if not budget > 1.0 + 1e-12:
        raise SolverError(f"contour budget {budget} leaves no room beyond the unit circle")
    radius = 1.0 + ETA * (budget - 1.0)

    yv = float(np.real(bpgf.eval(radius))) / radius
    av = float(np.real(apgf.eval(radius))) / radius**g
    if not (yv < 1.0 and av < 1.0):
        raise ContourValidityError(
            f"contour radius {radius} violates validity: Y/rho={yv:g}, A/rho^g={av:g}"
        )
    return ContourSpec(
        radius=radius, nodes=nodes, epsilon_budget=budget - 1.0, t0=t0, r0=r0, r0_capped=capped
    )


def circle_quadrature(
    f, radius, *, n0=256, tol=QUAD_TOL, rtol=0.0, max_nodes=MAX_NODES, return_history=False
):
    """(1/2*pi*i) times the contour integral of f over |z| = radius.

    ``f`` receives the complex nodes as one array and must return values with
    the node axis last; vector-valued integrands are refined jointly, with
    convergence measured as the max absolute difference between successive
    estimates. Doubles the node count from ``n0`` until two estimates agree
    to ``tol + rtol * |est|``; raises :class:`QuadratureError` (carrying both
    estimates) beyond ``max_nodes``. The default is purely absolute; callers
    whose integrals grow large (near-saturation instances reach magnitudes
    around 1e2 with integrand peaks around 1e4, putting float noise above
    1e-12 absolute) pass ``rtol``.
    """
    n = int(n0)
    prev = None
    history = []
    while n <= max_nodes:
        theta = 2.0 * np.pi * np.arange(n) / n
        z = radius * np.exp(1j * theta)
        vals = np.asarray(f(z))
        est = np.sum(vals * z, axis=-1) / n
        if prev is not None:
            delta = float(np.max(np.abs(est - prev)))
            history.append((n, est, delta))
            if delta < tol + rtol * float(np.max(np.abs(est))):
                return (est, history) if return_history else est
        else:
            history.append((n, est, None))
        prev = est
        n *= 2
    raise QuadratureError(
        f"quadrature did not converge below {tol} within {max_nodes} nodes",
        last=prev,
        prev=history[-2][1] if len(history) > 1 else None,
        nodes=n // 2,
    )


def invert_pgf(pgf, kmax, *, min_nodes=4096, max_nodes=2**16):
    """Coefficients c_0..c_kmax of a PGF analytic on the closed unit disk.

    Samples the PGF on a circle of radius slightly below 1 and inverts with
    an FFT. The radius is tied to kmax so that the rho^-k rescaling inflates
    float noise by at most ~1e3; aliasing is controlled by taking at least
    4*kmax nodes.

    Returns ``(coeffs, imag_max)``; negative float dust is the caller's
    business.
    """
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    m = min_nodes
    while m < 4 * (kmax + 1):
        m *= 2
    if m > max_nodes:
        raise SolverError(f"pmf inversion needs {m} nodes, above the cap {max_nodes}")
    rho = min(0.999, math.exp(-math.log(1e3) / max(kmax, 8)))
    w = rho * np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.asarray(pgf(w), dtype=complex)
    coef = (np.fft.fft(vals) / m)[: kmax + 1]
    coef = coef * rho ** -np.arange(kmax + 1, dtype=float)
    imag_max = float(np.max(np.abs(coef.imag))) if kmax >= 0 else 0.0
    return coef.real.copy(), imag_max
