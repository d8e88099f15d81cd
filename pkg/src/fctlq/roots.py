"""Root-based solver backend.

The denominator z^g - A(z) of the queue PGF has exactly g roots in the
closed unit disk (counted with the argument principle over a circle between
1 and the first real singularity). For loads well below 1 the non-unit
roots spiral deep into the disk, where both z^g and A(z) are astronomically
small; any absolute residual test is vacuous there, so every acceptance
check in this module is relative to the local scale |z|^g + |A(z)|.

Roots are located by following the root curve: z_k solves
z = zeta^k * A(z)^(1/g), and the multiplicative iteration
z <- z * exp(d/g) with d = (ln A(z) - g ln z) reduced mod 2*pi*i is a
contraction with factor about |z A'(z) / (g A(z))| < 1 for stable
instances. Each index is warm-started from the previous root rotated one
sector, a log-domain Newton pass finishes to machine precision, and
companion-matrix eigenvalues of the truncated polynomial serve as fallback
seeds if the walk ever loses a root. ``certify`` re-derives the count
independently by quadrature, so a returned root set is backed by two routes.

For Poisson arrivals the roots also have a closed form through the Lambert W
function; ``lambert_roots`` provides it as an independent cross-check.
"""

from dataclasses import dataclass

import numpy as np

from .analytic import choose_contour, circle_quadrature, lambert_w
from .arrivals import KIND_POISSON, FctlInstance
from .errors import CertificationError, ConfigError

#: absolute residual bound kept for reporting; vacuous deep in the disk
RESIDUAL_BOUND = 1e-11
#: relative residual |z^g - A(z)| / (|z|^g + |A(z)|) a root must satisfy
REL_RESIDUAL_BOUND = 1e-9
#: roots closer than this are treated as numerically identical
DEDUP_TOL = 1e-8
#: scale below which the relative residual is float noise (both terms of
#: z^g - A(z) subnormal); the fixed-point convergence test stands in for it
SCALE_FLOOR = 1e-280


@dataclass
class RootSet:
    """Roots of z^g = A(z) in the closed unit disk.

    ``roots[0]`` is exactly 1; the rest are sorted by argument, then modulus.
    ``truncation`` records the Taylor order used for the fallback seed
    polynomial and the certification bound.
    """

    roots: np.ndarray
    residuals: np.ndarray
    truncation: int
    certified: bool = False

    @property
    def g(self):
        return len(self.roots)


@dataclass
class CertificationReport:
    """Outcome of the independent root-set checks."""

    count: int
    count_ok: bool
    max_residual: float
    residual_ok: bool
    max_relative: float
    relative_ok: bool
    bound_ok: bool
    bound_margin: float
    pairing_ok: bool
    transform_gap: float
    distinct_ok: bool

    @property
    def passed(self):
        return (
            self.count_ok
            and self.residual_ok
            and self.relative_ok
            and self.bound_ok
            and self.pairing_ok
            and self.distinct_ok
        )


def default_truncation(g, c=None):
    return max(100, 50 + max(g, c if c is not None else g))


def find_roots(instance: FctlInstance, n=None):
    """Locate the g unit-disk roots for a standard instance."""
    if n is None:
        n = default_truncation(instance.g, instance.c)
    return find_roots_surface(instance.g, instance.a, n)


def find_roots_surface(g, apgf, n):
    """Root search against any PGF surface exposing eval/deriv/taylor."""
    last_err = None
    for attempt in range(3):
        n_try = n + 50 * attempt
        try:
            return _find_roots_once(g, apgf, n_try)
        except CertificationError as err:
            last_err = err
    raise last_err


def _log_a(apgf):
    """ln A(z) up to a multiple of 2*pi*i, avoiding A itself underflowing."""
    if hasattr(apgf, "log_eval"):
        return apgf.log_eval
    model = getattr(apgf, "model", None)
    power = getattr(apgf, "power", None)
    if model is not None and power is not None:
        return lambda z: power * np.log(model.eval(z))
    return lambda z: np.log(apgf.eval(z))


def _dlog_a(apgf):
    """A'(z)/A(z), again without forming the possibly-subnormal A."""
    if hasattr(apgf, "dlog_eval"):
        return apgf.dlog_eval
    model = getattr(apgf, "model", None)
    power = getattr(apgf, "power", None)
    if model is not None and power is not None:
        return lambda z: power * model.deriv(z) / model.eval(z)
    return lambda z: apgf.deriv(z) / apgf.eval(z)


def _find_roots_once(g, apgf, n):
    roots, all_ok = _path_follow(g, apgf)
    roots = roots[all_ok]
    roots = roots[_relative_residuals(roots, g, apgf) <= REL_RESIDUAL_BOUND]
    roots = _dedup(roots[np.abs(roots) <= 1.0 + 1e-9])

    if len(roots) != g - 1:
        roots = _companion_fallback(g, apgf, n, roots)

    if len(roots) != g - 1:
        raise CertificationError(
            f"expected {g - 1} non-unit roots, found {len(roots)} (truncation n={n})"
        )

    order = np.lexsort((np.abs(roots), np.angle(roots)))
    roots = np.concatenate(([1.0 + 0.0j], roots[order]))
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        residuals = np.abs(roots**g - apgf.eval(roots))
    residuals[0] = 0.0  # z = 1 satisfies 1 - A(1) = 0 exactly
    rel = _relative_residuals(roots, g, apgf)
    rel[0] = 0.0
    if rel.max() > REL_RESIDUAL_BOUND:
        raise CertificationError(
            f"relative root residual {rel.max():g} above {REL_RESIDUAL_BOUND}"
        )
    return RootSet(roots=roots, residuals=residuals, truncation=n)


def _path_follow(g, apgf, fp_iters=200, newton_iters=40):
    """Walk the root curve index by index.

    Root k solves g*Log(z) = ln A(z) + 2*pi*i*m with an integer branch
    index m; m advances by one per sector and drops by g whenever the
    principal angle wraps past pi, which keeps the equation continuous
    along the curve. All residuals live on the log equation, whose terms
    stay order-one even where z^g itself is subnormal. Each index is
    warm-started from the previous root rotated one sector, pulled in by
    the contraction z <- z*exp(d/g), and finished with damped Newton.
    Returns (roots, converged) for k = 1..g-1.
    """
    log_a = _log_a(apgf)
    dlog_a = _dlog_a(apgf)
    zeta = np.exp(2j * np.pi / g)
    out = np.empty(max(g - 1, 0), dtype=complex)
    ok = np.zeros(max(g - 1, 0), dtype=bool)
    z = 1.0 + 0.0j
    m = 0
    for k in range(1, g):
        seed = z * zeta
        if np.angle(seed) < np.angle(z) - np.pi:
            m += 1 - g
        elif np.angle(seed) > np.angle(z) + np.pi:
            m += 1 + g
        else:
            m += 1
        z = seed

        def residual(w):
            return g * np.log(w) - log_a(w) - 2j * np.pi * m

        prev_ang = np.angle(z)
        for _ in range(fp_iters):
            d = -residual(z)
            if abs(d) < 0.5:
                break
            z_new = z * np.exp(d / g)
            ang = np.angle(z_new)
            if ang < prev_ang - np.pi:
                m -= g
            elif ang > prev_ang + np.pi:
                m += g
            prev_ang = ang
            z = z_new

        good = False
        f = residual(z)
        for _ in range(newton_iters):
            fp = g / z - dlog_a(z)
            if fp == 0 or not np.isfinite(fp):
                break
            step = f / fp
            z_new = z - step
            ang = np.angle(z_new)
            dm = 0
            if ang < prev_ang - np.pi:
                dm = -g
            elif ang > prev_ang + np.pi:
                dm = g
            f_new = residual(z_new) - 2j * np.pi * dm
            for _ in range(8):
                if abs(f_new) <= abs(f) or abs(step) < 1e-16:
                    break
                step = 0.5 * step
                z_new = z - step
                ang = np.angle(z_new)
                dm = 0
                if ang < prev_ang - np.pi:
                    dm = -g
                elif ang > prev_ang + np.pi:
                    dm = g
                f_new = residual(z_new) - 2j * np.pi * dm
            m += dm
            prev_ang = ang
            done = abs(z_new - z) <= 5e-16 * max(abs(z_new), 1e-6)
            z = z_new
            f = residual(z)
            if done and abs(f) < 1e-10 * g:
                good = True
                break
        out[k - 1] = z
        ok[k - 1] = good
    return out, ok


def _companion_fallback(g, apgf, n, keep):
    """Seed from companion-matrix eigenvalues of the truncated polynomial,
    Newton-polish on the exact function, and merge with roots already held.
    Only trustworthy for roots where |z|^g and A(z) are within float range;
    the relative residual filter strips anything that stalled."""
    a = np.asarray(apgf.taylor(n), dtype=float)
    deg = max(n, g)
    d = np.zeros(deg + 1)
    d[: n + 1] = -a
    d[g] += 1.0
    # strip numerically dead high-order coefficients so the companion matrix
    # does not manufacture spurious huge eigenvalues
    top = deg
    while top > g and abs(d[top]) < 1e-300:
        top -= 1
    d = d[: top + 1]

    seeds = np.roots(d[::-1])
    seeds = seeds[np.abs(seeds) <= 1.0 + 1e-6]
    seeds = seeds[np.abs(seeds - 1.0) > DEDUP_TOL]

    refined = _newton_refine(seeds, g, apgf)
    refined = refined[np.abs(refined) <= 1.0 + 1e-9]
    refined = refined[_relative_residuals(refined, g, apgf) <= REL_RESIDUAL_BOUND]
    return _dedup(np.concatenate([keep, refined]))


def _newton_refine(z, g, apgf, max_iter=50):
    z = np.asarray(z, dtype=complex).copy()
    if len(z) == 0:
        return z
    for _ in range(max_iter):
        f = z**g - apgf.eval(z)
        df = g * z ** (g - 1) - apgf.deriv(z)
        df = np.where(np.abs(df) < 1e-300, 1e-300, df)
        step = f / df
        if np.all(np.abs(step) <= 1e-15 * np.maximum(np.abs(z), 1e-6)):
            break
        # damped update: halve steps that do not reduce the residual
        cand = z - step
        fc = np.abs(cand**g - apgf.eval(cand))
        worse = fc > np.abs(f)
        for _ in range(10):
            if not np.any(worse):
                break
            step = np.where(worse, step * 0.5, step)
            cand = z - step
            fc = np.abs(cand**g - apgf.eval(cand))
            worse = worse & (fc > np.abs(f))
        z = cand
    return z


def _relative_residuals(roots, g, apgf):
    """|z^g - A(z)| relative to |z|^g + |A(z)|; zero where that scale is
    below float resolution (the log-form convergence test covers those)."""
    if len(roots) == 0:
        return np.zeros(0)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        zg = roots ** float(g)
        az = apgf.eval(roots)
        scale = np.abs(zg) + np.abs(az)
        rel = np.where(
            scale > SCALE_FLOOR, np.abs(zg - az) / np.maximum(scale, 1e-300), 0.0
        )
    return rel


def _dedup(roots):
    out = []
    for z in roots:
        if all(abs(z - u) > DEDUP_TOL for u in out):
            out.append(z)
    return np.asarray(out, dtype=complex)


def lambert_roots(instance: FctlInstance):
    """Closed-form unit-disk roots for Poisson arrivals via Lambert W."""
    model = instance.arrivals
    if model.kind != KIND_POISSON:
        raise ConfigError("lambert_roots applies to Poisson arrivals only")
    g, c, lam = instance.g, instance.c, model.lam
    if g == 1:
        roots = np.array([1.0 + 0.0j])
    elif lam == 0.0:
        # A(z) = 1: the g-th roots of unity
        k = np.arange(1, g)
        roots = np.exp(2j * np.pi * k / g)
    else:
        k = np.arange(1, g)
        beta = c * lam / g
        arg = -beta * np.exp(2j * np.pi * k / g) * np.exp(-beta)
        roots = -lambert_w(arg) / beta
    if g > 1:
        order = np.lexsort((np.abs(roots), np.angle(roots)))
        roots = np.concatenate(([1.0 + 0.0j], np.asarray(roots, dtype=complex)[order]))
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        residuals = np.abs(roots**g - instance.a.eval(roots))
    residuals[0] = 0.0
    rel = _relative_residuals(roots, g, instance.a)
    rel[0] = 0.0
    if rel.max() > REL_RESIDUAL_BOUND:
        raise CertificationError(f"lambert relative residual {rel.max():g} too large")
    return RootSet(roots=roots, residuals=residuals, truncation=0)


def certify(rootset: RootSet, instance: FctlInstance, spec=None):
    """Independent checks on a root set; sets ``rootset.certified``.

    Checks performed:
      * the argument-principle count of zeros inside the solver contour
        equals g (quadrature of D'/D, no root locations involved);
      * every residual |z^g - A(z)| is below 1e-11 (absolute, reported as
        stated, though trivially satisfied deep in the disk);
      * every residual is below 1e-9 relative to |z|^g + |A(z)|, the check
        with actual teeth for deep roots: an impostor point down there has
        relative residual near 1;
      * the truncated-polynomial bound: |D_n(z_hat)| <= tail_n + residual +
        1e-13 for each root, where tail_n is the mass of A beyond order n
        (the float-valid form of the truncation bound, since
        |D_n| <= |D_n - D| + |D| pointwise);
      * non-real roots appear in conjugate pairs (1e-10 pairing tolerance);
      * the transformed points Y(z_k)/z_k are pairwise distinct (the
        boundary system is a Vandermonde in them).
    """
    if spec is None:
        spec = choose_contour(instance)
    g = instance.g
    apgf = instance.a

    def count_integrand(z):
        return (g * z ** (g - 1) - apgf.deriv(z)) / (z**g - apgf.eval(z))

    raw = circle_quadrature(count_integrand, spec.radius, n0=spec.nodes)
    count = int(round(raw.real))
    count_ok = abs(raw - count) < 1e-6 and count == g

    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        residuals = np.abs(rootset.roots**g - apgf.eval(rootset.roots))
    max_residual = float(residuals.max())
    residual_ok = max_residual < RESIDUAL_BOUND

    rel = _relative_residuals(rootset.roots, g, apgf)
    rel[np.abs(rootset.roots - 1.0) < 1e-14] = 0.0
    max_relative = float(rel.max())
    relative_ok = max_relative < REL_RESIDUAL_BOUND

    n = rootset.truncation if rootset.truncation > 0 else default_truncation(g, instance.c)
    a = np.asarray(apgf.taylor(n), dtype=float)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        dn = np.abs(
            rootset.roots**g - np.polynomial.polynomial.polyval(rootset.roots, a)
        )
    tail = apgf.tail(n)
    slack = tail + residuals + 1e-13
    bound_ok = bool(np.all(dn <= slack))
    bound_margin = float(np.min(slack - dn))

    pairing_ok = True
    for z in rootset.roots:
        if z.imag > 1e-10:
            if not np.any(np.abs(rootset.roots - np.conj(z)) < 1e-10):
                pairing_ok = False
                break

    y_over_z = instance.arrivals.eval(rootset.roots) / rootset.roots
    diffs = np.abs(y_over_z[:, None] - y_over_z[None, :])
    np.fill_diagonal(diffs, np.inf)
    transform_gap = float(diffs.min()) if len(rootset.roots) > 1 else np.inf
    distinct_ok = transform_gap > 1e-9

    report = CertificationReport(
        count=count,
        count_ok=count_ok,
        max_residual=max_residual,
        residual_ok=residual_ok,
        max_relative=max_relative,
        relative_ok=relative_ok,
        bound_ok=bound_ok,
        bound_margin=bound_margin,
        pairing_ok=pairing_ok,
        transform_gap=transform_gap,
        distinct_ok=distinct_ok,
    )
    rootset.certified = report.passed
    return report
