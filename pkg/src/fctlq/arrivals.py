"""Arrival-process models for slot-based traffic queues.

An :class:`ArrivalModel` wraps the probability generating function (PGF)
``Y(z) = sum_k y_k z^k`` of the per-slot arrival count together with the
closed forms the solvers need: derivatives of any order, Taylor coefficients
of powers ``Y(z)^m``, tail masses of those powers, and random sampling.
Four kinds are supported: Poisson, Bernoulli, geometric (parameterized by its
mean), and an arbitrary finite-support distribution.

:class:`FctlInstance` pairs a model with a cycle layout (g green slots, r red
slots) and validates the stability condition ``c * E[Y] < g`` at
construction.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import stats

from .errors import ConfigError, StabilityError

KIND_POISSON = "poisson"
KIND_BERNOULLI = "bernoulli"
KIND_GEOMETRIC = "geometric"
KIND_FINITE = "finite"

# Sum-to-one slack accepted before a finite weight vector is rejected.
_WEIGHT_SLACK = 1e-9


@dataclass(frozen=True)
class ArrivalModel:
    """Per-slot arrival distribution with PGF utilities.

    Use the factory classmethods (:meth:`poisson`, :meth:`bernoulli`,
    :meth:`geometric`, :meth:`finite`) rather than the raw constructor.
    """

    kind: str
    lam: float | None = None
    p: float | None = None
    mu: float | None = None
    weights: tuple | None = None

    # -- factories ---------------------------------------------------------

    @classmethod
    def poisson(cls, lam):
        lam = float(lam)
        if not 0.0 <= lam < 1.0:
            raise ConfigError(f"poisson rate must be in [0, 1) for E[Y] < 1, got {lam}")
        return cls(kind=KIND_POISSON, lam=lam)

    @classmethod
    def bernoulli(cls, p):
        p = float(p)
        if not 0.0 <= p < 1.0:
            # p = 1 would put zero mass on empty slots (y_0 = 0) and E[Y] = 1.
            raise ConfigError(f"bernoulli probability must be in [0, 1), got {p}")
        return cls(kind=KIND_BERNOULLI, p=p)

    @classmethod
    def geometric(cls, mu):
        mu = float(mu)
        if not 0.0 <= mu < 1.0:
            raise ConfigError(f"geometric mean must be in [0, 1) for E[Y] < 1, got {mu}")
        return cls(kind=KIND_GEOMETRIC, mu=mu)

    @classmethod
    def finite(cls, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or len(w) == 0:
            raise ConfigError("finite-support weights must be a non-empty 1-d sequence")
        if np.any(w < 0):
            raise ConfigError("finite-support weights must be non-negative")
        total = float(np.sum(w))
        if abs(total - 1.0) > _WEIGHT_SLACK:
            raise ConfigError(
                f"finite-support weights sum to {total!r}, more than {_WEIGHT_SLACK} from 1"
            )
        w = w / total
        if w[0] <= 0.0:
            raise ConfigError("finite-support weights need y_0 > 0 (empty slots possible)")
        mean = float(np.arange(len(w)) @ w)
        if mean >= 1.0:
            raise ConfigError(f"finite-support mean {mean} violates E[Y] < 1")
        return cls(kind=KIND_FINITE, weights=tuple(float(x) for x in w))

    # -- scalar structure --------------------------------------------------

    @cached_property
    def _w(self):
        return np.asarray(self.weights, dtype=float) if self.weights is not None else None

    @property
    def q(self):
        """Geometric ratio: P(Y=k) = (1-q) q^k."""
        return self.mu / (1.0 + self.mu)

    @cached_property
    def mean(self):
        if self.kind == KIND_POISSON:
            return self.lam
        if self.kind == KIND_BERNOULLI:
            return self.p
        if self.kind == KIND_GEOMETRIC:
            return self.mu
        return float(np.arange(len(self._w)) @ self._w)

    @cached_property
    def variance(self):
        if self.kind == KIND_POISSON:
            return self.lam
        if self.kind == KIND_BERNOULLI:
            return self.p * (1.0 - self.p)
        if self.kind == KIND_GEOMETRIC:
            return self.mu * (1.0 + self.mu)
        k = np.arange(len(self._w))
        return float((k - self.mean) ** 2 @ self._w)

    @property
    def second_moment(self):
        return self.variance + self.mean**2

    @cached_property
    def y0(self):
        """P(Y = 0); positive for every accepted model."""
        return float(self.eval(0.0).real)

    @property
    def radius(self):
        """Radius of convergence of the PGF (may be inf)."""
        if self.kind == KIND_GEOMETRIC:
            return math.inf if self.mu == 0.0 else 1.0 / self.q
        return math.inf

    @property
    def support_max(self):
        """Largest possible per-slot count, or None when unbounded."""
        if self.kind == KIND_BERNOULLI:
            return 1
        if self.kind == KIND_FINITE:
            return len(self.weights) - 1
        if self.kind == KIND_POISSON and self.lam == 0.0:
            return 0
        if self.kind == KIND_GEOMETRIC and self.mu == 0.0:
            return 0
        return None

    @property
    def is_linear(self):
        """True when Y(z) has polynomial degree <= 1."""
        sup = self.support_max
        return sup is not None and sup <= 1

    # -- PGF evaluation ----------------------------------------------------

    def eval(self, z):
        """Y(z) for scalar or array z (real or complex)."""
        z = np.asarray(z)
        if self.kind == KIND_POISSON:
            return np.exp(self.lam * (z - 1.0))
        if self.kind == KIND_BERNOULLI:
            return 1.0 - self.p + self.p * z
        if self.kind == KIND_GEOMETRIC:
            return (1.0 - self.q) / (1.0 - self.q * z)
        return np.polynomial.polynomial.polyval(z, self._w)

    def deriv(self, z, order=1):
        """Derivative Y^(order)(z), closed form per kind."""
        if order < 0:
            raise ValueError("derivative order must be >= 0")
        if order == 0:
            return self.eval(z)
        z = np.asarray(z)
        if self.kind == KIND_POISSON:
            return self.lam**order * np.exp(self.lam * (z - 1.0))
        if self.kind == KIND_BERNOULLI:
            if order == 1:
                return np.full_like(np.asarray(z, dtype=complex), self.p)
            return np.zeros_like(np.asarray(z, dtype=complex))
        if self.kind == KIND_GEOMETRIC:
            q = self.q
            return (1.0 - q) * math.factorial(order) * q**order / (1.0 - q * z) ** (order + 1)
        coef = self._w
        for _ in range(order):
            coef = np.polynomial.polynomial.polyder(coef)
            if len(coef) == 0:
                return np.zeros_like(np.asarray(z, dtype=complex))
        return np.polynomial.polynomial.polyval(z, coef)

    def jet(self, base, order):
        """Taylor coefficients of Y about ``base``: Y^(j)(base)/j! for j = 0..order."""
        out = np.zeros(order + 1, dtype=complex)
        if self.kind == KIND_POISSON:
            t = np.exp(self.lam * (base - 1.0))
            for j in range(order + 1):
                out[j] = t
                t *= self.lam / (j + 1)
            return out
        if self.kind == KIND_BERNOULLI:
            out[0] = 1.0 - self.p + self.p * base
            if order >= 1:
                out[1] = self.p
            return out
        if self.kind == KIND_GEOMETRIC:
            q = self.q
            ratio = q / (1.0 - q * base)
            t = (1.0 - q) / (1.0 - q * base)
            for j in range(order + 1):
                out[j] = t
                t *= ratio
            return out
        w = self._w
        for j in range(min(order, len(w) - 1) + 1):
            acc = 0.0 + 0.0j
            for k in range(len(w) - 1, j - 1, -1):
                acc = acc * base + w[k] * math.comb(k, j)
            out[j] = acc
        return out

    # -- Taylor coefficients of powers --------------------------------------

    def taylor(self, n):
        """Coefficients y_0..y_n of Y(z)."""
        return self.power_taylor(1, n)

    def power_taylor(self, m, n):
        """Coefficients of Y(z)^m up to order n (length n+1)."""
        if m < 0 or n < 0:
            raise ValueError("power and order must be non-negative")
        k = np.arange(n + 1)
        if m == 0:
            out = np.zeros(n + 1)
            out[0] = 1.0
            return out
        if self.kind == KIND_POISSON:
            return stats.poisson.pmf(k, m * self.lam)
        if self.kind == KIND_BERNOULLI:
            return stats.binom.pmf(k, m, self.p)
        if self.kind == KIND_GEOMETRIC:
            if self.mu == 0.0:
                out = np.zeros(n + 1)
                out[0] = 1.0
                return out
            return stats.nbinom.pmf(k, m, 1.0 - self.q)
        return _poly_power(self._w, m, n)

    def power_tail(self, m, n):
        """Mass of Y^m strictly beyond order n: sum_{k>n} coeff_k."""
        if m == 0:
            return 0.0
        if self.kind == KIND_POISSON:
            return float(stats.poisson.sf(n, m * self.lam))
        if self.kind == KIND_BERNOULLI:
            return float(stats.binom.sf(n, m, self.p))
        if self.kind == KIND_GEOMETRIC:
            if self.mu == 0.0:
                return 0.0
            return float(stats.nbinom.sf(n, m, 1.0 - self.q))
        deg = (len(self._w) - 1) * m
        if n >= deg:
            return 0.0
        return float(max(0.0, 1.0 - np.sum(_poly_power(self._w, m, n))))

    # -- sampling ------------------------------------------------------------

    def sample(self, rng, size):
        """Draw per-slot arrival counts as int64."""
        if self.kind == KIND_POISSON:
            return rng.poisson(self.lam, size).astype(np.int64)
        if self.kind == KIND_BERNOULLI:
            return (rng.random(size) < self.p).astype(np.int64)
        if self.kind == KIND_GEOMETRIC:
            if self.mu == 0.0:
                return np.zeros(size, dtype=np.int64)
            return (rng.geometric(1.0 - self.q, size) - 1).astype(np.int64)
        cum = np.cumsum(self._w)
        return np.searchsorted(cum, rng.random(size), side="right").astype(np.int64)

    def __str__(self):
        if self.kind == KIND_POISSON:
            return f"poisson(lam={self.lam:g})"
        if self.kind == KIND_BERNOULLI:
            return f"bernoulli(p={self.p:g})"
        if self.kind == KIND_GEOMETRIC:
            return f"geometric(mu={self.mu:g})"
        return "finite([" + ", ".join(f"{w:g}" for w in self.weights) + "])"


def _poly_power(w, m, n):
    """Coefficients of a polynomial PGF raised to integer power m, truncated at n."""
    result = np.zeros(1)
    result[0] = 1.0
    base = np.asarray(w, dtype=float)
    e = m
    while e:
        if e & 1:
            result = np.convolve(result, base)[: n + 1]
        e >>= 1
        if e:
            base = np.convolve(base, base)[: n + 1]
    if len(result) < n + 1:
        result = np.pad(result, (0, n + 1 - len(result)))
    return result


class PowerPgf:
    """PGF surface of A(z) = Y(z)^power, the arrivals over ``power`` slots.

    Exposes the operations the root and contour machinery needs without
    assuming how A was assembled, so generalized cycle models can provide
    the same surface.
    """

    def __init__(self, model: ArrivalModel, power: int):
        self.model = model
        self.power = int(power)

    @property
    def mean(self):
        return self.power * self.model.mean

    @property
    def radius(self):
        return self.model.radius

    def eval(self, z):
        return self.model.eval(z) ** self.power

    def deriv(self, z):
        """First derivative A'(z) = power * Y^(power-1) * Y'."""
        return self.power * self.model.eval(z) ** (self.power - 1) * self.model.deriv(z)

    def taylor(self, n):
        return self.model.power_taylor(self.power, n)

    def tail(self, n):
        return self.model.power_tail(self.power, n)

    def sample(self, rng, size):
        """Draw totals over ``power`` slots, using closed forms where they exist."""
        m = self.power
        if m == 0:
            return np.zeros(size, dtype=np.int64)
        mod = self.model
        if mod.kind == KIND_POISSON:
            return rng.poisson(m * mod.lam, size).astype(np.int64)
        if mod.kind == KIND_BERNOULLI:
            return rng.binomial(m, mod.p, size).astype(np.int64)
        if mod.kind == KIND_GEOMETRIC:
            if mod.mu == 0.0:
                return np.zeros(size, dtype=np.int64)
            # sum of m geometrics on {0,1,...} with success prob 1-q
            return rng.negative_binomial(m, 1.0 - mod.q, size).astype(np.int64)
        out = np.zeros(size, dtype=np.int64)
        for _ in range(m):
            out += mod.sample(rng, size)
        return out


@dataclass(frozen=True)
class FctlInstance:
    """A fixed-cycle instance: g green slots, r red slots, one arrival model."""

    g: int
    r: int
    arrivals: ArrivalModel

    def __post_init__(self):
        if not isinstance(self.g, (int, np.integer)) or self.g < 1:
            raise ConfigError(f"g must be a positive integer, got {self.g!r}")
        if not isinstance(self.r, (int, np.integer)) or self.r < 0:
            raise ConfigError(f"r must be a non-negative integer, got {self.r!r}")
        load = self.c * self.arrivals.mean
        if not load < self.g:
            raise StabilityError(
                f"unstable instance: c*E[Y] = {load:g} must be strictly below g = {self.g}"
            )

    @property
    def c(self):
        """Cycle length in slots."""
        return self.g + self.r

    @property
    def load(self):
        """Utilization c*E[Y]/g, strictly below 1 for accepted instances."""
        return self.c * self.arrivals.mean / self.g

    @cached_property
    def a(self):
        """PGF surface of the per-cycle arrival total A(z) = Y(z)^c."""
        return PowerPgf(self.arrivals, self.c)

    def __str__(self):
        return f"g={self.g} r={self.r} {self.arrivals}"
