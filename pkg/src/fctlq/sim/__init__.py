"""Monte Carlo simulation of fixed-cycle queues.

Streams are counter-based: batch b of a run draws from Philox keyed by
(seed, b) and the warmup from (seed, 2**62), so results are independent
of how work is chunked and any batch could be regenerated in isolation.
Standard errors come from batch means.

Two interchangeable kernels execute the per-cycle dynamics: a compiled
extension (``fctlq.sim._kernel``) and a pure-python fallback
(``fctlq.sim._pykernel``).  Both consume the same pre-drawn arrival
arrays and accumulate integer aggregates, so their outputs are
bit-identical; set FCTLQ_PURE_PYTHON=1 to force the fallback.

Histograms clip into their last bin; the cutoffs (``truncation`` for
queue lengths, ``delay_cap`` for delays) only need to cover the range a
consumer will read.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..arrivals import ArrivalModel, FctlInstance, PowerPgf
from ..errors import ConfigError
from ..extensions import (
    VARIANT_DEPENDENT_RED,
    VARIANT_HESITATION,
    VARIANT_INTERRUPTED,
    VARIANT_RIGHT_TURN,
    GeneralizedInstance,
)
from . import _pykernel
from .exact import ExactStationary, exact_stationary

try:
    from . import _kernel
except ImportError:  # pragma: no cover - depends on the build
    _kernel = None

__all__ = [
    "SimConfig",
    "SimReport",
    "simulate",
    "active_kernel",
    "exact_stationary",
    "ExactStationary",
]

#: warmup stream index; batch indices stay far below this
WARMUP_STREAM = 2**62

_SIMULATED_VARIANTS = (
    VARIANT_RIGHT_TURN,
    VARIANT_INTERRUPTED,
    VARIANT_HESITATION,
    VARIANT_DEPENDENT_RED,
)


def active_kernel():
    """Kernel simulate() will use: 'compiled' or 'python'."""
    if _kernel is not None and not os.environ.get("FCTLQ_PURE_PYTHON"):
        return "compiled"
    return "python"


def _kernel_module():
    return _kernel if active_kernel() == "compiled" else _pykernel


@dataclass(frozen=True)
class SimConfig:
    """Run parameters.

    cycles: simulated cycles contributing to estimates.
    warmup: cycles run first and discarded.
    truncation: queue histogram cutoff (also clips the carried counts).
    batches: substreams used for standard errors.
    delay_cap: delay histogram cutoff in slots.
    delay_se_slots: slots (1-based) whose delay pmf gets error bars.
    """

    cycles: int
    warmup: int = 10_000
    seed: int = 1
    truncation: int = 2048
    batches: int = 100
    delay_cap: int = 512
    delay_se_slots: tuple = (10,)

    def __post_init__(self):
        if not isinstance(self.cycles, (int, np.integer)) or self.cycles < 1:
            raise ConfigError(f"cycles must be a positive integer, got {self.cycles!r}")
        if self.warmup < 0:
            raise ConfigError("warmup must be non-negative")
        if self.truncation < 8:
            raise ConfigError("truncation must be at least 8")
        if self.batches < 1:
            raise ConfigError("batches must be positive")
        if self.delay_cap < 1:
            raise ConfigError("delay_cap must be positive")


@dataclass
class SimReport:
    """Estimates with batch-means standard errors.

    Standard runs fill every field; variant runs report overflow
    statistics only and leave the per-slot fields as None.  All pmfs sum
    to one with any clipped mass in the last bin.
    """

    kind: str
    kernel: str
    cycles: int
    warmup: int
    seed: int
    batches: int
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    overflow_pmf: np.ndarray
    overflow_pmf_se: np.ndarray
    arrivals: int
    start_green_pmf: Optional[np.ndarray] = None
    start_green_pmf_se: Optional[np.ndarray] = None
    green_pmf: Optional[np.ndarray] = None
    green_pmf_se: Optional[np.ndarray] = None
    slot_means: Optional[np.ndarray] = None
    delay_pmf: Optional[np.ndarray] = None
    delay_counts: Optional[np.ndarray] = None
    delay_pmf_se: Optional[dict] = None
    passed: Optional[int] = None
    delayed: Optional[int] = None

    @property
    def p0(self):
        return float(self.overflow_pmf[0])

    @property
    def p0_se(self):
        return float(self.overflow_pmf_se[0])

    def to_dict(self):
        out = {
            "kind": self.kind,
            "kernel": self.kernel,
            "cycles": self.cycles,
            "warmup": self.warmup,
            "seed": self.seed,
            "batches": self.batches,
            "mean": self.mean,
            "mean_se": self.mean_se,
            "variance": self.variance,
            "variance_se": self.variance_se,
            "p0": self.p0,
            "p0_se": self.p0_se,
            "arrivals": self.arrivals,
        }
        if self.passed is not None:
            out["passed"] = self.passed
            out["delayed"] = self.delayed
        return out


def _batch_sizes(cycles, batches):
    b = min(batches, cycles)
    base, extra = divmod(cycles, b)
    return [base + 1] * extra + [base] * (b - extra)


def _rng(seed, stream):
    key = np.array([seed & (2**64 - 1), stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _se_scalar(vals):
    if len(vals) < 2:
        return float("nan")
    return float(np.std(vals, ddof=1) / np.sqrt(len(vals)))


def _se_cols(mat):
    if mat.shape[0] < 2:
        return np.full(mat.shape[1], np.nan)
    return mat.std(axis=0, ddof=1) / np.sqrt(mat.shape[0])


def simulate(obj, cfg: SimConfig) -> SimReport:
    """Simulate a standard instance or a built-in generalized variant."""
    if isinstance(obj, FctlInstance):
        return _simulate_standard(obj, cfg)
    if isinstance(obj, GeneralizedInstance):
        return _simulate_variant(obj, cfg)
    raise ConfigError(f"cannot simulate objects of type {type(obj).__name__}")


def _simulate_standard(inst: FctlInstance, cfg: SimConfig) -> SimReport:
    ker = _kernel_module()
    g, r, c = inst.g, inst.r, inst.c
    cap = cfg.truncation
    dcap = cfg.delay_cap
    sizes = _batch_sizes(cfg.cycles, cfg.batches)
    nb = len(sizes)

    state = 0
    if cfg.warmup:
        rng = _rng(cfg.seed, WARMUP_STREAM)
        arr = inst.arrivals.sample(rng, (cfg.warmup, c))
        state = ker.standard_batch(
            state, arr, g, r,
            np.zeros(cap + 1, np.int64), np.zeros(cap + 1, np.int64),
            np.zeros(g + 1, np.int64), np.zeros((c, dcap + 1), np.int64),
            np.zeros(c, np.int64), np.zeros(5, np.int64),
        )

    over = np.zeros((nb, cap + 1), np.int64)
    sog = np.zeros((nb, cap + 1), np.int64)
    green = np.zeros((nb, g + 1), np.int64)
    delay = np.zeros((c, dcap + 1), np.int64)
    se_slots = [s for s in cfg.delay_se_slots if 1 <= s <= c]
    delay_b = {s: np.zeros((nb, dcap + 1), np.int64) for s in se_slots}
    slots = np.zeros(c, np.int64)
    scal = np.zeros((nb, 5), np.int64)

    for b, n_b in enumerate(sizes):
        rng = _rng(cfg.seed, b)
        arr = inst.arrivals.sample(rng, (n_b, c))
        dh = np.zeros((c, dcap + 1), np.int64)
        sl = np.zeros(c, np.int64)
        state = ker.standard_batch(
            state, arr, g, r, over[b], sog[b], green[b], dh, sl, scal[b]
        )
        delay += dh
        slots += sl
        for s in se_slots:
            delay_b[s][b] = dh[s - 1]

    n_arr = np.asarray(sizes, dtype=np.float64)
    total = float(cfg.cycles)
    mean_b = scal[:, 0] / n_arr
    mean = float(scal[:, 0].sum() / total)
    var_b = scal[:, 1] / n_arr - mean_b**2
    variance = float(scal[:, 1].sum() / total - mean**2)

    delay_tot = delay.sum(axis=1)
    delay_pmf = np.zeros_like(delay, dtype=np.float64)
    for k in range(c):
        if delay_tot[k] > 0:
            delay_pmf[k] = delay[k] / delay_tot[k]
        else:
            delay_pmf[k, 0] = 1.0
    delay_se = {}
    for s in se_slots:
        counts = delay_b[s]
        tots = counts.sum(axis=1, keepdims=True).astype(np.float64)
        ok = tots[:, 0] > 0
        if ok.sum() >= 2:
            delay_se[s] = _se_cols(counts[ok] / tots[ok])
        else:
            delay_se[s] = np.full(dcap + 1, np.nan)

    passed = int(scal[:, 2].sum())
    delayed = int(scal[:, 3].sum())
    arrivals = int(scal[:, 4].sum())
    if passed + delayed != arrivals:
        raise AssertionError("vehicle accounting must balance exactly")

    return SimReport(
        kind="standard",
        kernel=active_kernel(),
        cycles=cfg.cycles,
        warmup=cfg.warmup,
        seed=cfg.seed,
        batches=nb,
        mean=mean,
        mean_se=_se_scalar(mean_b),
        variance=variance,
        variance_se=_se_scalar(var_b),
        overflow_pmf=over.sum(axis=0) / total,
        overflow_pmf_se=_se_cols(over / n_arr[:, None]),
        arrivals=arrivals,
        start_green_pmf=sog.sum(axis=0) / total,
        start_green_pmf_se=_se_cols(sog / n_arr[:, None]),
        green_pmf=green.sum(axis=0) / total,
        green_pmf_se=_se_cols(green / n_arr[:, None]),
        slot_means=slots / total,
        delay_pmf=delay_pmf,
        delay_counts=delay,
        delay_pmf_se=delay_se,
        passed=passed,
        delayed=delayed,
    )


def _variant_batch(ker, gi, rng, state, n_b, over_row, scal_row):
    """Draw one batch's arrays and run its kernel.  Draw order is fixed:
    arrivals first, then any variant-specific auxiliaries."""
    base = gi.base
    g, r, c = base.g, base.r, base.c
    if gi.variant == VARIANT_RIGHT_TURN:
        arr = base.arrivals.sample(rng, (n_b, c))
        return ker.right_turn_batch(state, arr, g, r, over_row, scal_row)
    if gi.variant == VARIANT_HESITATION:
        arr = base.arrivals.sample(rng, (n_b, c))
        hes = (rng.random((n_b, g)) < gi.params.p).astype(np.int64)
        return ker.hesitation_batch(state, arr, hes, g, r, over_row, scal_row)
    if gi.variant == VARIANT_INTERRUPTED:
        pairs = sorted(gi.params.phase_pmf.items())
        reds = np.array([rg[0] for rg, _ in pairs], dtype=np.int64)
        greens = np.array([rg[1] for rg, _ in pairs], dtype=np.int64)
        weights = np.array([w for _, w in pairs], dtype=np.float64)
        weights = weights / weights.sum()
        width = int((reds + greens).max())
        arr = base.arrivals.sample(rng, (n_b, width))
        comp = rng.choice(len(pairs), size=n_b, p=weights)
        return ker.interrupted_batch(
            state, arr, reds[comp], greens[comp], over_row, scal_row
        )
    if gi.variant == VARIANT_DEPENDENT_RED:
        red = gi.params.red_arrivals
        if isinstance(red, ArrivalModel):
            red = PowerPgf(red, 1)
        if not hasattr(red, "sample"):
            raise ConfigError(
                "dependent_red simulation needs a red-period PGF with a sampler"
            )
        arr = base.arrivals.sample(rng, (n_b, g))
        red_tot = np.asarray(red.sample(rng, n_b), dtype=np.int64)
        return ker.dependent_red_batch(state, arr, red_tot, g, over_row, scal_row)
    raise ConfigError(f"no simulator for variant {gi.variant!r}")


def _simulate_variant(gi: GeneralizedInstance, cfg: SimConfig) -> SimReport:
    if gi.variant not in _SIMULATED_VARIANTS or gi.base is None or gi.params is None:
        raise ConfigError("custom generalized instances have no simulator")
    ker = _kernel_module()
    cap = cfg.truncation
    sizes = _batch_sizes(cfg.cycles, cfg.batches)
    nb = len(sizes)

    state = 0
    if cfg.warmup:
        rng = _rng(cfg.seed, WARMUP_STREAM)
        state = _variant_batch(
            ker, gi, rng, state, cfg.warmup,
            np.zeros(cap + 1, np.int64), np.zeros(5, np.int64),
        )

    over = np.zeros((nb, cap + 1), np.int64)
    scal = np.zeros((nb, 5), np.int64)
    for b, n_b in enumerate(sizes):
        rng = _rng(cfg.seed, b)
        state = _variant_batch(ker, gi, rng, state, n_b, over[b], scal[b])

    n_arr = np.asarray(sizes, dtype=np.float64)
    total = float(cfg.cycles)
    mean_b = scal[:, 0] / n_arr
    mean = float(scal[:, 0].sum() / total)
    var_b = scal[:, 1] / n_arr - mean_b**2
    variance = float(scal[:, 1].sum() / total - mean**2)

    return SimReport(
        kind=gi.variant,
        kernel=active_kernel(),
        cycles=cfg.cycles,
        warmup=cfg.warmup,
        seed=cfg.seed,
        batches=nb,
        mean=mean,
        mean_se=_se_scalar(mean_b),
        variance=variance,
        variance_se=_se_scalar(var_b),
        overflow_pmf=over.sum(axis=0) / total,
        overflow_pmf_se=_se_cols(over / n_arr[:, None]),
        arrivals=int(scal[:, 4].sum()),
    )
