"""Command-line front end.

Subcommands: solve, moments, dist, cycle-profile, green-dist,
delay-dist, roots, simulate, compare, figure1.

Configuration is a JSON document selected with --config; flags override
file values.  Schema:

    {
      "g": 20, "r": 30,
      "arrivals": {"kind": "poisson", "lambda": 0.38},
      "variant": {"kind": "hesitation", "p": 0.1},
      "backend": "both", "format": "csv", "out": "out.csv",
      "seed": 1, "tol": 1e-9,
      "cycles": 100000, "warmup": 10000, "batches": 100,
      "slot": 10, "convention": "co_arrival",
      "kmax": null, "tail_threshold": 20, "lambdas": [0.2, 0.3, 0.36, 0.38]
    }

Arrival kinds: poisson {lambda}, bernoulli {p}, geometric {mu},
finite {weights}.  Variant kinds: right_turn {}, hesitation {p},
interrupted {phases: [[red, green, weight], ...]}, dependent_red
{red: {model: <arrivals>, power: m} or {model, powers, shifts, weights}}.

Exit codes: 0 ok, 2 config error, 3 solver error, 4 cross-check failure.
Output files are written atomically (write-then-rename) and rerunning a
command with the same config and seed reproduces them byte for byte;
wall-clock timings therefore go to the console, never into files.
Every emitted pmf column carries an explicit trailing tail entry so the
column sums to one.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import time

import numpy as np

from . import classic, extensions, roots, sim
from .arrivals import ArrivalModel, FctlInstance
from .contour import ContourSolution
from .errors import ConfigError, CrossCheckError, FctlError
from .extensions import GeneralizedInstance, MixturePgf, VariantParams, build_variant

W_PROBE = (0.0, 0.25, 0.5, 0.75, 1.0)

DEFAULT_LAMBDAS = (0.2, 0.3, 0.36, 0.38)

#: subfigure (d) is emitted only for loads at or above this
DELAY_LOAD_CUTOFF = 0.9


# -- config ------------------------------------------------------------------


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return cfg


def _field(spec, key, where):
    if key not in spec:
        raise ConfigError(f"{where} spec is missing required field {key!r}")
    return spec[key]


def _build_arrivals(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("arrivals spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "poisson":
        return ArrivalModel.poisson(_field(spec, "lambda", "poisson"))
    if kind == "bernoulli":
        return ArrivalModel.bernoulli(_field(spec, "p", "bernoulli"))
    if kind == "geometric":
        return ArrivalModel.geometric(_field(spec, "mu", "geometric"))
    if kind == "finite":
        return ArrivalModel.finite(_field(spec, "weights", "finite"))
    raise ConfigError(f"unknown arrival kind {kind!r}")


def _build_variant_params(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("variant spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "right_turn":
        return VariantParams.right_turn()
    if kind == "hesitation":
        return VariantParams.hesitation(_field(spec, "p", "hesitation"))
    if kind == "interrupted":
        phases = spec.get("phases")
        if not phases:
            raise ConfigError("interrupted variant needs 'phases': [[red, green, weight], ...]")
        return VariantParams.interrupted(
            {(int(row[0]), int(row[1])): float(row[2]) for row in phases}
        )
    if kind == "dependent_red":
        red_spec = spec.get("red")
        if not isinstance(red_spec, dict):
            raise ConfigError("dependent_red variant needs a 'red' object")
        model = _build_arrivals(_field(red_spec, "model", "dependent_red.red"))
        if "powers" in red_spec:
            red = MixturePgf(
                model,
                powers=red_spec["powers"],
                shifts=red_spec.get("shifts", [0] * len(red_spec["powers"])),
                weights=_field(red_spec, "weights", "dependent_red.red"),
            )
        else:
            from .arrivals import PowerPgf

            red = PowerPgf(model, int(red_spec.get("power", 1)))
        return VariantParams.dependent_red(red)
    raise ConfigError(f"unknown variant kind {kind!r}")


class Run:
    """Merged configuration for one command invocation."""

    def __init__(self, args):
        cfg = _load_config(args.config)
        self.cfg = cfg
        g = args.g if args.g is not None else cfg.get("g", 20)
        r = args.r if args.r is not None else cfg.get("r", 30)
        arr_spec = cfg.get("arrivals", {"kind": "poisson", "lambda": 0.3})
        if args.lam is not None:
            arr_spec = dict(arr_spec)
            if arr_spec.get("kind") == "bernoulli":
                arr_spec["p"] = args.lam
            elif arr_spec.get("kind") == "geometric":
                arr_spec["mu"] = args.lam
            else:
                arr_spec = {"kind": "poisson", "lambda": args.lam}
        self.instance = FctlInstance(g=int(g), r=int(r), arrivals=_build_arrivals(arr_spec))
        self.variant = None
        if cfg.get("variant"):
            self.variant = build_variant(self.instance, _build_variant_params(cfg["variant"]))
        self.backend = args.backend or cfg.get("backend", "both")
        if self.backend not in ("contour", "roots", "both"):
            raise ConfigError(f"backend must be contour, roots, or both, got {self.backend!r}")
        self.fmt = args.format or cfg.get("format", "csv")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.fmt!r}")
        self.out = args.out or cfg.get("out")
        self.seed = args.seed if args.seed is not None else int(cfg.get("seed", 1))
        self.tol = args.tol if args.tol is not None else float(cfg.get("tol", 1e-9))

    def extra(self, key, default=None):
        return self.cfg.get(key, default)

    def require_standard(self, command):
        if self.variant is not None:
            raise ConfigError(
                f"{command} supports standard instances only; "
                "variant configs work with solve, moments, dist, simulate"
            )


# -- output ------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _json_text(payload):
    return json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n"


def _atomic_write(path, text):
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit(run, text):
    if run.out:
        _atomic_write(run.out, text)
        print(f"wrote {run.out}")
    else:
        sys.stdout.write(text)


def _emit_table(run, header, rows, payload):
    """Write the csv table or the json payload, per the configured format."""
    if run.fmt == "json":
        _emit(run, _json_text(payload))
    else:
        _emit(run, _csv_text(header, rows))


# -- backend plumbing --------------------------------------------------------


class BackendResult:
    def __init__(self, name, instance):
        self.name = name
        if name == "contour":
            if isinstance(instance, GeneralizedInstance):
                self.sol = extensions.GeneralizedSolution(instance)
            else:
                self.sol = ContourSolution(instance)
            self.rootset = None
        else:
            self.rootset = roots.find_roots(instance)
            self.instance = instance
            self.sol = None

    def pgf(self, w):
        if self.sol is not None:
            return complex(np.asarray(self.sol.eval_pgf(w)).reshape(-1)[0])
        return complex(classic.pgf_root_form(self.rootset, self.instance, w))

    def moments(self):
        if self.sol is not None:
            return float(self.sol.mean_overflow()), float(self.sol.variance_overflow())
        return classic.moments_root_form(self.rootset, self.instance)

    def pmf(self, kmax=None):
        if self.sol is not None:
            return self.sol.pmf_overflow(kmax=kmax)
        return classic.pmf_root_form(self.rootset, self.instance, kmax=kmax)


def _backends(run, obj=None):
    obj = obj if obj is not None else (run.variant or run.instance)
    if isinstance(obj, GeneralizedInstance) and run.backend != "contour":
        if run.backend == "roots":
            raise ConfigError(
                "generalized instances evaluate via the contour form only; use --backend contour"
            )
        # 'both' quietly narrows: there is no root rearrangement here
        return [BackendResult("contour", obj)]
    if run.backend == "both":
        return [BackendResult("contour", obj), BackendResult("roots", obj)]
    return [BackendResult(run.backend, obj)]


def _discrepancy_guard(run, label, value):
    print(f"max discrepancy ({label}): {value:.3e}  tolerance {run.tol:g}")
    if value > run.tol:
        raise CrossCheckError(
            f"{label} discrepancy {value:.3e} exceeds tolerance {run.tol:g}"
        )


def _start_green_pmf(instance, overflow_pmf):
    """Propagate the overflow pmf through the red period (no boundary data needed)."""
    y = classic._arrival_pmf(instance.arrivals)
    p = np.asarray(overflow_pmf, dtype=float)
    for _ in range(instance.r):
        p = np.convolve(p, y)
    return p


def _tail_prob(pmf, threshold):
    """P(X > threshold), counting any un-enumerated mass as beyond it."""
    p = np.asarray(pmf, dtype=float)
    inside = p[: threshold + 1].sum()
    return max(0.0, 1.0 - float(inside))


# -- commands ----------------------------------------------------------------


def cmd_solve(run):
    backends = _backends(run)
    threshold = int(run.extra("tail_threshold", 20))
    cols = {}
    for b in backends:
        mean, var = b.moments()
        dist = b.pmf()
        sog = _start_green_pmf(run.instance, dist.pmf) if run.variant is None else None
        col = {f"pgf_w{w:g}": b.pgf(w).real for w in W_PROBE}
        col["mean"] = mean
        col["variance"] = var
        col["p_empty"] = float(dist.pmf[0])
        col[f"p_gt_{threshold}_end_green"] = _tail_prob(dist.pmf, threshold)
        if sog is not None:
            col[f"p_gt_{threshold}_start_green"] = _tail_prob(sog, threshold)
        cols[b.name] = col
    names = list(cols)
    keys = list(cols[names[0]])
    rows = []
    disc = 0.0
    for key in keys:
        row = [key] + [cols[n][key] for n in names]
        if len(names) == 2:
            d = abs(cols[names[0]][key] - cols[names[1]][key])
            disc = max(disc, d)
            row.append(d)
        rows.append(row)
    header = ["quantity"] + names + (["abs_diff"] if len(names) == 2 else [])
    payload = {"instance": str(run.instance), "results": cols}
    if len(names) == 2:
        payload["max_discrepancy"] = disc
    _emit_table(run, header, rows, payload)
    if len(names) == 2:
        _discrepancy_guard(run, "solve", disc)


def cmd_moments(run):
    backends = _backends(run)
    cols = {}
    for b in backends:
        mean, var = b.moments()
        cols[b.name] = {"mean": mean, "variance": var}
    names = list(cols)
    rows = []
    disc = 0.0
    for key in ("mean", "variance"):
        row = [key] + [cols[n][key] for n in names]
        if len(names) == 2:
            scale = max(1.0, *(abs(cols[n][key]) for n in names))
            d = abs(cols[names[0]][key] - cols[names[1]][key]) / scale
            disc = max(disc, d)
            row.append(d)
        rows.append(row)
    header = ["quantity"] + names + (["rel_diff"] if len(names) == 2 else [])
    payload = {"instance": str(run.instance), "results": cols}
    if len(names) == 2:
        payload["max_discrepancy"] = disc
    _emit_table(run, header, rows, payload)
    if len(names) == 2:
        _discrepancy_guard(run, "moments", disc)


def cmd_dist(run):
    backends = _backends(run)
    kmax = run.extra("kmax")
    dists = {b.name: b.pmf(kmax=int(kmax) if kmax else None) for b in backends}
    names = list(dists)
    width = max(len(d.pmf) for d in dists.values())
    rows = []
    for k in range(width):
        rows.append(
            [k] + [float(d.pmf[k]) if k < len(d.pmf) else 0.0 for d in dists.values()]
        )
    rows.append(["tail"] + [float(d.tail) for d in dists.values()])
    header = ["k"] + [f"pmf_{n}" for n in names]
    payload = {
        "instance": str(run.instance),
        "pmf": {n: d.pmf for n, d in dists.items()},
        "tail": {n: d.tail for n, d in dists.items()},
    }
    _emit_table(run, header, rows, payload)
    if len(names) == 2:
        a, b = (dists[n] for n in names)
        m = min(len(a.pmf), len(b.pmf))
        disc = float(np.max(np.abs(a.pmf[:m] - b.pmf[:m])))
        _discrepancy_guard(run, "dist", disc)


def _profile(run, instance=None):
    instance = instance or run.instance
    rootset = roots.find_roots(instance)
    boundary = classic.solve_boundary(rootset, instance)
    dist = classic.pmf_root_form(rootset, instance)
    profile = classic.cycle_profile(instance, boundary, dist, keep_pmfs=True)
    return rootset, boundary, dist, profile


def cmd_cycle_profile(run):
    run.require_standard("cycle-profile")
    _, _, _, profile = _profile(run)
    c = run.instance.c
    rows = []
    for k in range(c + 1):
        rows.append([k, float(profile.means[k]), float(np.asarray(profile.pmfs[k])[0])])
    header = ["k", "mean", "p_empty"]
    payload = {
        "instance": str(run.instance),
        "means": profile.means,
        "p_empty": [float(np.asarray(p)[0]) for p in profile.pmfs],
    }
    _emit_table(run, header, rows, payload)


def cmd_green_dist(run):
    run.require_standard("green-dist")
    rootset = roots.find_roots(run.instance)
    boundary = classic.solve_boundary(rootset, run.instance)
    eg = classic.effective_green(boundary, run.instance.g)
    rows = [[k, float(eg.pmf[k])] for k in range(len(eg.pmf))]
    rows.append(["tail", float(eg.tail)])
    payload = {"instance": str(run.instance), "pmf": eg.pmf, "tail": eg.tail}
    _emit_table(run, ["k", "pmf"], rows, payload)


def cmd_delay_dist(run):
    run.require_standard("delay-dist")
    slot = int(run.extra("slot", 10))
    if not 1 <= slot <= run.instance.c:
        raise ConfigError(f"slot must lie in 1..{run.instance.c}, got {slot}")
    convention = run.extra("convention", classic.CONVENTION_CO_ARRIVAL)
    if convention not in (classic.CONVENTION_CO_ARRIVAL, classic.CONVENTION_QUEUE_ONLY):
        raise ConfigError(f"unknown delay convention {convention!r}")
    _, _, _, profile = _profile(run)
    dd = classic.delay_distribution(run.instance, profile, slot, convention=convention)
    rows = [[d, float(dd.pmf[d])] for d in range(len(dd.pmf))]
    rows.append(["tail", float(dd.tail)])
    payload = {
        "instance": str(run.instance),
        "slot": slot,
        "convention": convention,
        "pmf": dd.pmf,
        "tail": dd.tail,
    }
    _emit_table(run, ["delay", "pmf"], rows, payload)


def cmd_roots(run):
    run.require_standard("roots")
    rootset = roots.find_roots(run.instance)
    report = roots.certify(rootset, run.instance)
    rows = []
    for idx, (z, res) in enumerate(zip(rootset.roots, rootset.residuals)):
        rows.append([idx, z.real, z.imag, abs(z), float(res)])
    header = ["index", "re", "im", "abs", "residual"]
    cert = {
        "count": report.count,
        "count_ok": report.count_ok,
        "max_residual": report.max_residual,
        "max_relative": report.max_relative,
        "bound_ok": report.bound_ok,
        "pairing_ok": report.pairing_ok,
        "distinct_ok": report.distinct_ok,
        "passed": report.passed,
    }
    payload = {
        "instance": str(run.instance),
        "roots": [{"re": z.real, "im": z.imag, "residual": float(res)}
                  for z, res in zip(rootset.roots, rootset.residuals)],
        "certification": cert,
    }
    if run.instance.arrivals.kind == "poisson":
        from scipy.optimize import linear_sum_assignment

        lw = roots.lambert_roots(run.instance).roots
        # sorting misorders near-ties; pair the two sets optimally instead
        cost = np.abs(lw[:, None] - rootset.roots[None, :])
        ii, jj = linear_sum_assignment(cost)
        cert["lambert_max_diff"] = float(cost[ii, jj].max())
    _emit_table(run, header, rows, payload)
    status = "PASS" if report.passed else "FAIL"
    print(f"certification {status}: count={report.count} max_residual={report.max_residual:.2e}")
    if not report.passed:
        raise CrossCheckError("root certification failed")


def cmd_simulate(run):
    cfg = sim.SimConfig(
        cycles=int(run.extra("cycles", 100_000)),
        warmup=int(run.extra("warmup", 10_000)),
        seed=run.seed,
        truncation=int(run.extra("truncation", 2048)),
        batches=int(run.extra("batches", 100)),
    )
    report = sim.simulate(run.variant or run.instance, cfg)
    scalars = report.to_dict()
    pmf = report.overflow_pmf
    se = report.overflow_pmf_se
    last = int(np.nonzero(pmf)[0][-1]) if pmf.any() else 0
    rows = [["scalar", key, val] for key, val in scalars.items()]
    tail = float(pmf[last + 1 :].sum())
    for k in range(last + 1):
        rows.append(["overflow_pmf", k, float(pmf[k])])
    rows.append(["overflow_pmf", "tail", tail])
    for k in range(last + 1):
        rows.append(["overflow_pmf_se", k, float(se[k])])
    payload = dict(scalars)
    payload["overflow_pmf"] = pmf[: last + 1]
    payload["overflow_pmf_tail"] = tail
    payload["overflow_pmf_se"] = se[: last + 1]
    _emit_table(run, ["table", "k", "value"], rows, payload)
    print(
        f"simulated {cfg.cycles} cycles ({report.kernel} kernel): "
        f"mean {report.mean:.6g} +- {report.mean_se:.2g}"
    )


def cmd_compare(run):
    run.require_standard("compare")
    inst = run.instance
    timings = {}
    t0 = time.perf_counter()
    sol = ContourSolution(inst)
    c_mean, c_var = float(sol.mean_overflow()), float(sol.variance_overflow())
    c_pmf = sol.pmf_overflow()
    c_pgf = np.array([sol.eval_pgf(w) for w in W_PROBE]).reshape(-1)
    timings["contour"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rootset = roots.find_roots(inst)
    r_mean, r_var = classic.moments_root_form(rootset, inst)
    r_pmf = classic.pmf_root_form(rootset, inst)
    r_pgf = np.array([classic.pgf_root_form(rootset, inst, w) for w in W_PROBE])
    timings["roots"] = time.perf_counter() - t0

    checks = []

    def add(name, value, tol):
        checks.append((name, float(value), float(tol), bool(value <= tol)))

    scale = np.maximum(np.abs(c_pgf), 1e-30)
    add("pgf_max_rel", np.max(np.abs(c_pgf - r_pgf) / scale), run.tol)
    add("mean_rel", abs(c_mean - r_mean) / max(1.0, abs(c_mean)), 1e-8)
    add("variance_rel", abs(c_var - r_var) / max(1.0, abs(c_var)), 1e-8)
    m = min(len(c_pmf.pmf), len(r_pmf.pmf))
    add("pmf_sup", np.max(np.abs(c_pmf.pmf[:m] - r_pmf.pmf[:m])), 1e-8)

    if inst.g <= 5 and inst.c <= 12:
        t0 = time.perf_counter()
        oracle = sim.exact_stationary(inst)
        timings["exact"] = time.perf_counter() - t0
        for name, pm in (("contour", c_pmf), ("roots", r_pmf)):
            n = min(len(pm.pmf), len(oracle.overflow.pmf))
            tv = 0.5 * (
                np.abs(pm.pmf[:n] - oracle.overflow.pmf[:n]).sum()
                + pm.pmf[n:].sum() + pm.tail + oracle.overflow.pmf[n:].sum()
            )
            add(f"exact_tv_{name}", tv, 1e-8)

    bulk_mean = extensions.bulk_service_mean(inst.g, inst.a)
    if inst.arrivals.kind == "bernoulli":
        ws = np.linspace(0.0, 0.9, 10)
        gap = max(
            abs(
                complex(np.asarray(extensions.bulk_service_pgf(inst.g, inst.a, w)).reshape(-1)[0])
                - complex(np.asarray(sol.eval_pgf(w)).reshape(-1)[0])
            )
            for w in ws
        )
        add("bulk_equality", gap, run.tol)
    else:
        add("bulk_bound_violation", max(0.0, c_mean - bulk_mean), 1e-12)

    t0 = time.perf_counter()
    scfg = sim.SimConfig(
        cycles=int(run.extra("cycles", 200_000)),
        warmup=int(run.extra("warmup", 10_000)),
        seed=run.seed,
    )
    rep = sim.simulate(inst, scfg)
    timings["simulation"] = time.perf_counter() - t0
    add("sim_mean_z", abs(rep.mean - c_mean) / rep.mean_se, 4.0)
    add("sim_variance_z", abs(rep.variance - c_var) / rep.variance_se, 4.0)
    add("sim_p_empty_z", abs(rep.p0 - float(c_pmf.pmf[0])) / rep.p0_se, 4.0)

    rows = [[n, v, t, "pass" if ok else "fail"] for n, v, t, ok in checks]
    payload = {
        "instance": str(inst),
        "checks": [
            {"name": n, "value": v, "tolerance": t, "passed": ok}
            for n, v, t, ok in checks
        ],
    }
    _emit_table(run, ["check", "value", "tolerance", "status"], rows, payload)
    for name, secs in timings.items():
        print(f"timing {name}: {secs:.3f}s")
    if "contour" in timings and "roots" in timings:
        faster = "roots" if timings["roots"] <= timings["contour"] else "contour"
        print(f"faster backend on this instance: {faster}")
    failed = [n for n, _, _, ok in checks if not ok]
    if failed:
        raise CrossCheckError("cross-checks failed: " + ", ".join(failed))


def cmd_figure1(run):
    outdir = run.out or "figure1"
    os.makedirs(outdir, exist_ok=True)
    lambdas = [float(x) for x in run.extra("lambdas", list(DEFAULT_LAMBDAS))]
    g, r = run.instance.g, run.instance.r
    slot = int(run.extra("slot", 10))

    profiles = {}
    sogs = {}
    greens = {}
    delays = {}
    for lam in lambdas:
        inst = FctlInstance(g=g, r=r, arrivals=ArrivalModel.poisson(lam))
        rootset = roots.find_roots(inst)
        boundary = classic.solve_boundary(rootset, inst)
        dist = classic.pmf_root_form(rootset, inst)
        profile = classic.cycle_profile(inst, boundary, dist, keep_pmfs=True)
        if run.backend == "both":
            sol = ContourSolution(inst)
            gap = max(
                abs(complex(np.asarray(sol.eval_pgf(w)).reshape(-1)[0])
                    - classic.pgf_root_form(rootset, inst, w))
                for w in W_PROBE
            )
            if gap > run.tol:
                raise CrossCheckError(
                    f"figure1 backend cross-check failed at lambda={lam:g}: {gap:.3e}"
                )
        profiles[lam] = profile
        sogs[lam] = np.asarray(profile.pmfs[0], dtype=float)
        greens[lam] = classic.effective_green(boundary, g)
        if inst.load >= DELAY_LOAD_CUTOFF:
            delays[lam] = classic.delay_distribution(inst, profile, slot)

    def col(lam):
        return f"lam{lam:g}"

    files = {}

    header = ["k"] + [col(lam) for lam in lambdas]
    rows = [
        [k] + [float(profiles[lam].means[k]) for lam in lambdas]
        for k in range(g + r + 1)
    ]
    files["profile"] = ("figure1a_profile.csv", header,
                        "mean queue at cycle point k (0 = start of green)", rows)

    width = max(len(s) for s in sogs.values())
    rows = [
        [k] + [float(s[k]) if k < len(s) else 0.0 for s in sogs.values()]
        for k in range(width)
    ]
    rows.append(["tail"] + [max(0.0, 1.0 - float(s.sum())) for s in sogs.values()])
    files["start_green"] = ("figure1b_start_green.csv", header,
                            "queue pmf at the start of the green period", rows)

    rows = [
        [k] + [float(greens[lam].pmf[k]) for lam in lambdas] for k in range(g + 1)
    ]
    rows.append(["tail"] + [float(greens[lam].tail) for lam in lambdas])
    files["effective_green"] = ("figure1c_effective_green.csv", header,
                                "effective green time pmf", rows)

    if delays:
        dl = list(delays)
        dheader = ["delay"] + [col(lam) for lam in dl]
        width = max(len(d.pmf) for d in delays.values())
        rows = [
            [k] + [float(delays[lam].pmf[k]) if k < len(delays[lam].pmf) else 0.0
                   for lam in dl]
            for k in range(width)
        ]
        rows.append(["tail"] + [float(delays[lam].tail) for lam in dl])
        files["delay"] = (f"figure1d_delay_slot{slot}.csv", dheader,
                          f"delay pmf for a slot-{slot} arrival (loads >= {DELAY_LOAD_CUTOFF:g})",
                          rows)

    manifest = {
        "g": g,
        "r": r,
        "lambdas": lambdas,
        "delay_slot": slot,
        "delay_lambdas": sorted(delays),
        "files": {},
    }
    for key, (name, fheader, desc, frows) in files.items():
        path = os.path.join(outdir, name)
        _atomic_write(path, _csv_text(fheader, frows))
        manifest["files"][key] = {"path": name, "columns": fheader, "description": desc}
        print(f"wrote {path}")
    mpath = os.path.join(outdir, "manifest.json")
    _atomic_write(mpath, _json_text(manifest))
    print(f"wrote {mpath}")


# -- entry point ---------------------------------------------------------------


COMMANDS = {
    "solve": cmd_solve,
    "moments": cmd_moments,
    "dist": cmd_dist,
    "cycle-profile": cmd_cycle_profile,
    "green-dist": cmd_green_dist,
    "delay-dist": cmd_delay_dist,
    "roots": cmd_roots,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "figure1": cmd_figure1,
}


def _parser():
    top = argparse.ArgumentParser(
        prog="fctlq",
        description="Fixed-cycle traffic-light queue: analytical solvers, "
                    "simulation, and cross-validation.",
    )
    sub = top.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--backend", choices=["contour", "roots", "both"])
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--out", help="output path (directory for figure1)")
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float, help="cross-check tolerance")
        p.add_argument("--lambda", dest="lam", type=float,
                       help="override the arrival rate parameter")
        p.add_argument("--g", type=int, help="override green slots")
        p.add_argument("--r", type=int, help="override red slots")
    return top


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        run = Run(args)
        COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CrossCheckError as exc:
        print(f"cross-check failure: {exc}", file=sys.stderr)
        return 4
    except FctlError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
