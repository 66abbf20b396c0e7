"""Experiment pipelines: schedule, levels, nesting, box counts and reports."""

from __future__ import annotations

import copy
import csv
import datetime as _dt
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import dimension as dim
from . import error_functions as ef
from .cf_core import ContinuedFraction, estimate_type, load_alpha
from .errors import DlabError, InvalidInputs, ScheduleTooThin
from .exact import default_precision, log_rational, parse_rational, power_enclosure
from .target_sets import (
    DEFAULT_BUDGET,
    LevelGeometry,
    Proxy,
    arc_length,
    build_level,
    build_mass_distribution,
    level_geometry,
    retained_family,
)

DEFAULT_TOLERANCES = {"slope": 0.05, "sandwich": 0.07, "cover_offset": 0.05, "ratio": 0.05}
MAX_DEPTH = 6
GRID_POINTS = 48


# -- configuration ----------------------------------------------------------------


@dataclass
class ExperimentConfig:
    alpha: Any
    phi: dict
    schedule: dict = field(default_factory=lambda: {"mode": "auto", "growth": 10})
    K: str = "auto"
    depth: int = 3
    precision: int = field(default_factory=default_precision)
    tolerances: dict = field(default_factory=dict)
    exact_budget: int = DEFAULT_BUDGET
    name: str = "custom"

    def __post_init__(self):
        if not 1 <= self.depth <= MAX_DEPTH:
            raise InvalidInputs(f"depth must lie in [1, {MAX_DEPTH}]")
        if self.precision < 128:
            raise InvalidInputs("precision must be at least 128 bits")
        if self.K != "auto":
            self.K = str(parse_rational(self.K))
        mode = self.schedule.get("mode", "auto")
        if mode not in ("auto", "explicit"):
            raise InvalidInputs(f"unknown schedule mode {mode!r}")
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"alpha", "phi", "schedule", "K", "depth", "precision", "tolerances", "exact_budget", "name"}
        extra = set(d) - known
        if extra:
            raise InvalidInputs(f"unknown config keys {sorted(extra)}")
        return cls(**copy.deepcopy(d))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "alpha": self.alpha,
            "phi": self.phi,
            "schedule": self.schedule,
            "K": self.K,
            "depth": self.depth,
            "precision": self.precision,
            "tolerances": self.tolerances,
            "exact_budget": self.exact_budget,
        }


PRESETS: dict[str, dict] = {
    # growth 20: at growth 10 the depth-3 slope sits near 0.445 (finite-depth bias)
    "gamma-law": {
        "name": "gamma-law",
        "alpha": "golden",
        "phi": {"family": "power", "gamma": "2"},
        "schedule": {"mode": "auto", "growth": 20},
        "depth": 3,
    },
    "example3": {
        "name": "example3",
        "alpha": {"kind": "band", "lo": "1*q^2", "hi": "2*q^2", "seed_q1": 2},
        "phi": {"family": "example3", "l": "1/3", "u": "1/2"},
        "schedule": {"mode": "auto", "growth": 10},
        "depth": 3,
    },
    "thm5-tower": {
        "name": "thm5-tower",
        "alpha": "golden",
        "phi": {"family": "thm5", "l": "1/3", "u": "1/2"},
        "schedule": {"mode": "auto", "growth": 10},
        "depth": 2,
    },
    "thm4": {
        "name": "thm4",
        "alpha": {"kind": "fixed_type", "beta": "3", "seed_q1": 2},
        "phi": {"family": "thm4", "l": "1/3", "u": "1/2", "beta": "3"},
        "schedule": {"mode": "auto", "growth": 10},
        "depth": 3,
    },
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise InvalidInputs(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ExperimentConfig.from_dict(PRESETS[name])


# -- schedule ---------------------------------------------------------------------


def schedule_indices(cf: ContinuedFraction, count: int, growth, n1: int | None = None) -> list[int]:
    """n_1 = first n >= 1 with q_n >= 2; n_{i+1} minimal with q >= q_{n_i+1}^growth."""
    growth = parse_rational(growth)
    if growth < 1:
        raise InvalidInputs("growth must be at least 1")
    n = n1 if n1 is not None else next(k for k in range(1, 10**6) if cf.q(k) >= 2)
    out = [n]
    while len(out) < count:
        _, target = power_enclosure(cf.q(out[-1] + 1), growth, 64)
        n = out[-1] + 1
        while cf.q(n) < target:
            n += 1
        out.append(n)
    return out


def choose_m(cf: ContinuedFraction, phi: ef.ErrorFunction, ns: list[int]) -> list[tuple[int, int, int]]:
    """m_i in (q_{n_i}, q_{n_i+1}] maximizing log m/(-log phi(m)), larger m on ties,
    subject to m_i - m_{i-1} >= q_{n_i}."""
    levels, m_prev = [], 0
    for n in ns:
        q = cf.q(n)
        lo, hi = max(q + 1, m_prev + q), cf.q(n + 1)
        if lo > hi:
            raise ScheduleTooThin(f"level n_i={n}: no admissible m_i")
        cands = set(ef.geometric_grid(lo, hi, GRID_POINTS)) | {b for b in phi.breakpoints(hi) if lo <= b <= hi}
        best, best_r = None, -1.0
        for m in sorted(cands):
            if phi.enclosure(m)[1] >= 1:
                continue
            r = phi.log_ratio(m)
            if r >= best_r - 1e-12:
                best, best_r = m, max(r, best_r)
        if best is None:
            raise ScheduleTooThin(f"level n_i={n}: phi >= 1 on the whole range")
        levels.append((n, m_prev, best))
        m_prev = best
    return levels


def _bind_phi(spec: dict, cf: ContinuedFraction, ns: list[int]) -> ef.ErrorFunction:
    sub = [cf.q(n) for n in ns]
    return ef.from_spec(spec, alpha=cf, subsequence=sub)


def build_schedule(cfg: ExperimentConfig, cf: ContinuedFraction) -> tuple[ef.ErrorFunction, list[tuple[int, int, int]]]:
    sched = cfg.schedule
    if sched.get("mode", "auto") == "explicit":
        rows = sched["levels"][: cfg.depth]
        if len(rows) < cfg.depth:
            raise InvalidInputs(f"explicit schedule has {len(rows)} levels, depth is {cfg.depth}")
        ns = [int(n) for n, _ in rows]
        phi = _bind_phi(cfg.phi, cf, ns + [ns[-1] + 1])
        levels, prev = [], 0
        for n, m in rows:
            levels.append((int(n), prev, int(m)))
            prev = int(m)
        return phi, levels
    ns = schedule_indices(cf, cfg.depth + 1, sched.get("growth", 10), sched.get("n1"))
    phi = _bind_phi(cfg.phi, cf, ns)
    return phi, choose_m(cf, phi, ns[: cfg.depth])


def level_length(cfg: ExperimentConfig, phi: ef.ErrorFunction, q: int, m: int) -> Fraction:
    """Arc length z_i.  Explicit K: q^-K.  Auto: m_i^(-1/u), capped by phi(m_i)
    so that E_i stays inside the target set when band edges are floored.
    Both rounded down."""
    if cfg.K == "auto":
        u = phi.u
        if u is None:
            raise InvalidInputs("auto K needs a family with a known upper exponent")
        return min(power_enclosure(m, -1 / Fraction(u), 64)[0], phi.enclosure(m)[0])
    return arc_length(q, Fraction(cfg.K))


# -- pipeline -----------------------------------------------------------------------


def _assertion(name: str, ok: bool | None, hard: bool, detail: str, invariant: str) -> dict:
    status = "pass" if ok else ("fail" if hard else "warn")
    if ok is None:
        status = "info"
    return {"name": name, "status": status, "hard": hard, "detail": detail, "invariant": invariant}


def _log10(x: Fraction) -> float | None:
    return log_rational(x) / math.log(10) if x > 0 else None


@dataclass
class Plan:
    """Everything fixed before any arc is built."""

    cf: ContinuedFraction
    phi: ef.ErrorFunction
    levels: list[tuple[int, int, int]]
    lengths: list[Fraction]
    geoms: list[LevelGeometry]
    proxy: Proxy


def plan(cfg: ExperimentConfig) -> Plan:
    cf = load_alpha(cfg.alpha)
    phi, levels = build_schedule(cfg, cf)
    proxy = Proxy.for_range(cf, levels[-1][2], cfg.precision)
    geoms, zs = [], []
    for i, (n, mp, m) in enumerate(levels, start=1):
        z = level_length(cfg, phi, cf.q(n), m)
        zs.append(z)
        try:
            geoms.append(level_geometry(cf, (n, mp, m), z, proxy))
        except DlabError as exc:
            raise type(exc)(f"level {i}: {exc}") from exc
    return Plan(cf, phi, levels, zs, geoms, proxy)


def run_experiment(cfg: ExperimentConfig) -> dict:
    tol = cfg.tolerances
    pl = plan(cfg)
    cf, phi, levels, zs, geoms, proxy = pl.cf, pl.phi, pl.levels, pl.lengths, pl.geoms, pl.proxy
    asserts: list[dict] = []
    for i, (level, z) in enumerate(zip(levels, zs), start=1):
        incl = ef.check_inclusion_threshold(phi, cf, level, z=z)
        asserts.append(_assertion(f"inclusion.level{i}", incl, True, "phi(m_i) >= z_i", "error_functions.check_inclusion_threshold"))

    # exact prefix
    built, fam, actual = [], [], []
    budget = cfg.exact_budget
    for g, z in zip(geoms, zs):
        if g.enumeration_size > budget:
            break
        arcs, _ = build_level(cf, (g.n_i, g.m_prev, g.m_i), z=z, proxy=proxy, budget=budget)
        built.append(arcs)
        budget -= g.enumeration_size
    for i, (arcs, g) in enumerate(zip(built, geoms), start=1):
        actual.append(arcs.component_count)
        sep = g.c > 0 and (g.case_tag == 1 or g.d > 0)
        if g.divisible and sep:
            ok = arcs.component_count == g.predicted_count and set(arcs.component_lengths()) == {g.predicted_length}
            asserts.append(_assertion(f"geometry.level{i}", ok, True, f"case {g.case_tag}: {arcs.component_count} components", "target_sets.build_level"))
    exact_log_children: list[float | None] = []
    if built:
        fam = retained_family(built)
        counts = [f.component_count for f in fam]
        exact_log_children = [math.log(counts[0])] + [math.log(b) - math.log(a) for a, b in zip(counts, counts[1:])]
        asserts.append(_assertion("nesting.nonempty", True, True, f"F_j counts {counts}", "target_sets.intersect_levels"))

    geo = dim.LogGeometry.from_levels(geoms, exact_log_children)
    box = dim.box_count_predicted(geo)
    exact_box = None
    if len(fam) == len(geoms) and len(geoms) >= 2:
        exact_box = dim.box_count(fam[-1], geo.scales())
    slope = (exact_box or box).slope_fit[0]

    # finite-level parameters and formula references
    n_d, _, m_d = levels[-1]
    q_d, q_next = cf.q(n_d), cf.q(n_d + 1)
    N_hat = math.log(m_d) / math.log(q_d)
    B_hat = math.log(q_next) / math.log(q_d)
    K_hat = -log_rational(zs[-1]) / math.log(q_d)
    S_ref = float(dim.S_formula(N_hat, max(B_hat, N_hat), K_hat)) if K_hat > 1 else None
    beta = estimate_type(cf, n_d + 1)
    exps = ef.estimate_exponents(phi, 1, m_d)
    bound = dim.theorem2_lower_bound(exps.u_hat, min(exps.l_hat, exps.u_hat), max(beta.beta_hat, 1.0))
    # later half of the index window, as for the type estimate
    xu = [phi.log_ratio(cf.q(k)) for k in range(max(1, (n_d + 1) // 2), n_d + 2) if cf.q(k) > 1 and phi.enclosure(cf.q(k))[1] < 1]
    L_hat = max(xu) if xu else 0.0

    if S_ref is not None:
        asserts.append(_assertion("box.slope_vs_S", abs(slope - S_ref) <= tol["slope"], False, f"slope {slope:.4f}, S {S_ref:.4f}", "dimension_lab.box_count"))
    asserts.append(
        _assertion(
            "box.xu_sandwich",
            L_hat - tol["sandwich"] <= slope <= exps.u_hat + tol["sandwich"],
            False,
            f"{L_hat:.4f} - tol <= {slope:.4f} <= {exps.u_hat:.4f} + tol",
            "dimension_lab.xu_sandwich",
        )
    )
    cover = {}
    if S_ref is not None:
        levels_e = [(g.predicted_count, g.predicted_length) for g in geoms]
        for tag, s in (("above", S_ref + tol["cover_offset"]), ("below", S_ref - tol["cover_offset"])):
            if 0 < s <= 1:
                sums = dim.cover_log_sums(levels_e, s)
                cover[tag] = {"s": s, "log_sums": sums, "strictly_decreasing": dim.strictly_decreasing(sums)}
        if "above" in cover and len(geoms) > 1:
            asserts.append(_assertion("cover.decay_above_S", cover["above"]["strictly_decreasing"], False, "cover sums at S + offset", "dimension_lab.cover_sum"))

    extra = _family_checks(cfg, cf, phi, asserts, tol)

    report = {
        "config": cfg.to_dict(),
        "alpha": {"quotients": cf.quotients(min(n_d + 2, 24)), "beta_hat": beta.beta_hat, "window": list(beta.window)},
        "levels": [_level_row(i, g, a) for i, (g, a) in enumerate(zip(geoms, actual + [None] * len(geoms)), start=1)],
        "exponents": {"u_hat": exps.u_hat, "l_hat": exps.l_hat, "xu_lower": L_hat},
        "reference": {"N": N_hat, "B": B_hat, "K": K_hat, "S": S_ref, "theorem2_bound": bound},
        "box": _box_dict(box),
        "box_exact": _box_dict(exact_box) if exact_box else None,
        "slope": slope,
        "cover": cover,
        "checks": extra,
        "exact_levels": len(built),
        "assertions": asserts,
        "notes": "tolerances are engineering choices; finite-depth slopes are proxies, not dimensions",
    }
    return finalize(report)


def _level_row(i: int, g: LevelGeometry, actual: int | None) -> dict:
    return {
        "i": i,
        "n_i": g.n_i,
        "m_i": g.m_i,
        "q_ni": g.q,
        "case_tag": g.case_tag,
        "predicted_count": g.predicted_count,
        "actual_count": actual,
        "log10_y_or_z": _log10(g.predicted_length),
        "log10_c_i": _log10(g.c),
        "log10_d_i": _log10(g.d) if g.d is not None else None,
    }


def _box_dict(b: dim.BoxCountReport) -> dict:
    return {
        "log10_scales": [_log10(d) for d in b.scales],
        "log_counts": b.log_counts,
        "slope": b.slope_fit[0],
        "stderr": b.slope_fit[1],
        "local_slopes": b.local_slopes,
    }


def _family_checks(cfg, cf, phi, asserts, tol) -> dict:
    fam = phi.family
    out: dict = {}
    if fam == "thm5":
        out["tower_windows"] = tower_windows(cf, phi)
        hit = [w for w in out["tower_windows"] if w["q_inside"]]
        asserts.append(
            _assertion(
                "thm5.windows",
                None,
                False,
                f"{len(hit)} of {len(out['tower_windows'])} windows (n_i, n_(i+1)^(l/u)) hold a convergent denominator",
                "error_functions.thm5",
            )
        )
    if fam == "example3":
        rows = []
        for k in range(5, 5 + 4):
            r = phi.log_ratio(cf.q(k))
            rows.append({"k": k, "ratio": r})
        out["ratio_at_q"] = rows
        ok = all(abs(r["ratio"] - float(phi.l)) <= tol["ratio"] for r in rows)
        asserts.append(_assertion("example3.ratio_at_q", ok, False, "log q_k/(-log phi(q_k)) near l", "error_functions.estimate_exponents"))
    return out


def tower_windows(cf: ContinuedFraction, phi: ef.ErrorFunction, count: int = 4, cap_bits: int = 4096) -> list[dict]:
    """Per tower index i, the convergent denominators in (n_i, n_{i+1}^(l/u)).

    n_{i+1}^(l/u) = 2^(n_i l/u); windows above 2^cap_bits are scanned only up
    to that cap."""
    ratio = phi.params["l"] / phi.params["u"]
    tower = [2]
    while len(tower) < count:
        tower.append(1 << tower[-1])
    rows = []
    for i, lo in enumerate(tower, start=1):
        bits = lo * ratio
        capped = bits > cap_bits
        hi = 1 << cap_bits if capped else ef.power_floor(1, 2, bits)
        inside, k = [], 0
        while cf.q(k) <= lo:
            k += 1
        while cf.q(k) <= hi:
            inside.append(k)
            k += 1
        rows.append(
            {
                "i": i,
                "n_i": lo,
                "upper_log2": float(bits),
                "capped": capped,
                "q_inside": len(inside),
                "first_indices": inside[:5],
                "xu_ratios": [phi.log_ratio(cf.q(j)) for j in inside[:5]],
            }
        )
    return rows


# -- emission ---------------------------------------------------------------------


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x if abs(x) < 2**53 else _int_text(x)
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return None
        return float(f"{x:.12g}")
    return str(x)


def _int_text(x: int) -> str:
    """Exact decimal up to 4000 digits, else a 30-digit scientific form."""
    if x.bit_length() < 13000:
        return str(x)
    e = x.bit_length() - 110
    head = x >> e
    lg = math.log10(head) + e * math.log10(2)
    exp = math.floor(lg)
    return f"{10 ** (lg - exp):.29f}e{exp}"


def digest(report: dict) -> str:
    body = {k: v for k, v in report.items() if k not in ("timestamp", "digest")}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


def finalize(report: dict) -> dict:
    report = _clean(report)
    report["hard_ok"] = all(a["status"] != "fail" for a in report["assertions"] if a["hard"])
    report["digest"] = digest(report)
    report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return report


def _flatten(x, prefix: str, out: list):
    if isinstance(x, dict) and x:
        for k in sorted(x):
            _flatten(x[k], f"{prefix}.{k}" if prefix else k, out)
    elif isinstance(x, list) and x:
        for i, v in enumerate(x):
            _flatten(v, f"{prefix}.{i}" if prefix else str(i), out)
    else:
        out.append((prefix, json.dumps(x, sort_keys=True)))


def _unflatten(rows) -> dict:
    root: dict = {}
    for key, val in rows:
        parts = key.split(".")
        node = root
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = json.loads(val)
    return _listify(root)


def _listify(x):
    if isinstance(x, dict):
        x = {k: _listify(v) for k, v in x.items()}
        if x and all(k.isdigit() for k in x) and sorted(int(k) for k in x) == list(range(len(x))):
            return [x[str(i)] for i in range(len(x))]
    return x


def dumps(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        rows: list = []
        _flatten(report, "", rows)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def loads(text: str, fmt: str = "json") -> dict:
    if fmt == "json":
        return json.loads(text)
    if fmt == "csv":
        r = csv.reader(io.StringIO(text))
        header = next(r)
        if header != ["key", "value"]:
            raise ValueError("not a report CSV")
        return _unflatten(r)
    raise ValueError(f"unknown format {fmt!r}")


def emit(report: dict, fmt: str = "json", path: str | Path | None = None) -> str:
    text = dumps(report, fmt)
    if path is not None and str(path) != "-":
        Path(path).write_text(text)
    return text
