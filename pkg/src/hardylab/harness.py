"""Reproducible experiment pipeline: per-domain reports, the equivalence
sweep across resolutions, and the content correlation study.

All outputs are deterministic in (config, seed): CSV files are RFC-4180
style, JSON is sorted-key, and no timestamps are emitted.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import calibration
from .capacity import CondenserProblem, solve_capacity
from .content import inner_density_check
from .fatness import default_radii_ladder, fatness_profile, measure_density_check
from .geometry import Ball, build_domain, domain_to_text
from .hardy import (
    ball_average_sweep,
    boundary_poincare_sweep,
    family_integral_sup,
    family_pointwise_sup,
    hardy_certificate,
    test_family,
)


@dataclass
class ExperimentConfig:
    domains: list
    exponents: list = field(default_factory=lambda: [2.0])
    dilatations: list = field(default_factory=lambda: [2.0])
    resolutions: list = field(default_factory=lambda: [32, 64])
    family_count: int = 20
    seed: int = 0
    output_dir: str = "hardylab_out"
    thread_budget: int = 1
    fatness_centers: int = 24
    density_samples: int = 24

    @staticmethod
    def from_json(text):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config is not valid JSON: {exc}") from exc
        if "domains" not in payload or not payload["domains"]:
            raise ValueError("config must list at least one domain")
        known = set(ExperimentConfig.__dataclass_fields__)
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return ExperimentConfig(**payload)

    def validate(self):
        for p in self.exponents:
            if p < 1.0:
                raise ValueError("exponents must be >= 1")
        for L in self.dilatations:
            if L < 1.0:
                raise ValueError("dilatations must be >= 1")
        for r in self.resolutions:
            if r < 8:
                raise ValueError("resolutions must be >= 8 cells per axis")
        if self.family_count < 1:
            raise ValueError("family_count must be >= 1")


TREND_STABLE = "stable"
TREND_DECAYING = "decaying"
TREND_DIVERGING = "diverging"


def trend_tag(values):
    """stable: every refinement step changes the value by at most 2x;
    diverging / decaying: monotone moves by at least 2x per step."""
    vals = [v for v in values if v is not None]
    if len(vals) < 2:
        return TREND_STABLE
    steps = list(zip(vals, vals[1:]))
    if all(b >= 2.0 * a for a, b in steps):
        return TREND_DIVERGING
    if all(b <= a / 2.0 for a, b in steps):
        return TREND_DECAYING
    return TREND_STABLE


@dataclass
class DomainRecord:
    domain: str
    resolution: int
    exponent: float
    c0_estimate: float
    measure_density: float
    boundary_poincare_constant: float
    ball_average_constant: float | None
    pointwise_constant: float
    pointwise_constant_20: float
    integral_quotient_sup: float
    certified_constant: float
    certified: bool
    inner_density_floor: float
    seed: int

    def row(self):
        return [self.domain, self.resolution, self.exponent,
                self.c0_estimate, self.measure_density,
                self.boundary_poincare_constant,
                self.ball_average_constant if self.ball_average_constant is not None else "",
                self.pointwise_constant, self.pointwise_constant_20,
                self.integral_quotient_sup, self.certified_constant,
                int(self.certified), self.inner_density_floor, self.seed]

    HEADER = ["domain", "resolution", "exponent", "c0_estimate",
              "measure_density", "boundary_poincare_constant",
              "ball_average_constant", "pointwise_constant",
              "pointwise_constant_20", "integral_quotient_sup",
              "certified_constant", "certified", "inner_density_floor", "seed"]


def evaluate_domain(spec, resolution, p, config):
    """One (domain, resolution, exponent) pipeline pass."""
    spec = dict(spec)
    spec["resolution"] = resolution
    domain = build_domain(spec)
    family = test_family(domain, p, count=config.family_count, seed=config.seed)

    profile = fatness_profile(domain, p, max_centers=config.fatness_centers)
    md = measure_density_check(domain, max_centers=config.fatness_centers)
    c_b, _ = boundary_poincare_sweep(domain, family, p)
    try:
        c_c, _ = ball_average_sweep(domain, family, p,
                                    max_samples=config.density_samples)
    except ValueError:
        c_c = None
    pw, _ = family_pointwise_sup(domain, family, p, L=2.0)
    pw20, _ = family_pointwise_sup(domain, family, p, L=20.0)
    q_sup = family_integral_sup(domain, family, p)
    if p > 1.0:
        cert = hardy_certificate(domain, family, p, c_b)
        cert_const, certified = cert.final_hardy_constant, cert.certified
        cert_payload = cert.to_json_dict()
    else:
        cert_const, certified, cert_payload = float("inf"), False, None
    dens = inner_density_check(domain, q=1.0, L=2.0,
                               max_samples=config.density_samples)
    record = DomainRecord(
        domain=spec["family"], resolution=resolution, exponent=p,
        c0_estimate=profile.c0_estimate, measure_density=md,
        boundary_poincare_constant=c_b, ball_average_constant=c_c,
        pointwise_constant=pw, pointwise_constant_20=pw20,
        integral_quotient_sup=q_sup, certified_constant=cert_const,
        certified=certified, inner_density_floor=dens.floor, seed=config.seed)
    return record, profile, cert_payload, domain


@dataclass
class EquivalenceReport:
    records: list
    trends: dict
    verdicts: dict
    anomalies: list

    def to_json_dict(self):
        return {
            "records": [dict(zip(DomainRecord.HEADER, r.row())) for r in self.records],
            "trends": self.trends,
            "verdicts": self.verdicts,
            "anomalies": self.anomalies,
        }


TRACKED = ("c0_estimate", "boundary_poincare_constant", "pointwise_constant",
           "integral_quotient_sup", "inner_density_floor")


def build_report(records):
    """Trend tags per (domain, exponent, quantity) across resolutions, the
    verdict matrix, and coherence anomalies (a stable capacity-density floor
    must not coexist with a diverging pointwise constant, and conversely)."""
    trends = {}
    verdicts = {}
    anomalies = []
    keys = sorted({(r.domain, r.exponent) for r in records})
    for dom, p in keys:
        series = sorted((r for r in records if r.domain == dom and r.exponent == p),
                        key=lambda r: r.resolution)
        entry = {}
        for quantity in TRACKED:
            entry[quantity] = trend_tag([getattr(r, quantity) for r in series])
        trends[f"{dom}|p={p:g}"] = entry
        fat_ok = entry["c0_estimate"] != TREND_DECAYING and series[-1].c0_estimate >= 1e-3
        pw_ok = entry["pointwise_constant"] != TREND_DIVERGING
        verdicts[f"{dom}|p={p:g}"] = {
            "capacity_density": "fat" if fat_ok else "degenerate",
            "pointwise_hardy": "holds" if pw_ok else "degenerate",
            "boundary_poincare": entry["boundary_poincare_constant"],
            "inner_density": entry["inner_density_floor"],
        }
        if fat_ok != pw_ok:
            anomalies.append(f"{dom}|p={p:g}: capacity density and pointwise "
                             "constant disagree across refinements")
    return EquivalenceReport(records=records, trends=trends, verdicts=verdicts,
                             anomalies=anomalies)


def render_verdict_matrix(report):
    lines = ["domain/p           capacity_density  pointwise  poincare_trend  density_trend"]
    for key, v in sorted(report.verdicts.items()):
        lines.append(f"{key:18s} {v['capacity_density']:16s} "
                     f"{'holds' if v['pointwise_hardy'] == 'holds' else 'degenerate':10s} "
                     f"{v['boundary_poincare']:14s} {v['inner_density']}")
    return "\n".join(lines) + "\n"


def _write_csv(path, header, rows):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    with open(path, "w", newline="") as fh:
        fh.write(out.getvalue())


def _dump_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def run(config):
    """Execute the full pipeline; returns (report, output files)."""
    config.validate()
    os.makedirs(config.output_dir, exist_ok=True)
    records = []
    files = []
    for spec in config.domains:
        for p in config.exponents:
            for res in config.resolutions:
                record, profile, cert_payload, domain = evaluate_domain(
                    spec, res, p, config)
                records.append(record)
                stem = f"{spec['family']}_p{p:g}_res{res}"
                fat_path = os.path.join(config.output_dir, f"fatness_{stem}.csv")
                with open(fat_path, "w", newline="") as fh:
                    fh.write(profile.to_csv())
                files.append(fat_path)
                if cert_payload is not None:
                    cert_path = os.path.join(config.output_dir,
                                             f"certificate_{stem}.json")
                    _dump_json(cert_path, cert_payload)
                    files.append(cert_path)
    report = build_report(records)
    table = os.path.join(config.output_dir, "equivalence_records.csv")
    _write_csv(table, DomainRecord.HEADER, [r.row() for r in records])
    files.append(table)
    summary = os.path.join(config.output_dir, "equivalence_report.json")
    _dump_json(summary, {"seed": config.seed, **report.to_json_dict()})
    files.append(summary)
    matrix = os.path.join(config.output_dir, "verdict_matrix.txt")
    with open(matrix, "w") as fh:
        fh.write(render_verdict_matrix(report))
    files.append(matrix)
    return report, files


def density_sweep(spec, resolution, q_values, max_samples=24, L=2.0):
    """Inner density floors across content exponents; rows for the CSV."""
    spec = dict(spec)
    spec["resolution"] = resolution
    domain = build_domain(spec)
    rows = []
    for q in q_values:
        rep = inner_density_check(domain, q=q, L=L, max_samples=max_samples)
        rows.append([spec["family"], resolution, q, rep.floor])
    return rows


# ---------------------------------------------------------------------------
# The verify suite: cheap cross-checks of every module against its oracle
# ---------------------------------------------------------------------------


def _check_maximal_properties():
    from .geometry import ScalarField
    from .maximal import MaximalQuery, restricted_maximal
    from .oracles import brute_force_maximal

    dom = build_domain({"family": "half_space", "resolution": 16})
    rng = np.random.default_rng(0)
    f = rng.random(dom.counts)
    out = restricted_maximal(MaximalQuery(ScalarField(dom, f), 0.21)).values
    ref = brute_force_maximal(f, dom.spacing, np.full(dom.counts, 0.21))
    if not np.array_equal(out, ref):
        return "production maximal differs from the exhaustive reference"
    if not (out >= f - 1e-15).all():
        return "maximal function fails to dominate the field"
    g = rng.random(dom.counts)
    mf = restricted_maximal(MaximalQuery(ScalarField(dom, f), 0.3)).values
    mg = restricted_maximal(MaximalQuery(ScalarField(dom, g), 0.3)).values
    mfg = restricted_maximal(MaximalQuery(ScalarField(dom, f + g), 0.3)).values
    if not (mfg <= mf + mg + 1e-12).all():
        return "maximal function is not sublinear"
    small = restricted_maximal(MaximalQuery(ScalarField(dom, f), 0.15)).values
    if not (small <= mf + 1e-15).all():
        return "maximal function is not monotone in the radius cap"
    return None


def _check_capacity_oracle():
    from .oracles import radial_condenser_capacity

    h = 1.0 / 64
    ext = int(np.ceil(2.2 * 64))
    ax = np.arange(-ext, ext + 1) * h
    mask = np.zeros((len(ax), len(ax)), dtype=bool)
    mask[1:-1, 1:-1] = True
    from .geometry import GridDomain

    dom = GridDomain(h, (ax, ax), mask, name="verify_box")
    plate = Ball((0.0, 0.0), 1.0, closed=True).cells(dom)
    window = Ball((0.0, 0.0), 2.0).cells(dom)
    value = solve_capacity(CondenserProblem(dom, plate, window, 2.0)).value
    exact = radial_condenser_capacity(2, 2.0, 1.0, 2.0)
    if abs(value - exact) / exact > 0.02:
        return (f"annulus condenser capacity off by more than 2%: "
                f"{value:.5f} vs {exact:.5f}")
    return None


def _check_scaling_law():
    caps = {}
    for lam, res in ((1, 48), (2, 24)):
        h = 1.0 / res
        ext = int(np.ceil(2.2 * res))
        ax = np.arange(-ext, ext + 1) * h
        mask = np.zeros((len(ax), len(ax)), dtype=bool)
        mask[1:-1, 1:-1] = True
        from .geometry import GridDomain

        dom = GridDomain(h, (ax, ax), mask, name="verify_box")
        plate = Ball((0.0, 0.0), lam * 0.5, closed=True).cells(dom)
        window = Ball((0.0, 0.0), lam * 1.0).cells(dom)
        caps[lam] = solve_capacity(CondenserProblem(dom, plate, window, 1.5)).value
    predicted = 2.0 ** (2 - 1.5) * caps[1]
    if abs(caps[2] - predicted) / predicted > 0.03:
        return "capacity scaling law violated beyond 3%"
    return None


def _check_dyadic_partition():
    from .geometry import dyadic_layers

    dom = build_domain({"family": "annulus", "resolution": 24})
    layers = dyadic_layers(dom)
    union = np.zeros(dom.counts, dtype=int)
    for _, mask in layers:
        union += mask
    if not np.array_equal(union, dom.inside.astype(int)):
        return "dyadic layers do not partition the set"
    return None


def _check_content_oracle():
    from .content import estimate_content
    from .geometry import GridDomain

    h = 1.0 / 16
    ax = np.arange(-10, 11) * h
    mask = np.zeros((21, 21), dtype=bool)
    mask[1:-1, 1:-1] = True
    dom = GridDomain(h, (ax, ax), mask, name="verify_box")
    rng = np.random.default_rng(1)
    target = np.zeros(dom.counts, dtype=bool)
    for i, j in rng.integers(3, 18, size=(10, 2)):
        target[i, j] = True
    est = estimate_content(dom, target, t=1.0, R=4 * h,
                           exact_limit=64, exact_max_radii=3)
    if est.lower_value is None:
        return "exact cover search did not run"
    if est.upper_value > 4.0 * est.lower_value:
        return "greedy cover exceeds four times the exact optimum"
    return None


def _check_harness_determinism():
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        outputs = []
        for sub in ("a", "b"):
            cfg = ExperimentConfig(
                domains=[{"family": "half_space"}],
                exponents=[2.0], resolutions=[24], family_count=4,
                seed=11, output_dir=os.path.join(tmp, sub),
                fatness_centers=6, density_samples=6)
            _, files = run(cfg)
            blob = {}
            for path in files:
                with open(path, "rb") as fh:
                    blob[os.path.basename(path)] = fh.read()
            outputs.append(blob)
        if outputs[0].keys() != outputs[1].keys():
            return "determinism check produced different file sets"
        for name in outputs[0]:
            if outputs[0][name] != outputs[1][name]:
                return f"output file {name} is not byte-deterministic"
    return None


def _check_capie_constants():
    dom = build_domain({"family": "half_space", "resolution": 32})
    from .capacity import cap_comparison_check

    constant = calibration.capie_constant(2, 2.0)
    center = (0.5, 0.484375)
    ball = Ball(center, 0.125)
    plate = Ball(center, 0.125, closed=True).cells(dom)
    rep = cap_comparison_check(dom, ball, plate, 2.0, constant)
    if not (rep.lower_ok and rep.upper_ok):
        return "frozen capacity-measure constant violated on the half space"
    return None


def _check_domain_io():
    dom = build_domain({"family": "annulus", "resolution": 16})
    from .geometry import domain_from_text

    back = domain_from_text(domain_to_text(dom))
    if not np.array_equal(back.inside, dom.inside):
        return "domain text round trip changed the mask"
    return None


VERIFY_CHECKS = [
    ("maximal operator properties", _check_maximal_properties),
    ("annulus condenser oracle", _check_capacity_oracle),
    ("capacity scaling law", _check_scaling_law),
    ("dyadic layer partition", _check_dyadic_partition),
    ("content cover oracle", _check_content_oracle),
    ("capacity-measure comparison constants", _check_capie_constants),
    ("domain text round trip", _check_domain_io),
    ("harness determinism", _check_harness_determinism),
]


def verify(stream=None):
    """Run the invariant suite on tiny instances; returns the failure list."""
    failures = []
    for name, check in VERIFY_CHECKS:
        started = time.time()
        message = check()
        status = "ok" if message is None else "FAIL"
        if stream is not None:
            stream.write(f"{status:4s} {name} ({time.time() - started:.1f}s)\n")
            if message:
                stream.write(f"     {message}\n")
        if message:
            failures.append((name, message))
    return failures
