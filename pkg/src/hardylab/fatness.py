"""Capacity-density (uniform fatness) profiling of complement sets.

For sampled centers x in the complement and dyadic radii r, the profile
records cap_p(complement ∩ closed B(x,r), B(x,2r)) against the reference
cap_p(closed B(x,r), B(x,2r)); the infimum estimate of the ratio is the
fatness constant at the sampled scales.  Reference capacities are
translation invariant across cell centers, so they are solved once per
radius.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .capacity import CondenserProblem, solve_capacity
from .geometry import Ball


@dataclass
class FatnessSample:
    center: tuple
    radius: float
    numerator_cap: float
    denominator_cap: float

    @property
    def ratio(self):
        if self.denominator_cap == 0.0:
            return 0.0
        return self.numerator_cap / self.denominator_cap


@dataclass
class FatnessProfile:
    set_label: str
    exponent: float
    samples: list = field(default_factory=list)
    radii_ladder: tuple = ()
    skipped: int = 0

    @property
    def c0_estimate(self):
        if not self.samples:
            raise ValueError("no admissible samples")
        return min(s.ratio for s in self.samples)

    def to_csv(self):
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\r\n")
        dim = len(self.samples[0].center) if self.samples else 0
        header = [f"center_{ax}" for ax in "xyz"[:dim]]
        writer.writerow(header + ["radius", "numerator_cap", "denominator_cap", "ratio"])
        for s in self.samples:
            writer.writerow([repr(c) for c in s.center]
                            + [repr(s.radius), repr(s.numerator_cap),
                               repr(s.denominator_cap), repr(s.ratio)])
        return out.getvalue()

    def to_json_dict(self):
        return {
            "set_label": self.set_label,
            "exponent": self.exponent,
            "c0_estimate": self.c0_estimate,
            "radii_ladder": list(self.radii_ladder),
            "sample_count": len(self.samples),
            "skipped": self.skipped,
        }


def farthest_point_thinning(points, limit):
    """Deterministic farthest-point subsample: start at the lexicographically
    first point, repeatedly add the point farthest from the chosen set."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n <= limit:
        return np.arange(n)
    chosen = [0]
    dist = np.linalg.norm(points - points[0], axis=1)
    for _ in range(limit - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return np.array(sorted(chosen))


def default_radii_ladder(domain, min_cells=4):
    h = domain.spacing
    extent = min(c * h for c in domain.counts)
    radii = []
    r = min_cells * h
    while r <= extent / 4.0 + 1e-12:
        radii.append(r)
        r *= 2.0
    if not radii:
        raise ValueError("box too small for the fatness radii ladder")
    return tuple(radii)


def complement_centers(domain, reach, max_centers):
    """Complement cells within `reach` of the set boundary, thinned by
    farthest-point selection; returns (index array Mxdim, coordinates)."""
    boundary = domain.boundary_mask()
    dist_to_boundary = ndimage.distance_transform_edt(
        ~boundary, sampling=(domain.spacing,) * domain.dim)
    cand = domain.complement & (dist_to_boundary <= reach)
    idx = np.argwhere(cand)
    if len(idx) == 0:
        raise ValueError("no complement cells near the boundary")
    coords = np.stack([domain.axes[k][idx[:, k]] for k in range(domain.dim)], axis=1)
    keep = farthest_point_thinning(coords, max_centers)
    return idx[keep], coords[keep]


def fatness_profile(domain, p, max_centers=48, radii=None, tol=1e-6):
    """Capacity-density profile of the complement set.

    Samples with the doubled ball outside the bounding box are skipped; an
    empty admissible sample set is an error.
    """
    if radii is None:
        radii = default_radii_ladder(domain)
    _, coords = complement_centers(domain, 4.0 * max(radii), 16 * max_centers)
    reference = {}
    profile = FatnessProfile(set_label=domain.name, exponent=p, radii_ladder=tuple(radii))
    comp = domain.complement
    for r in radii:
        ok = [i for i in range(len(coords))
              if Ball(tuple(coords[i]), 2.0 * r).inside_box(
                  domain, margin=3.0 * domain.spacing)]
        profile.skipped += len(coords) - len(ok)
        if not ok:
            continue
        ok = np.asarray(ok)
        keep = farthest_point_thinning(coords[ok], max_centers)
        for center in coords[ok[keep]]:
            center_t = tuple(float(c) for c in center)
            ball2 = Ball(center_t, 2.0 * r)
            closed = Ball(center_t, r, closed=True).cells(domain)
            window = ball2.cells(domain)
            plate = comp & closed
            if not plate.any():
                profile.skipped += 1
                continue
            num = solve_capacity(CondenserProblem(domain, plate, window, p)).value
            if r not in reference:
                reference[r] = solve_capacity(
                    CondenserProblem(domain, closed, window, p)).value
            den = reference[r]
            if num > den * (1.0 + tol):
                raise AssertionError(
                    f"plate monotonicity violated at {center_t}, r={r}: {num} > {den}")
            profile.samples.append(FatnessSample(center_t, float(r), num, den))
    if not profile.samples:
        raise ValueError("no admissible samples")
    return profile


def measure_density_check(domain, max_centers=64, radii=None):
    """Minimum of mu(B ∩ complement)/mu(B) over sampled boundary-near centers;
    a positive floor certifies the measure-density sufficient condition."""
    if radii is None:
        radii = default_radii_ladder(domain)
    _, coords = complement_centers(domain, 4.0 * max(radii), 16 * max_centers)
    comp = domain.complement
    worst = np.inf
    for r in radii:
        ok = [i for i in range(len(coords))
              if Ball(tuple(coords[i]), r).inside_box(domain)]
        if not ok:
            continue
        ok = np.asarray(ok)
        keep = farthest_point_thinning(coords[ok], max_centers)
        for center in coords[ok[keep]]:
            ball = Ball(tuple(float(c) for c in center), r)
            cells = ball.cells(domain)
            mu = cells.sum()
            if mu == 0:
                continue
            worst = min(worst, float((cells & comp).sum()) / float(mu))
    if not np.isfinite(worst):
        raise ValueError("no admissible samples")
    return worst


def fatness_verdict(c0_coarse, c0_fine, threshold=1e-3):
    """'fat' when the estimate clears the threshold and does not decay by more
    than 2x under one refinement."""
    stable = c0_fine >= c0_coarse / 2.0
    return bool(c0_fine >= threshold and stable)


def self_improvement_probe(domain, p, offsets=(0.25, 0.5), **kwargs):
    """Fatness estimates at exponents slightly below p (the profile can only
    exhibit the expected improvement, not determine the optimal exponent)."""
    out = {}
    for off in offsets:
        q = p - off
        if q <= 1.0:
            continue
        out[q] = fatness_profile(domain, q, **kwargs).c0_estimate
    return out
