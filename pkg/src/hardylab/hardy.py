"""Pointwise and integral Hardy machinery on grid domains.

Implements the test-function family, the pointwise (and fractional) Hardy
ratio fields, the boundary Poincare and ball-average conditions, the integral
Hardy quotient, the dyadic-layer absorption certificate that converts a
boundary Poincare constant into a certified integral Hardy constant, and the
replay experiment that recovers capacity density from a pointwise constant.

All constants are family-relative lower bounds for the true suprema; the
family is deterministic in (domain, seed) and contains the known extremal
shapes (distance powers, bumps, products, and log profiles in the distance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import CondenserProblem, solve_capacity
from .geometry import (
    Ball,
    ScalarField,
    dyadic_layers,
    gradient_values,
    p_energy,
)
from .maximal import MaximalQuery, ball_mean, restricted_maximal

POWER_GAMMAS = (2.0, 1.5, 1.25, 1.0, 0.875, 0.75, 0.625, 0.5625, 0.5,
                0.4375, 0.375, 0.3125, 0.25)


def test_family(domain, p, count=30, seed=0):
    """Deterministic family of admissible functions vanishing outside the set:
    distance powers, smooth interior bumps, their products, and log-in-distance
    profiles; all scaled to unit sup."""
    if count < 1:
        raise ValueError("count must be >= 1")
    d = domain.distances().d
    inside = domain.inside
    dmax = float(d.max())
    members = []

    def push(values, label):
        v = np.where(inside, values, 0.0)
        top = np.abs(v).max()
        if top > 0:
            members.append(ScalarField(domain, v / top))
            members[-1].label = label

    for gamma in POWER_GAMMAS:
        push((d / dmax) ** gamma, f"power:{gamma:g}")

    # log-in-distance profiles, near extremal at the borderline exponent
    h = domain.spacing
    for d0_cells, frac in ((2.0, 0.25), (4.0, 0.5)):
        d0 = d0_cells * h
        d1 = max(frac * dmax, 2.0 * d0)
        with np.errstate(divide="ignore"):
            prof = np.log(np.maximum(d, 1e-300) / d0) / math.log(d1 / d0)
        push(np.clip(prof, 0.0, 1.0), f"logband:{d0_cells:g}:{frac:g}")

    rng = np.random.default_rng(seed)
    grids = domain.meshgrid()
    eligible = np.argwhere(inside & (d >= 0.3 * dmax))
    power_half = (d / dmax) ** 0.5
    power_one = d / dmax
    while len(members) < count and len(eligible) > 0:
        i = int(rng.integers(0, len(eligible)))
        idx = tuple(eligible[i])
        center = tuple(domain.axes[k][idx[k]] for k in range(domain.dim))
        rho = float(rng.uniform(0.35, 1.0)) * float(d[idx])
        r2 = np.zeros(domain.counts)
        for k in range(domain.dim):
            r2 = r2 + (grids[k] - center[k]) ** 2
        taper = np.clip(1.0 - np.sqrt(r2) / rho, 0.0, 1.0)
        bump = np.sin(0.5 * np.pi * taper) ** 2
        n_so_far = len(members)
        if n_so_far % 3 == 2:
            push(bump * power_half, f"bump*sqrt:{n_so_far}")
        elif n_so_far % 3 == 1:
            push(bump * power_one, f"bump*lin:{n_so_far}")
        else:
            push(bump, f"bump:{n_so_far}")
    return members[:count]


@dataclass
class PointwiseReport:
    ratios: np.ndarray
    sup: float
    percentile_999: float
    zero_denominator_cells: int
    alpha: float
    dilatation: float


def _pointwise_ratio(domain, u, p, alpha, L, dist):
    g = gradient_values(u.values, domain.spacing)
    query = MaximalQuery(field=ScalarField(domain, g ** p),
                         radius_cap=L * dist, alpha=alpha)
    m = restricted_maximal(query).values
    inside = domain.inside
    with np.errstate(divide="ignore", invalid="ignore"):
        den = dist ** (1.0 - alpha / p) * m ** (1.0 / p)
    num = np.abs(u.values)
    ratios = np.zeros(domain.counts)
    ok = inside & (den > 0.0)
    ratios[ok] = num[ok] / den[ok]
    bad = int((inside & (den == 0.0) & (num > 0.0)).sum())
    vals = ratios[inside]
    return PointwiseReport(
        ratios=ratios,
        sup=float(vals.max()) if vals.size else 0.0,
        percentile_999=float(np.percentile(vals, 99.9)) if vals.size else 0.0,
        zero_denominator_cells=bad,
        alpha=alpha,
        dilatation=L,
    )


def pointwise_hardy_check(domain, u, p, L=2.0, use_boundary_distance=False):
    """Per-cell ratio |u| / (dist * (M_{L dist} g^p)^{1/p}) and its supremum.

    Cells where u vanishes contribute zero; a vanishing denominator under a
    nonzero numerator is counted in zero_denominator_cells.
    """
    if L < 1.0:
        raise ValueError("dilatation must be >= 1")
    fields = domain.distances()
    dist = fields.delta if use_boundary_distance else fields.d
    return _pointwise_ratio(domain, u, p, 0.0, L, dist)


def fractional_pointwise_check(domain, u, p, alpha, L=20.0):
    """Fractional variant |u| / (dist^(1-a/p) (M_{a, L dist} g^p)^(1/p));
    alpha = 0 coincides with pointwise_hardy_check at the same dilatation."""
    if not 0.0 <= alpha < p:
        raise ValueError("need 0 <= alpha < p")
    dist = domain.distances().d
    return _pointwise_ratio(domain, u, p, float(alpha), L, dist)


def family_pointwise_sup(domain, family, p, L=2.0, use_boundary_distance=False):
    sup = 0.0
    flagged = 0
    for u in family:
        rep = pointwise_hardy_check(domain, u, p, L, use_boundary_distance)
        sup = max(sup, rep.sup)
        flagged += rep.zero_denominator_cells
    return sup, flagged


@dataclass
class RatioReport:
    ratio: float
    flagged: bool


def boundary_poincare_check(domain, u, p, center, radius):
    """int_B |u|^p against r^p int_{5B} g_u^p for a ball centered in the
    complement; the suite constant is the maximum over balls and members."""
    ball = Ball(center, radius)
    if not ball.scaled(5.0).inside_box(domain):
        raise ValueError("5B must lie inside the bounding box")
    cells = ball.cells(domain)
    num = float((np.abs(u.values[cells]) ** p).sum()) * domain.cell_volume
    g = gradient_values(u.values, domain.spacing)
    five = ball.scaled(5.0).cells(domain)
    den = radius ** p * p_energy(domain, g, p, region=five)
    if den == 0.0:
        return RatioReport(0.0, num > 0.0)
    return RatioReport(num / den, False)


def ball_average_check(domain, u, p, index):
    """|u_{B_x}|^p against d(x)^p times the mean of g^p over 20 B_x."""
    d = domain.distances().d
    dx = float(d[index])
    if dx <= 0:
        raise ValueError("sample cell must lie inside the set")
    center = tuple(domain.axes[k][index[k]] for k in range(domain.dim))
    big = Ball(center, 20.0 * dx)
    if not big.inside_box(domain):
        raise ValueError("20 B_x must lie inside the bounding box")
    mean_u = ball_mean(u.values, domain, center, dx)
    g = gradient_values(u.values, domain.spacing)
    mean_g = ball_mean(g, domain, center, 20.0 * dx, power=p)
    den = dx ** p * mean_g
    num = abs(mean_u) ** p
    if den == 0.0:
        return RatioReport(0.0, num > 0.0)
    return RatioReport(num / den, False)


def boundary_poincare_sweep(domain, family, p, max_centers=12, radii=None):
    """Suite constant for the boundary Poincare condition.  Centers are thinned
    per radius among the complement cells whose dilated ball fits the box."""
    from .fatness import complement_centers, default_radii_ladder, farthest_point_thinning

    if radii is None:
        # the 5-fold dilation must fit the box, which caps usable radii;
        # the condition itself carries no radius floor, so start at 2h
        extent = min(c * domain.spacing for c in domain.counts)
        h = domain.spacing
        radii = []
        r = 2.0 * h
        while r <= extent / 10.0:
            radii.append(r)
            r *= 2.0
        if not radii:
            radii = [2.0 * h]
    _, coords = complement_centers(domain, 4.0 * max(radii), 8 * max_centers)
    worst = 0.0
    flagged = 0
    used = 0
    for r in radii:
        ok = [i for i in range(len(coords))
              if Ball(tuple(coords[i]), 5.0 * r).inside_box(domain)]
        if not ok:
            continue
        ok = np.asarray(ok)
        keep = farthest_point_thinning(coords[ok], max_centers)
        for center in coords[ok[keep]]:
            center_t = tuple(float(c) for c in center)
            used += 1
            for u in family:
                rep = boundary_poincare_check(domain, u, p, center_t, r)
                worst = max(worst, rep.ratio)
                flagged += rep.flagged
    if used == 0:
        raise ValueError("no admissible boundary balls")
    return worst, flagged


def ball_average_sweep(domain, family, p, max_samples=24):
    """Suite constant for the ball-average condition (samples with the
    dilated ball inside the box)."""
    from .fatness import farthest_point_thinning

    d = domain.distances().d
    idx = np.argwhere(domain.inside & (d >= domain.spacing))
    coords = np.stack([domain.axes[k][idx[:, k]] for k in range(domain.dim)], axis=1)
    admissible = []
    for i in range(len(idx)):
        if Ball(tuple(coords[i]), 20.0 * float(d[tuple(idx[i])])).inside_box(domain):
            admissible.append(i)
    if not admissible:
        raise ValueError("no admissible ball-average samples")
    admissible = np.asarray(admissible)
    keep = farthest_point_thinning(coords[admissible], max_samples)
    worst = 0.0
    flagged = 0
    for i in admissible[keep]:
        index = tuple(idx[i])
        for u in family:
            rep = ball_average_check(domain, u, p, index)
            worst = max(worst, rep.ratio)
            flagged += rep.flagged
    return worst, flagged


def integral_hardy_quotient(domain, u, p, use_boundary_distance=False):
    """int |u|^p dist^-p over the set divided by int g_u^p over the set.

    Both integrals run over inside cells only (family members vanish
    continuously at the set boundary, so no gradient mass hides in the
    complement-side shell)."""
    if not np.any(u.values):
        raise ValueError("quotient undefined for the zero function")
    fields = domain.distances()
    dist = fields.delta if use_boundary_distance else fields.d
    inside = domain.inside
    num = float((np.abs(u.values[inside]) ** p
                 * dist[inside] ** (-p)).sum()) * domain.cell_volume
    g = gradient_values(u.values, domain.spacing)
    den = p_energy(domain, g, p, region=inside)
    if den == 0.0:
        raise ValueError("admissible function with zero energy")
    return num / den


def family_integral_sup(domain, family, p):
    return max(integral_hardy_quotient(domain, u, p) for u in family)


def power_probe_gammas(domain):
    """Resolution-coupled power ladder 2, 1, 1/2, ... down to the smallest
    exponent the grid can distinguish from the plateau (~ h / max distance);
    the tail probes the gamma -> 0 end of the family."""
    d = domain.distances().d
    floor = domain.spacing / float(d.max())
    gammas = []
    g = 2.0
    while g >= floor:
        gammas.append(g)
        g /= 2.0
    return tuple(gammas)


def power_quotient_probe(domain, p, L=2.0):
    """Integral quotient supremum and pointwise supremum over the power
    ladder; at p = 1 the integral side grows with resolution (the one-end
    of the dichotomy) while the pointwise side stays bounded."""
    d = domain.distances().d
    dmax = float(d.max())
    int_sup = 0.0
    pw_sup = 0.0
    for gamma in power_probe_gammas(domain):
        u = ScalarField(domain, np.where(domain.inside, (d / dmax) ** gamma, 0.0))
        int_sup = max(int_sup, integral_hardy_quotient(domain, u, p))
        pw_sup = max(pw_sup, pointwise_hardy_check(domain, u, p, L=L).sup)
    return int_sup, pw_sup


@dataclass
class AbsorptionTrace:
    exponent: float
    beta: float
    boundary_constant: float
    layered_constant: float
    final_hardy_constant: float
    layer_terms: list = field(default_factory=list)
    member_quotients: list = field(default_factory=list)
    certified: bool = False
    partition_gap: float = 0.0

    def to_json_dict(self):
        return {
            "exponent": self.exponent,
            "beta": self.beta,
            "boundary_constant": self.boundary_constant,
            "layered_constant": self.layered_constant,
            "final_hardy_constant": self.final_hardy_constant,
            "layer_terms": self.layer_terms,
            "member_quotients": self.member_quotients,
            "certified": self.certified,
            "partition_gap": self.partition_gap,
        }


def absorption_beta(p, boundary_constant):
    """Weight exponent small enough that the weighted gradient term can be
    absorbed: beta = min(1/2, (p^p / (2 C_b))^(1/(p-1)))."""
    if p <= 1.0:
        raise ValueError("the absorption pipeline requires p > 1")
    if boundary_constant <= 0.0:
        raise ValueError("boundary constant must be positive")
    return min(0.5, (p ** p / (2.0 * boundary_constant)) ** (1.0 / (p - 1.0)))


def hardy_certificate(domain, family, p, boundary_constant):
    """Certified integral Hardy constant from dyadic-layer sums.

    Each member v is reweighted to v * d^(beta/p) and the layer sum

        L = sum_k 2^(k(p+beta)) int_{layer k} |v d^(b/p)|^p

    dominates int v^p d^-p exactly (the band weight bounds d^(-p-beta) from
    above and the d^beta factors cancel).  The layered-sum constant is
    beta * max over members of L / int_set g_v^p, so the certificate
    2 * layered / beta dominates every member's integral quotient by
    construction; the trace also records the weighted-gradient layer terms

        R_k = 2^(k beta) int_{layer k} (g_v d^(b/p) + (b/p) v d^(b/p-1))^p

    that drive the absorption step.
    """
    beta = absorption_beta(p, boundary_constant)
    layers = dyadic_layers(domain)
    d = domain.distances().d
    inside = domain.inside
    vol = domain.cell_volume
    h = domain.spacing

    best_ratio = 0.0
    best_terms = []
    quotients = []
    partition_gap = 0.0
    for u in family:
        v = u.values
        g_v = gradient_values(v, h)
        with np.errstate(divide="ignore", invalid="ignore"):
            w_pow = np.where(inside, d ** (beta / p), 0.0)
            w_pow_minus = np.where(inside, d ** (beta / p - 1.0), 0.0)
        weighted = np.abs(v) * w_pow
        g_formula = g_v * w_pow + (beta / p) * np.abs(v) * w_pow_minus
        lhs_terms = []
        lhs = 0.0
        direct = 0.0
        for k, mask in layers:
            lk = 2.0 ** (k * (p + beta)) * float((weighted[mask] ** p).sum()) * vol
            rk = 2.0 ** (k * beta) * float((g_formula[mask] ** p).sum()) * vol
            lhs += lk
            lhs_terms.append((k, lk, rk))
            direct += float((np.abs(v[mask]) ** p * d[mask] ** (-p)).sum()) * vol
        whole = float((np.abs(v[inside]) ** p * d[inside] ** (-p)).sum()) * vol
        partition_gap = max(partition_gap,
                            abs(direct - whole) / max(whole, 1e-300))
        energy = p_energy(domain, g_v, p, region=inside)
        q = integral_hardy_quotient(domain, u, p)
        quotients.append(q)
        if energy > 0 and lhs / energy > best_ratio:
            best_ratio = lhs / energy
            best_terms = lhs_terms
    layered = beta * best_ratio
    final = 2.0 * layered / beta
    return AbsorptionTrace(
        exponent=p,
        beta=beta,
        boundary_constant=boundary_constant,
        layered_constant=layered,
        final_hardy_constant=final,
        layer_terms=[{"k": k, "lhs": a, "rhs": b} for k, a, b in best_terms],
        member_quotients=quotients,
        certified=bool(all(q <= final * (1.0 + 1e-9) for q in quotients)),
        partition_gap=partition_gap,
    )


@dataclass
class ReplaySample:
    center: tuple
    radius: float
    mean_branch: bool
    level_measure_ok: bool
    coverage_ok: bool
    per_ball_ok: bool
    implied_lower: float
    direct_capacity: float

    @property
    def bound_ok(self):
        return self.implied_lower <= self.direct_capacity * (1.0 + 1e-9)


@dataclass
class ReplayReport:
    exponent: float
    dilatation: float
    cutoff_level: float
    samples: list = field(default_factory=list)

    @property
    def all_ok(self):
        ok = True
        for s in self.samples:
            ok &= s.level_measure_ok
            if not s.mean_branch:
                ok &= s.coverage_ok and s.per_ball_ok and s.bound_ok
        return bool(ok)


def fatness_from_pointwise_experiment(domain, p, L=2.0, max_samples=4, radii=None):
    """Replays the construction that converts a pointwise Hardy bound into a
    capacity density bound at sampled complement balls.

    For each sampled (w, R): solve the condenser for v, build the cutoff psi,
    set u = min(psi, 1 - v), check the level-set measure bound
    mu({u > C1} ∩ lB) >= C1 mu(B), disjointify near-maximizing balls, verify
    the per-ball capacity step, and compare the implied lower capacity bound
    with the directly solved capacity.  Discrepancies are reported, not fatal.
    """
    from .fatness import complement_centers, default_radii_ladder

    n = domain.dim
    c_doubling = 2.0 ** n
    level_l = 1.0 / (2.0 * (L + 1.0))
    c1 = level_l ** n / (4.0 * c_doubling)
    if radii is None:
        radii = default_radii_ladder(domain)[-2:]
    # the level-set ball lB must span at least one cell
    radii = [r for r in radii if level_l * r >= domain.spacing]
    if not radii:
        raise ValueError("all radii below the level-ball resolution floor")
    from .fatness import farthest_point_thinning

    # level-set counting needs windows that straddle the set boundary, so the
    # replay samples boundary cells themselves
    _, coords = complement_centers(domain, 0.0, 16 * max_samples)
    comp = domain.complement
    dist = domain.distances().d
    grids = domain.meshgrid()
    h = domain.spacing
    report = ReplayReport(exponent=p, dilatation=L, cutoff_level=c1)

    for radius in radii:
        ok = [i for i in range(len(coords))
              if Ball(tuple(coords[i]), 2.0 * radius).inside_box(
                  domain, margin=3.0 * domain.spacing)]
        if not ok:
            continue
        ok = np.asarray(ok)
        keep = farthest_point_thinning(coords[ok], max_samples)
        for center in coords[ok[keep]]:
            w = tuple(float(c) for c in center)
            ball2 = Ball(w, 2.0 * radius)
            closed = Ball(w, radius, closed=True).cells(domain)
            plate = comp & closed
            if not plate.any():
                continue
            window = ball2.cells(domain)
            res = solve_capacity(CondenserProblem(domain, plate, window, p))
            v = res.extremal.values
            ball1 = Ball(w, radius)
            mu_b = ball1.measure(domain)
            v_mean = ball_mean(v, domain, w, radius)
            mean_branch = v_mean > level_l ** n / (2.0 * c_doubling)
            r2 = np.zeros(domain.counts)
            for k in range(domain.dim):
                r2 = r2 + (grids[k] - w[k]) ** 2
            dist_to_half = np.maximum(np.sqrt(r2) - radius / 2.0, 0.0)
            psi = np.clip(1.0 - 4.0 / radius * dist_to_half, 0.0, 1.0)
            u = np.minimum(psi, 1.0 - v)
            u = np.where(domain.inside, u, 0.0)
            small = Ball(w, level_l * radius).cells(domain)
            level = small & (u > c1)
            mu_level = domain.measure(level)
            level_ok = mu_level >= c1 * mu_b * (1.0 - 1e-9)

            g_u = gradient_values(u, h)
            query = MaximalQuery(field=ScalarField(domain, g_u ** p),
                                 radius_cap=L * dist)
            m_field, arg_r = restricted_maximal(query, return_argmax=True)
            m = m_field.values
            idx = np.argwhere(level & (m > 0.0))
            entries = []
            for cell in map(tuple, idx):
                x = tuple(domain.axes[k][cell[k]] for k in range(domain.dim))
                entries.append((float(arg_r[cell]), x, cell))
            entries.sort(key=lambda t: (-t[0], t[1]))
            kept = []
            for r_i, x, cell in entries:
                if all((sum((x[k] - y[k]) ** 2 for k in range(n))) ** 0.5
                       > r_i + r_j for r_j, y, _ in kept):
                    kept.append((r_i, x, cell))
            covered = np.zeros(domain.counts, dtype=bool)
            for r_i, x, _ in kept:
                covered |= Ball(x, 5.0 * r_i).cells(domain)
            coverage_ok = bool(((level & (m > 0.0)) & ~covered).sum() == 0)

            per_ball_ok = True
            sum_mu = 0.0
            sum_mu5 = 0.0
            energy_sum = 0.0
            c_h_local = 0.0
            for r_i, x, cell in kept:
                ratio = u[cell] / (dist[cell] * m[cell] ** (1.0 / p))
                c_h_local = max(c_h_local, ratio)
            for r_i, x, cell in kept:
                mu_i = Ball(x, r_i).measure(domain)
                e_i = ball_mean(g_u, domain, x, r_i, power=p) * mu_i
                bound = (c_h_local * dist[cell] / c1) ** p * e_i
                if mu_i > bound * (1.0 + 1e-9):
                    per_ball_ok = False
                sum_mu += mu_i
                sum_mu5 += Ball(x, 5.0 * r_i).measure(domain)
                energy_sum += e_i
            c5 = sum_mu5 / sum_mu if sum_mu > 0 else c_doubling ** 3
            implied = 0.0
            if kept and level_ok and coverage_ok and per_ball_ok and c_h_local > 0:
                implied = (mu_b * c1 ** (p + 1)
                           / (c5 * (c_h_local * level_l) ** p * radius ** p))
            report.samples.append(ReplaySample(
                w, radius, mean_branch, level_ok, coverage_ok, per_ball_ok,
                implied, res.value))
    if not report.samples:
        raise ValueError("no admissible replay samples")
    return report
