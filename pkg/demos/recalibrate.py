"""Recompute the frozen suite constants in hardylab.calibration.

Run after changing discretization conventions; paste the printed dictionary
back into src/hardylab/calibration.py.  The capacity-measure constant per
(dim, exponent) is the maximum two-sided ratio observed over the built-in
domain suite at 64 cells per unit, inflated by 25% headroom.
"""

import json

import numpy as np

from hardylab.capacity import CondenserProblem, solve_capacity, sobolev_capacity_ratio
from hardylab.fatness import complement_centers, default_radii_ladder
from hardylab.geometry import Ball, ScalarField, build_domain
from hardylab.hardy import test_family
from hardylab.maximal import telescoping_check

SUITE = [
    {"family": "half_space"},
    {"family": "quarter_space"},
    {"family": "punctured_ball"},
    {"family": "slit_disk"},
    {"family": "exterior_cusp"},
    {"family": "cantor_complement"},
    {"family": "annulus"},
]


def capie_ratios(domain, p, max_centers=8, min_cells=4):
    """Two-sided capacity-measure ratios over plates inside sampled balls."""
    from hardylab.fatness import farthest_point_thinning

    ladder = default_radii_ladder(domain, min_cells=min_cells)
    _, pool = complement_centers(domain, 4.0 * max(ladder), 16 * max_centers)
    worst = 0.0
    rng = np.random.default_rng(0)
    for r in ladder:
        ok = [i for i in range(len(pool))
              if Ball(tuple(pool[i]), 2.0 * r).inside_box(
                  domain, margin=3.0 * domain.spacing)]
        if not ok:
            continue
        ok = np.asarray(ok)
        keep = farthest_point_thinning(pool[ok], max_centers)
        for center in pool[ok[keep]]:
            center_t = tuple(float(c) for c in center)
            ball = Ball(center_t, r)
            closed = Ball(center_t, r, closed=True).cells(domain)
            plates = {
                "ball": closed,
                "complement": closed & domain.complement,
            }
            single = np.zeros(domain.counts, dtype=bool)
            idx = np.argwhere(closed)
            single[tuple(idx[len(idx) // 2])] = True
            plates["cell"] = single
            random_plate = closed & (rng.random(domain.counts) < 0.3)
            if random_plate.any():
                plates["random"] = random_plate
            window = ball.scaled(2.0).cells(domain)
            mu_ball = ball.measure(domain)
            for plate in plates.values():
                if not plate.any():
                    continue
                cap = solve_capacity(CondenserProblem(domain, plate, window, p)).value
                if cap == 0.0:
                    continue
                mu_e = domain.measure(plate)
                worst = max(worst,
                            mu_e / (cap * r ** p),    # lower-bound direction
                            cap * r ** p / mu_ball)   # upper-bound direction
    return worst


def run_capie(resolution):
    table = {}
    for p in (1.5, 2.0, 3.0):
        worst = 0.0
        for spec in SUITE:
            spec = dict(spec)
            spec["resolution"] = resolution
            domain = build_domain(spec)
            worst = max(worst, capie_ratios(domain, p))
        table[(2, p)] = worst
        print(f"capie n=2 p={p}: res{resolution} worst={worst:.4f}")
    # one-dimensional interval and a coarse 3-d half space
    for p in (1.5, 2.0, 3.0):
        dom = build_domain({"family": "interval_1d", "resolution": resolution})
        table[(1, p)] = capie_ratios(dom, p, max_centers=4)
        print(f"capie n=1 p={p}: worst={table[(1, p)]:.4f}")
    dom3 = build_domain({"family": "half_space", "resolution": 16, "dim": 3})
    table[(3, 2.0)] = capie_ratios(dom3, 2.0, max_centers=4, min_cells=2)
    print(f"capie n=3 p=2: worst={table[(3, 2.0)]:.4f}")
    return table


def run_embedding(resolution=64):
    out = {}
    for p in (1.5, 2.0, 3.0):
        worst = 0.0
        for spec in SUITE[:4]:
            spec = dict(spec)
            spec["resolution"] = resolution
            domain = build_domain(spec)
            family = test_family(domain, p, count=8, seed=3)
            extent = min(c * domain.spacing for c in domain.counts)
            # ball at the box center so the 5-fold dilation always fits
            idx = tuple(c // 2 for c in domain.counts)
            center = domain.cell_center(idx)
            r = extent / 12.0
            if r < 2 * domain.spacing:
                continue
            ball = Ball(center, r)
            for u in family:
                rep = sobolev_capacity_ratio(u, ball, p)
                if not rep.vacuous:
                    worst = max(worst, rep.ratio)
        out[p] = worst
        print(f"embedding p={p}: worst={worst:.4f}")
    return out


def run_telescoping(resolution=64):
    worst = 0.0
    for spec in SUITE[:4]:
        spec = dict(spec)
        spec["resolution"] = resolution
        domain = build_domain(spec)
        family = test_family(domain, 2.0, count=8, seed=7)
        extent = min(c * domain.spacing for c in domain.counts)
        idx = tuple(c // 2 for c in domain.counts)
        center = domain.cell_center(idx)
        r = extent / 8.0
        if r < 2 * domain.spacing:
            continue
        for u in family:
            ratio, flagged = telescoping_check(u, Ball(center, r), 2.0)
            if not flagged:
                worst = max(worst, ratio)
    print(f"telescoping: worst={worst:.4f}")
    return worst


def main():
    print("== capacity-measure comparison, resolution 64 ==")
    t64 = run_capie(64)
    print("== resolution 128 cross-check ==")
    t128 = {}
    for p in (2.0,):
        worst = 0.0
        for spec in SUITE:
            spec = dict(spec)
            spec["resolution"] = 128
            domain = build_domain(spec)
            worst = max(worst, capie_ratios(domain, p, max_centers=4))
        t128[(2, p)] = worst
        print(f"capie n=2 p={p}: res128 worst={worst:.4f}")
    print("== embedding ==")
    emb = run_embedding()
    print("== telescoping ==")
    tel = run_telescoping()
    print()
    print("_CAPIE =", json.dumps({f"{k}": round(v * 1.25, 3) for k, v in t64.items()}, indent=2))
    print("EMBEDDING =", {k: round(v * 1.3, 3) for k, v in emb.items()})
    print("TELESCOPING =", round(tel * 1.3, 3))


if __name__ == "__main__":
    main()
