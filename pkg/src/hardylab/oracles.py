"""Independent reference computations used to pin expected values in tests.

Everything here is deliberately written without reusing the production code
paths: exhaustive loops, closed forms, high-precision series sums, and
one-dimensional reductions.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np


# ---------------------------------------------------------------------------
# Exhaustive restricted maximal function
# ---------------------------------------------------------------------------


def brute_force_maximal(field, spacing, caps, alpha=0.0):
    """Exhaustive per-cell evaluation of the restricted fractional maximal
    function over the dyadic radius ladder (up to and including the cap)
    with open balls.

    Offsets are visited sorted by (squared norm, lexicographic components)
    and accumulated left to right in float64, the canonical order, so the
    result is bit-identical to a correct production implementation.
    """
    field = np.asarray(field, dtype=float)
    caps = np.asarray(caps, dtype=float)
    shape = field.shape
    dim = field.ndim
    h = float(spacing)
    cap_max = max(float(caps.max()), h)
    kmax = int(math.ceil(cap_max / h)) + 1
    offsets = []
    ranges = [range(-(s - 1), s) for s in shape]
    import itertools

    for off in itertools.product(*ranges):
        n2 = sum(o * o for o in off)
        if n2 <= kmax * kmax:
            offsets.append((n2, off))
    offsets.sort(key=lambda t: (t[0],) + t[1])

    out = np.zeros(shape)
    for idx in itertools.product(*[range(s) for s in shape]):
        cap = max(float(caps[idx]), h)
        rungs = []
        r = h
        while r <= cap:
            rungs.append(r)
            r *= 2.0
        best = 0.0
        for r in rungs:
            s_acc = 0.0
            cnt = 0
            r2 = r * r
            for n2, off in offsets:
                if n2 * h * h >= r2:
                    break
                target = tuple(idx[k] + off[k] for k in range(dim))
                ok = all(0 <= target[k] < shape[k] for k in range(dim))
                if ok:
                    s_acc += field[target]
                    cnt += 1
            if cnt == 0:
                continue
            val = s_acc / cnt
            if alpha != 0.0:
                val = val * r ** alpha
            if val > best:
                best = val
        out[idx] = best
    return out


# ---------------------------------------------------------------------------
# Radial condensers
# ---------------------------------------------------------------------------

_SPHERE_SURFACE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def radial_condenser_capacity(n, p, r_inner, r_outer):
    """Exact continuum p-capacity of the condenser (closed ball r_inner,
    open ball r_outer) in R^n, from the radial extremal profile."""
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    m = (n - 1.0) / (p - 1.0) if p != 1.0 else None
    surf = _SPHERE_SURFACE[n]
    if p == 1.0:
        # the 1-capacity of a radial condenser is the minimal sphere area
        return surf * r_inner ** (n - 1)
    if abs(m - 1.0) < 1e-14:
        integral = math.log(r_outer / r_inner)
    else:
        integral = (r_outer ** (1.0 - m) - r_inner ** (1.0 - m)) / (1.0 - m)
    return surf * integral ** (1.0 - p)


def point_plate_capacity_ratio(h_eff, r, n=2, p=2.0):
    """Continuum capacity-density ratio of a plate of diameter ~h_eff at the
    center of the window B(2r), relative to the full plate B̄(r).  For p = n = 2
    both capacities are logarithmic and the ratio decays like 1/log(1/h)."""
    if (n, p) != (2, 2.0):
        raise NotImplementedError
    num = radial_condenser_capacity(2, 2.0, h_eff / 2.0, 2.0 * r)
    den = radial_condenser_capacity(2, 2.0, r, 2.0 * r)
    return num / den


# ---------------------------------------------------------------------------
# One-dimensional slab reductions (profiles u = d^gamma on the half line)
# ---------------------------------------------------------------------------


mp.mp.dps = 30


def _hurwitz(s, x):
    """Hurwitz zeta(s, x); for large x the Euler-Maclaurin asymptotic head
    (relative error ~ x^-4) replaces the generic series, which mpmath
    evaluates very slowly for s < 1."""
    x = mp.mpf(x)
    if x <= 1e4:
        return mp.zeta(s, x)
    return (x ** (1 - s) / (s - 1) + x ** (-s) / 2 + s * x ** (-s - 1) / 12
            - s * (s + 1) * (s + 2) * x ** (-s - 3) / 720)


def _power_sum(exponent, j_count, offset=0.5):
    """Sum of (j + offset)^exponent for j = 0..j_count-1 via Hurwitz zeta /
    digamma continuation (exact analytic value of the partial sum)."""
    s = -exponent
    if abs(s - 1.0) < 1e-15:
        val = mp.digamma(offset + j_count) - mp.digamma(offset)
    else:
        val = _hurwitz(s, offset) - _hurwitz(s, mp.mpf(offset) + j_count)
    return float(val)


def slab_power_quotient(gamma, p, cells, width=0.5):
    """Integral Hardy quotient of u = d^gamma on the 1-D slab (0, width)
    sampled with `cells` cells (d_j = (j+1/2)h), including the boundary-jump
    gradient cell of the extension by zero.

    Numerator:  sum |u|^p d^-p = h * sum d_j^(p(gamma-1))
    Denominator: gradient cells h * [sum ((d_{j+1}^g - d_j^g)/h)^p + (d_0^g/h)^p]
    """
    cells = int(cells)
    h = width / cells
    num = h * h ** (p * (gamma - 1.0)) * _power_sum(p * (gamma - 1.0), cells)
    # interior secant gradients: ((j+3/2)^g - (j+1/2)^g)^p summed exactly when
    # feasible, else via direct summation in chunks
    jump = h * (h ** gamma * 0.5 ** gamma / h) ** p
    interior = _secant_power_sum(gamma, p, cells) * h ** (p * (gamma - 1.0)) * h
    return num / (interior + jump)


def _secant_power_sum(gamma, p, cells, direct_limit=2_000_000):
    """sum over j of ((j+3/2)^gamma - (j+1/2)^gamma)^p, summed directly up to
    direct_limit terms and continued with the asymptotic integrand
    (gamma (j+1)^(gamma-1))^p, whose partial sums are again power sums."""
    j_direct = min(cells - 1, direct_limit)
    j = np.arange(j_direct, dtype=float)
    terms = ((j + 1.5) ** gamma - (j + 0.5) ** gamma) ** p
    total = float(terms.sum())
    if cells - 1 > j_direct:
        expo = p * (gamma - 1.0)
        tail = _power_sum(expo, cells - 1 - j_direct, offset=float(j_direct + 1))
        total += gamma ** p * tail
    return total


def slab_family_quotient_sup(p, cells, gammas=None):
    """Supremum of the slab quotient over the power family; mirrors the
    gamma-power members of the test family on a (possibly much finer) grid."""
    if gammas is None:
        gammas = default_power_gammas()
    return max(slab_power_quotient(g, p, cells) for g in gammas)


def default_power_gammas():
    return (2.0, 1.5, 1.25, 1.0, 0.875, 0.75, 0.625, 0.5625, 0.5,
            0.4375, 0.375, 0.3125, 0.25, 0.125, 0.0625, 0.03125)


def integrable_power_gammas(p):
    """Power exponents whose slab quotients stay finite in the fine-grid
    limit (gamma >= (p-1)/p); their supremum approaches the sharp constant
    (p/(p-1))^p from below."""
    crit = (p - 1.0) / p
    return tuple(g for g in default_power_gammas() if g >= crit - 1e-12)


def slab_pointwise_one_sup(cells, gammas=None, width=0.5, L=2.0):
    """Pointwise 1-Hardy supremum over the gamma-power family on the 1-D slab,
    evaluated at a geometric subsample of cells (the ratio is monotone along
    the profile tails, so the subsample brackets the sup).

    For increasing power profiles the window sum of secant gradients
    telescopes, so each ball mean has a closed form and the evaluation cost
    is logarithmic in the cell count.
    """
    if gammas is None:
        gammas = default_power_gammas()
    h = width / cells
    sup = 0.0
    js = sorted({0, 1, 2, 3} | {2 ** k for k in range(1, int(math.log2(cells)))}
                | {cells - 1})
    js = [j for j in js if j < cells]

    def center(i):
        return (i + 0.5) * h

    for gamma in gammas:
        for j in js:
            d = center(j)
            u = d ** gamma
            cap = max(L * d, h)
            rungs = []
            r = h
            while r <= cap:
                rungs.append(r)
                r *= 2.0
            best = 0.0
            for r in rungs:
                kk = int(math.ceil(r / h)) - 1  # offsets with |i-j| h < r
                lo = max(-1, j - kk)
                hi = min(cells - 1, j + kk)
                cnt = hi - lo + 1
                # sum of piecewise secants telescopes; the jump cell at -1
                # carries u(d_0)/h, the top edge duplicates its last face
                top = min(hi + 1, cells - 1)
                if lo == -1:
                    acc = center(top) ** gamma / h
                else:
                    acc = (center(top) ** gamma - center(lo) ** gamma) / h
                if hi == cells - 1:
                    acc += (center(cells - 1) ** gamma - center(cells - 2) ** gamma) / h
                val = acc / cnt
                if val > best:
                    best = val
            if best > 0:
                sup = max(sup, u / (d * best))
    return sup


# ---------------------------------------------------------------------------
# Exact small-instance cover optimum (branch and bound set cover)
# ---------------------------------------------------------------------------


def exact_cover_cost(universe_size, candidates):
    """Minimum-cost cover of range(universe_size) by candidate (cost, cell-set)
    pairs, by best-first branch and bound.  Intended for universes <= 64."""
    full = (1 << universe_size) - 1
    cands = []
    for cost, cells in candidates:
        mask = 0
        for c in cells:
            mask |= 1 << c
        cands.append((float(cost), mask))
    cands.sort(key=lambda t: t[0])
    min_unit = min((c / max(1, bin(m).count("1")) for c, m in cands))

    best = [math.inf]

    import heapq

    # admissible bound: remaining elements * cheapest per-element rate
    start = (min_unit * universe_size, 0.0, 0)
    heap = [start]
    seen = {}
    while heap:
        bound, cost, covered = heapq.heappop(heap)
        if bound >= best[0]:
            break
        if covered == full:
            best[0] = min(best[0], cost)
            continue
        if seen.get(covered, math.inf) <= cost:
            continue
        seen[covered] = cost
        # branch on the lowest uncovered element
        low = (~covered & full)
        low_bit = low & -low
        for ccost, mask in cands:
            if mask & low_bit:
                ncov = covered | mask
                ncost = cost + ccost
                remaining = universe_size - bin(ncov).count("1")
                nbound = ncost + remaining * min_unit
                if nbound < best[0]:
                    heapq.heappush(heap, (nbound, ncost, ncov))
    return best[0]
