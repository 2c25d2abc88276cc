"""Restricted (fractional) maximal functions of nonnegative grid fields.

The supremum over radii is taken on the dyadic ladder h, 2h, 4h, ... up to
and including the cap.  Ladders at different caps are nested, which makes the
operator monotone in the cap; the loss against the continuous supremum is
bounded by the doubling factor between rungs.  Balls are open and means use
the discretized ball's own cell count, so the ladder value at radius h is the
field value itself.  Cells are visited in a canonical order (squared offset
norm, then lexicographic offset), which pins the floating-point accumulation
order; the exhaustive reference evaluation in `oracles` reproduces it bit for
bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import ScalarField

# test hook: when True the production ladder drops its smallest rung, which
# violates the M_R f >= f guarantee and the reference agreement
_TAMPER_DROP_SMALLEST_RUNG = False


@dataclass
class MaximalQuery:
    """field: nonnegative ScalarField; radius_cap: scalar or per-cell cap
    (values below h are evaluated at the single-cell ball); alpha >= 0 weights
    the mean by r^alpha."""

    field: ScalarField
    radius_cap: object
    alpha: float = 0.0

    def __post_init__(self):
        if (self.field.values < 0).any():
            raise ValueError("maximal operator input must be nonnegative")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        h = self.field.domain.spacing
        if np.isscalar(self.radius_cap):
            if self.radius_cap < h:
                raise ValueError("radius cap below one cell width")

    def cap_array(self):
        domain = self.field.domain
        if np.isscalar(self.radius_cap):
            caps = np.full(domain.counts, float(self.radius_cap))
        else:
            values = (self.radius_cap.values
                      if isinstance(self.radius_cap, ScalarField)
                      else np.asarray(self.radius_cap, dtype=float))
            if values.shape != domain.counts:
                raise ValueError("radius cap shape does not match the grid")
            caps = values.copy()
        np.maximum(caps, domain.spacing, out=caps)
        return caps


def _sorted_offsets(counts, max_radius_cells2):
    """Integer offsets sorted by (squared norm, lexicographic components)."""
    ranges = []
    for c in counts:
        k = c - 1
        ranges.append(np.arange(-k, k + 1, dtype=np.int64))
    grids = np.meshgrid(*ranges, indexing="ij")
    flat = [g.reshape(-1) for g in grids]
    norm2 = sum(f * f for f in flat)
    keep = norm2 <= max_radius_cells2
    cols = [f[keep] for f in flat]
    norm2 = norm2[keep]
    order = np.lexsort(tuple(reversed(cols)) + (norm2,))
    offs = np.stack([c[order] for c in cols], axis=1)
    while offs.shape[1] < 3:
        offs = np.hstack([offs, np.zeros((offs.shape[0], 1), dtype=np.int64)])
    return norm2[order], offs


@njit(cache=True)
def _maximal_kernel(field, caps, norm2, offs, h, alpha, rung_pows, cap_pows,
                    use_pows, drop_smallest, out, argmax_r):
    n0, n1, n2 = field.shape
    h2 = h * h
    n_off = norm2.shape[0]
    for i0 in range(n0):
        for i1 in range(n1):
            for i2 in range(n2):
                cap = caps[i0, i1, i2]
                if cap < h:
                    cap = h
                best = -1.0
                best_r = 0.0
                s = 0.0
                cnt = 0
                ptr = 0
                r = h
                k = 0
                if drop_smallest:
                    r = 2.0 * h
                    k = 1
                while r <= cap:
                    r2 = r * r
                    while ptr < n_off and norm2[ptr] * h2 < r2:
                        j0 = i0 + offs[ptr, 0]
                        j1 = i1 + offs[ptr, 1]
                        j2 = i2 + offs[ptr, 2]
                        if 0 <= j0 < n0 and 0 <= j1 < n1 and 0 <= j2 < n2:
                            s += field[j0, j1, j2]
                            cnt += 1
                        ptr += 1
                    if cnt > 0:
                        val = s / cnt
                        if use_pows:
                            val = val * rung_pows[k]
                        if val > best:
                            best = val
                            best_r = r
                    r = r * 2.0
                    k += 1
                if best < 0.0:
                    best = 0.0
                out[i0, i1, i2] = best
                argmax_r[i0, i1, i2] = best_r


def restricted_maximal(query, return_argmax=False):
    """Per-cell sup over the radius ladder of r^alpha times the ball mean.

    With alpha = 0 this is the restricted maximal function; the fractional
    variant only multiplies each rung value by r^alpha.  Returns a
    ScalarField, plus the per-cell maximizing radius when requested.
    """
    domain = query.field.domain
    h = domain.spacing
    caps = query.cap_array()
    cap_max = float(caps.max())
    max_cells2 = int(np.ceil((cap_max / h) ** 2)) + 1
    norm2, offs = _sorted_offsets(domain.counts, max_cells2)

    alpha = float(query.alpha)
    use_pows = alpha != 0.0
    if use_pows:
        n_rungs = max(1, int(np.ceil(np.log2(cap_max / h))) + 2)
        rung_pows = np.array([(h * 2.0 ** k) ** alpha for k in range(n_rungs)])
        flat_caps = caps.reshape(-1)
        cap_pows = np.array([float(c) ** alpha for c in flat_caps]).reshape(caps.shape)
    else:
        rung_pows = np.zeros(1)
        cap_pows = np.zeros(caps.shape)

    shape3 = domain.counts + (1,) * (3 - domain.dim)
    field3 = query.field.values.reshape(shape3)
    caps3 = caps.reshape(shape3)
    cap_pows3 = cap_pows.reshape(shape3)
    out = np.zeros(shape3)
    argmax_r = np.zeros(shape3)
    _maximal_kernel(field3, caps3, norm2, offs, h, alpha, rung_pows, cap_pows3,
                    use_pows, _TAMPER_DROP_SMALLEST_RUNG, out, argmax_r)
    result = ScalarField(domain, out.reshape(domain.counts))
    if return_argmax:
        return result, argmax_r.reshape(domain.counts)
    return result


def ball_mean(field, domain, center, radius, power=1.0):
    """Mean of field^power over the discretized open ball (clipped to the box)."""
    from .geometry import Ball

    cells = Ball(center, radius).cells(domain)
    cnt = int(cells.sum())
    if cnt == 0:
        return 0.0
    vals = field[cells]
    if power != 1.0:
        vals = vals ** power
    return float(vals.sum()) / cnt


def telescoping_check(u, ball, p):
    """Oscillation-to-maximal ratio at the ball center:
    |u(x) - u_B| / (r * (M_r g_u^p(x))^(1/p)).

    Returns (ratio, flagged); flagged marks a zero denominator with nonzero
    numerator, which only discretization can produce.
    """
    from .geometry import gradient_magnitude

    domain = u.domain
    center_idx = tuple(int(np.argmin(np.abs(domain.axes[k] - ball.center[k])))
                       for k in range(domain.dim))
    center = tuple(domain.axes[k][center_idx[k]] for k in range(domain.dim))
    mean_u = ball_mean(u.values, domain, center, ball.radius)
    num = abs(float(u.values[center_idx]) - mean_u)
    g = gradient_magnitude(u)
    query = MaximalQuery(field=ScalarField(domain, g.values ** p),
                         radius_cap=ball.radius)
    m_at = restricted_maximal_at(query, center_idx)
    den = ball.radius * m_at ** (1.0 / p)
    if den == 0.0:
        return (0.0, num > 0.0)
    return (num / den, False)


def restricted_maximal_at(query, index):
    """Maximal value at a single cell (direct evaluation, no kernel)."""
    domain = query.field.domain
    h = domain.spacing
    caps = query.cap_array()
    cap = float(caps[index])
    center = tuple(domain.axes[k][index[k]] for k in range(domain.dim))
    rungs = []
    r = h
    while r <= cap:
        rungs.append(r)
        r *= 2.0
    best = 0.0
    for r in rungs:
        mean = ball_mean(query.field.values, domain, center, r)
        val = mean * (r ** query.alpha if query.alpha != 0.0 else 1.0)
        best = max(best, val)
    return best
