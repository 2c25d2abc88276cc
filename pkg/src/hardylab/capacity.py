"""Variational p-capacity of grid condensers.

cap_p(E, W) is the infimum of the discrete p-energy over grid functions that
equal 1 on the plate E and 0 outside the window W, clamped to [0, 1].  The
p = 2 problem is a sparse linear Dirichlet solve; other exponents run damped
(Barzilai-Borwein) gradient descent with backtracking, warm started from the
p = 2 solution, and return the energy of the final iterate, an upper bound on
the discrete infimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import Ball, ScalarField, gradient_values, p_energy
from .maximal import ball_mean


@dataclass
class CondenserProblem:
    domain: object
    plate: np.ndarray
    window: np.ndarray
    exponent: float = 2.0

    def __post_init__(self):
        self.plate = np.asarray(self.plate, dtype=bool)
        self.window = np.asarray(self.window, dtype=bool)
        if self.plate.shape != self.domain.counts or self.window.shape != self.domain.counts:
            raise ValueError("plate/window masks must cover the bounding box")
        if (self.plate & ~self.window).any():
            raise ValueError("plate must be contained in the window")
        if self.exponent < 1.0:
            raise ValueError("exponent must be >= 1")

    @property
    def plate_empty(self):
        return not self.plate.any()


@dataclass
class CapacityResult:
    value: float
    extremal: ScalarField
    iterations: int
    residual: float
    flags: list = field(default_factory=list)

    def to_json_dict(self):
        return {
            "value": self.value,
            "iterations": self.iterations,
            "residual": self.residual,
            "flags": list(self.flags),
        }


def _subbox_slices(domain, window, pad=2):
    slices = []
    for axis in range(domain.dim):
        other = tuple(a for a in range(domain.dim) if a != axis)
        proj = window.any(axis=other) if other else window
        idx = np.where(proj)[0]
        lo = max(0, idx[0] - pad)
        hi = min(domain.counts[axis], idx[-1] + 1 + pad)
        slices.append(slice(lo, hi))
    return tuple(slices)


def _face_weight_is_doubled(sub, domain, axis, last_index_global):
    # the one-sided rule at the bounding-box edge counts the last face twice
    return last_index_global == domain.counts[axis] - 1


def _solve_dirichlet(domain, sub, plate_s, window_s):
    """Minimize the face-weighted quadratic energy with u=1 on the plate and
    u=0 outside the window; returns (values on subarray, relative residual)."""
    shape = plate_s.shape
    u = np.zeros(shape)
    u[plate_s] = 1.0
    free = window_s & ~plate_s
    n_free = int(free.sum())
    if n_free == 0:
        return u, 0.0
    num = -np.ones(shape, dtype=np.int64)
    num[free] = np.arange(n_free)
    rows, cols, vals = [], [], []
    b = np.zeros(n_free)
    diag = np.zeros(n_free)
    dim = len(shape)
    for axis in range(dim):
        doubled = _face_weight_is_doubled(sub, domain, axis, sub[axis].stop - 1)
        for sgn in (1, -1):
            src = [slice(None)] * dim
            dst = [slice(None)] * dim
            if sgn == 1:
                src[axis] = slice(1, None)
                dst[axis] = slice(None, -1)
            else:
                src[axis] = slice(None, -1)
                dst[axis] = slice(1, None)
            nb_u = np.zeros(shape)
            nb_in = np.zeros(shape, dtype=bool)
            nb_free = np.full(shape, -1, dtype=np.int64)
            nb_u[tuple(dst)] = u[tuple(src)]
            nb_in[tuple(dst)] = True
            nb_free[tuple(dst)] = num[tuple(src)]
            weight = np.ones(shape)
            if doubled:
                # the one-sided rule duplicates the face joining the last two
                # cells along this axis
                sel = [slice(None)] * dim
                sel[axis] = slice(-2, -1) if sgn == 1 else slice(-1, None)
                weight[tuple(sel)] = 2.0
            m = free & nb_in
            diag[num[m]] += weight[m]
            hf = m & (nb_free >= 0)
            rows.append(num[hf])
            cols.append(nb_free[hf])
            vals.append(-weight[hf])
            fx = m & (nb_free < 0)
            np.add.at(b, num[fx], weight[fx] * nb_u[fx])
    A = sp.coo_matrix(
        (np.concatenate(vals + [diag]),
         (np.concatenate(rows + [np.arange(n_free)]),
          np.concatenate(cols + [np.arange(n_free)]))),
        shape=(n_free, n_free)).tocsr()
    x = spla.spsolve(A, b)
    resid = float(np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1e-300))
    u[free] = np.clip(x, 0.0, 1.0)
    return u, resid


def _energy_and_grad(u, h, p, dim_volume):
    """Energy h^n sum g^p over the subarray and its gradient in u."""
    g2 = np.zeros_like(u)
    diffs = []
    for axis in range(u.ndim):
        d = np.empty_like(u)
        cur = [slice(None)] * u.ndim
        fwd = [slice(None)] * u.ndim
        cur[axis] = slice(None, -1)
        fwd[axis] = slice(1, None)
        last = [slice(None)] * u.ndim
        prev = [slice(None)] * u.ndim
        last[axis] = slice(-1, None)
        prev[axis] = slice(-2, -1)
        d[tuple(cur)] = u[tuple(fwd)] - u[tuple(cur)]
        d[tuple(last)] = u[tuple(last)] - u[tuple(prev)]
        d /= h
        diffs.append(d)
        g2 += d * d
    g = np.sqrt(g2)
    energy = float((g ** p).sum()) * dim_volume
    w = np.zeros_like(g)
    nz = g > 0
    w[nz] = p * g[nz] ** (p - 2.0)
    grad = np.zeros_like(u)
    for axis, d in enumerate(diffs):
        wd = w * d
        cur = [slice(None)] * u.ndim
        fwd = [slice(None)] * u.ndim
        cur[axis] = slice(None, -1)
        fwd[axis] = slice(1, None)
        last = [slice(None)] * u.ndim
        prev = [slice(None)] * u.ndim
        last[axis] = slice(-1, None)
        prev[axis] = slice(-2, -1)
        grad[tuple(cur)] -= wd[tuple(cur)] / h
        grad[tuple(fwd)] += wd[tuple(cur)] / h
        grad[tuple(last)] += wd[tuple(last)] / h
        grad[tuple(prev)] -= wd[tuple(last)] / h
    return energy, grad * dim_volume


def solve_capacity(problem, tol=1e-8, max_iter=20000):
    """Minimize the discrete p-energy over admissible condenser functions.

    Returns a CapacityResult whose value is the energy of the final iterate.
    An empty plate yields capacity zero; failure to reach the tolerance
    within max_iter returns the best iterate flagged `non_converged`.
    """
    domain = problem.domain
    if tol <= 0:
        raise ValueError("tol must be positive")
    full = np.zeros(domain.counts)
    if problem.plate_empty:
        return CapacityResult(0.0, ScalarField(domain, full), 0, 0.0, ["empty_plate"])
    sub = _subbox_slices(domain, problem.window)
    plate_s = problem.plate[sub]
    window_s = problem.window[sub]
    h = domain.spacing
    vol = domain.cell_volume
    p = float(problem.exponent)

    u2, resid = _solve_dirichlet(domain, sub, plate_s, window_s)
    flags = []
    if p == 2.0:
        full[sub] = u2
        energy = p_energy(domain, gradient_values(full, h), 2.0)
        return CapacityResult(energy, ScalarField(domain, full), 1, resid, flags)

    u = u2
    energy, grad = _energy_and_grad(u, h, p, vol)
    grad[~(window_s & ~plate_s)] = 0.0
    gmax = np.abs(grad).max()
    step = 1.0 if gmax == 0 else h / gmax
    iterations = 0
    rel = np.inf
    while iterations < max_iter:
        iterations += 1
        v = u - step * grad
        np.clip(v, 0.0, 1.0, out=v)
        v[plate_s] = 1.0
        v[~window_s] = 0.0
        e_new, g_new = _energy_and_grad(v, h, p, vol)
        g_new[~(window_s & ~plate_s)] = 0.0
        backtracks = 0
        while e_new > energy and backtracks < 60:
            step *= 0.5
            backtracks += 1
            v = u - step * grad
            np.clip(v, 0.0, 1.0, out=v)
            v[plate_s] = 1.0
            v[~window_s] = 0.0
            e_new, g_new = _energy_and_grad(v, h, p, vol)
            g_new[~(window_s & ~plate_s)] = 0.0
        if e_new > energy:
            break  # no descent direction left at float resolution
        rel = (energy - e_new) / max(e_new, 1e-300)
        s = (v - u).ravel()
        y = (g_new - grad).ravel()
        u, grad, energy = v, g_new, e_new
        sy = float(s @ y)
        if sy > 0:
            step = float(s @ s) / sy
        if 0.0 <= rel < tol:
            break
    else:
        flags.append("non_converged")
    if p == 1.0:
        flags.append("approximate_p1")
    full[sub] = u
    energy = p_energy(domain, gradient_values(full, h), p)
    return CapacityResult(energy, ScalarField(domain, full), iterations, rel, flags)


def condenser_between_balls(domain, center, r_plate, r_window, p):
    """cap_p(closed ball, open window ball) around a common center."""
    plate = Ball(center, r_plate, closed=True).cells(domain)
    window = Ball(center, r_window).cells(domain)
    return solve_capacity(CondenserProblem(domain, plate, window, p))


@dataclass
class ComparisonReport:
    lower_ok: bool
    upper_ok: bool
    lower_ratio: float
    upper_ratio: float
    capacity: float
    constant: float


def cap_comparison_check(domain, ball, subset, p, constant):
    """Two-sided capacity-measure comparison on the window 2B.

    lower: mu(subset) <= C * cap * r^p   (lower_ratio = C cap r^p / mu(E) >= 1)
    upper: cap * r^p <= C * mu(B)        (upper_ratio = cap r^p / (C mu(B)) <= 1)
    """
    subset = np.asarray(subset, dtype=bool)
    if not subset.any():
        raise ValueError("subset is empty")
    ball_cells = Ball(ball.center, ball.radius, closed=True).cells(domain)
    if (subset & ~ball_cells).any():
        raise ValueError("subset must lie in the closed ball")
    window = ball.scaled(2.0, closed=False).cells(domain)
    result = solve_capacity(CondenserProblem(domain, subset, window, p))
    r_p = ball.radius ** p
    mu_subset = domain.measure(subset)
    mu_ball = Ball(ball.center, ball.radius).measure(domain)
    lower_ratio = constant * result.value * r_p / mu_subset
    upper_ratio = result.value * r_p / (constant * mu_ball)
    return ComparisonReport(
        lower_ok=lower_ratio >= 1.0,
        upper_ok=upper_ratio <= 1.0,
        lower_ratio=lower_ratio,
        upper_ratio=upper_ratio,
        capacity=result.value,
        constant=constant,
    )


@dataclass
class EmbeddingRatio:
    ratio: float
    vacuous: bool
    capacity: float
    mean_power: float


def sobolev_capacity_ratio(u, ball, p):
    """Ball-mean to capacity-normalized energy ratio:

    mean_B |u|^p  *  cap_p(B/2 cap {u = 0}, B)   versus   int_{5B} g_u^p.

    Bounded across a test family by a suite constant.  An empty zero set
    inside B/2 makes the capacity vanish and the report is flagged vacuous.
    """
    domain = u.domain
    if not ball.scaled(5.0).inside_box(domain):
        raise ValueError("5B must lie inside the bounding box")
    half = ball.scaled(0.5, closed=False).cells(domain)
    zero_set = half & (u.values == 0.0)
    mean_p = ball_mean(np.abs(u.values), domain, ball.center, ball.radius, power=p)
    if not zero_set.any():
        return EmbeddingRatio(0.0, True, 0.0, mean_p)
    window = ball.cells(domain)
    cap = solve_capacity(CondenserProblem(domain, zero_set, window, p)).value
    g = gradient_values(u.values, domain.spacing)
    five = ball.scaled(5.0).cells(domain)
    rhs = p_energy(domain, g, p, region=five)
    if rhs == 0.0:
        return EmbeddingRatio(0.0, mean_p * cap == 0.0, cap, mean_p)
    return EmbeddingRatio(mean_p * cap / rhs, False, cap, mean_p)
