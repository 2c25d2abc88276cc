"""Discretized Euclidean domains: uniform cell grids, balls, fields, distances, layers.

A domain is an open set sampled at cell centers of a uniform grid with
spacing ``h``.  Cells are cubes of side ``h`` and the measure of a cell set
is ``count * h**n``.  The complement within the bounding box stands in for
the full complement; where the open set meets the box edge the set is
treated as continuing beyond the window.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

FAMILIES = (
    "half_space",
    "quarter_space",
    "punctured_ball",
    "slit_disk",
    "exterior_cusp",
    "cantor_complement",
    "annulus",
    "interval_1d",
)


class GridDomain:
    """An open set sampled on a uniform cell grid.

    Parameters
    ----------
    spacing : cell side h > 0
    axes : tuple of 1-D arrays of cell-center coordinates, one per axis
    inside : boolean array, True where the cell center lies in the open set
    name : label recording the construction
    is_domain : if True, connectivity of the inside mask is validated
    """

    def __init__(self, spacing, axes, inside, name="domain", is_domain=True):
        inside = np.asarray(inside, dtype=bool)
        self.dim = len(axes)
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if spacing <= 0:
            raise ValueError("spacing must be positive")
        self.spacing = float(spacing)
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
        self.counts = tuple(len(a) for a in self.axes)
        if inside.shape != self.counts:
            raise ValueError(f"mask shape {inside.shape} != axis counts {self.counts}")
        if not inside.any():
            raise ValueError("inside set is empty")
        if inside.all():
            raise ValueError("complement within the bounding box is empty")
        self.inside = inside
        self.name = str(name)
        self.is_domain = bool(is_domain)
        if is_domain:
            structure = ndimage.generate_binary_structure(self.dim, 1)
            _, ncomp = ndimage.label(inside, structure=structure)
            if ncomp != 1:
                raise ValueError(f"domain mask is disconnected ({ncomp} components)")
        self._distances = None

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    @property
    def complement(self):
        return ~self.inside

    @property
    def origin(self):
        return tuple(float(a[0]) - self.spacing / 2.0 for a in self.axes)

    def measure(self, mask):
        """mu of a cell set: count times h^n."""
        return float(np.count_nonzero(mask)) * self.cell_volume

    def meshgrid(self):
        return np.meshgrid(*self.axes, indexing="ij")

    def cell_center(self, index):
        return tuple(float(self.axes[k][index[k]]) for k in range(self.dim))

    def boundary_mask(self):
        """Complement cells with an inside 2n-neighbor (the grid boundary of the set)."""
        structure = ndimage.generate_binary_structure(self.dim, 1)
        dilated = ndimage.binary_dilation(self.inside, structure=structure)
        return dilated & ~self.inside

    def distances(self):
        if self._distances is None:
            self._distances = distance_fields(self)
        return self._distances

    def __repr__(self):
        return f"GridDomain({self.name!r}, dim={self.dim}, h={self.spacing:g}, counts={self.counts})"


@dataclass(frozen=True)
class Ball:
    """Euclidean metric ball; the discretization keeps cells whose centers lie
    within the radius (strict for open, non-strict for closed)."""

    center: tuple
    radius: float
    closed: bool = False

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def scaled(self, factor, closed=None):
        return Ball(self.center, self.radius * factor,
                    self.closed if closed is None else closed)

    def cells(self, domain):
        if len(self.center) != domain.dim:
            raise ValueError("ball/domain dimension mismatch")
        if self.radius < domain.spacing:
            raise ValueError("radius below one cell width")
        d2 = np.zeros(domain.counts)
        for k in range(domain.dim):
            shape = [1] * domain.dim
            shape[k] = domain.counts[k]
            d2 = d2 + ((domain.axes[k] - self.center[k]) ** 2).reshape(shape)
        r2 = self.radius * self.radius
        return d2 <= r2 if self.closed else d2 < r2

    def measure(self, domain):
        return domain.measure(self.cells(domain))

    def inside_box(self, domain, margin=0.0):
        """True when the analytic ball lies within the bounding box, keeping
        the given margin to every face."""
        h = domain.spacing
        for k in range(domain.dim):
            lo = domain.axes[k][0] - h / 2.0 + margin
            hi = domain.axes[k][-1] + h / 2.0 - margin
            if self.center[k] - self.radius < lo or self.center[k] + self.radius > hi:
                return False
        return True


class ScalarField:
    """Real values attached to every cell of a domain's bounding box."""

    def __init__(self, domain, values):
        values = np.asarray(values, dtype=float)
        if values.shape != domain.counts:
            raise ValueError("field shape does not match the grid")
        if not np.isfinite(values).all():
            raise ValueError("field contains non-finite values")
        self.domain = domain
        self.values = values

    def scaled(self, c):
        return ScalarField(self.domain, self.values * c)


class GradientField(ScalarField):
    """Nonnegative per-cell gradient magnitude (discrete upper-gradient surrogate)."""

    def __init__(self, domain, values):
        super().__init__(domain, values)
        if (self.values < 0).any():
            raise ValueError("gradient magnitude must be nonnegative")


@dataclass
class DistanceFields:
    """d(x) = distance to the nearest complement cell center, delta(x) to the
    nearest boundary cell center; both zero outside the inside set."""

    to_complement: ScalarField
    to_boundary: ScalarField

    @property
    def d(self):
        return self.to_complement.values

    @property
    def delta(self):
        return self.to_boundary.values


def gradient_values(values, spacing):
    """Euclidean norm of the forward-difference vector, one-sided at box edges."""
    values = np.asarray(values, dtype=float)
    g2 = np.zeros_like(values)
    for axis in range(values.ndim):
        diff = np.empty_like(values)
        fwd = [slice(None)] * values.ndim
        cur = [slice(None)] * values.ndim
        fwd[axis] = slice(1, None)
        cur[axis] = slice(None, -1)
        last = [slice(None)] * values.ndim
        prev = [slice(None)] * values.ndim
        last[axis] = slice(-1, None)
        prev[axis] = slice(-2, -1)
        diff[tuple(cur)] = values[tuple(fwd)] - values[tuple(cur)]
        diff[tuple(last)] = values[tuple(last)] - values[tuple(prev)]
        g2 += (diff / spacing) ** 2
    return np.sqrt(g2)


def gradient_magnitude(field):
    return GradientField(field.domain, gradient_values(field.values, field.domain.spacing))


def p_energy(domain, gradient, p, region=None):
    """Discrete p-energy: sum of g^p over cells (all box cells by default) times h^n.

    Summing over the whole box keeps the boundary-jump contribution of
    functions extended by zero, matching the extended-by-zero continuum
    integral regardless of which side of a face hosts the difference.
    """
    g = gradient.values if isinstance(gradient, GradientField) else np.asarray(gradient)
    if region is None:
        total = float((g ** p).sum())
    else:
        total = float((g[region] ** p).sum())
    return total * domain.cell_volume


def distance_fields(domain):
    """Exact Euclidean center-to-center distances to the complement and to the
    grid boundary (complement cells with an inside 2n-neighbor)."""
    h = domain.spacing
    sampling = (h,) * domain.dim
    d = ndimage.distance_transform_edt(domain.inside, sampling=sampling)
    boundary = domain.boundary_mask()
    if not boundary.any():
        raise ValueError("domain has no grid boundary cells")
    delta = ndimage.distance_transform_edt(~boundary, sampling=sampling)
    delta = np.where(domain.inside, delta, 0.0)
    d = np.where(domain.inside, d, 0.0)
    return DistanceFields(
        to_complement=ScalarField(domain, d),
        to_boundary=ScalarField(domain, delta),
    )


def distance_comparability(domain):
    """max(delta/d) over inside cells; the constant comparing boundary distance
    to complement distance."""
    fields = domain.distances()
    inside = domain.inside
    return float(np.max(fields.delta[inside] / fields.d[inside]))


def dyadic_layers(domain):
    """Partition of inside cells into bands {2^-k <= d < 2^-k+1}.

    Returns a list of (k, mask) sorted by increasing k (large distances first).
    """
    d = domain.distances().d
    inside = domain.inside
    dv = d[inside]
    k = np.ceil(-np.log2(dv)).astype(np.int64)
    # band membership must be exact despite log rounding
    lo = np.power(2.0, -k.astype(float))
    k = np.where(dv < lo, k + 1, k)
    hi = np.power(2.0, (-k + 1).astype(float))
    k = np.where(dv >= hi, k - 1, k)
    layers = []
    kfull = np.zeros(domain.counts, dtype=np.int64)
    kfull[inside] = k
    for kv in np.unique(k):
        mask = inside & (kfull == kv)
        layers.append((int(kv), mask))
    return layers


def doubling_profile(domain, sample_count, seed=0, exponent=None, min_radius_cells=8):
    """Empirical constant of the volume-doubling dimension bound.

    Over sampled (x, R, y, r) with y in B(x, R) and r <= R, both balls inside
    the box, reports the minimum of mu(B(y,r))/mu(B(x,R)) * (R/r)^s with
    s = n by default.  The degenerate sample (x, R, x, R) is always included
    so the report lies in (0, 1].  Sampling is done in physical coordinates,
    independent of h, so the profile is comparable across resolutions.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    s = float(domain.dim if exponent is None else exponent)
    h = domain.spacing
    rng = np.random.default_rng(seed)
    lo = np.array([a[0] - h / 2.0 for a in domain.axes])
    hi = np.array([a[-1] + h / 2.0 for a in domain.axes])
    extent = float(np.min(hi - lo))
    r_min = min_radius_cells * h
    r_max = extent / 3.0
    if r_max <= r_min:
        raise ValueError("box too small for the requested sampling radii")
    best = 1.0  # degenerate sample r=R, y=x
    samples = []
    for _ in range(sample_count):
        big = rng.uniform(r_min, r_max)
        center = rng.uniform(lo + big, hi - big)
        offset = rng.normal(size=domain.dim)
        norm = np.linalg.norm(offset)
        y = center if norm == 0 else center + offset / norm * rng.uniform(0.0, big)
        small = rng.uniform(r_min, big)
        big_ball = Ball(tuple(center), big)
        small_ball = Ball(tuple(y), small)
        if not (big_ball.inside_box(domain) and small_ball.inside_box(domain)):
            continue
        mu_big = big_ball.measure(domain)
        mu_small = small_ball.measure(domain)
        if mu_big == 0:
            continue
        ratio = (mu_small / mu_big) * (big / small) ** s
        samples.append(ratio)
        best = min(best, ratio)
    return {"constant": best, "exponent": s, "samples_used": len(samples)}


# ---------------------------------------------------------------------------
# Built-in domain families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    family: str
    resolution: int
    params: dict

    @staticmethod
    def from_text(text):
        """Parse a spec from JSON or from simple key=value lines."""
        text = text.strip()
        try:
            payload = json.loads(text)
        except json.JSONDecodeError:
            payload = {}
            for line in text.splitlines():
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                key = key.strip()
                value = value.strip()
                try:
                    payload[key] = json.loads(value)
                except json.JSONDecodeError:
                    payload[key] = value
        if "family" not in payload:
            raise ValueError("domain spec missing 'family'")
        family = payload.pop("family")
        resolution = int(payload.pop("resolution", 64))
        return DomainSpec(family=family, resolution=resolution, params=payload)


def _centered_axis(extent_cells, spacing):
    """Odd-count axis with a cell center exactly at 0."""
    idx = np.arange(-extent_cells, extent_cells + 1, dtype=float)
    return idx * spacing


def _unit_axis(resolution, pad_cells):
    """Axis with centers at integer multiples of h, covering [0, 1] plus padding;
    0 and 1 are themselves cell centers."""
    n = int(resolution)
    idx = np.arange(-pad_cells, n + pad_cells + 1, dtype=float)
    return idx / n


def _cantor_intervals(ratio, depth):
    """Closed intervals of the depth-d generalized Cantor set on [0, 1] that keeps
    the two outer pieces of relative length `ratio` at every step."""
    intervals = [(0.0, 1.0)]
    for _ in range(depth):
        nxt = []
        for a, b in intervals:
            w = (b - a) * ratio
            nxt.append((a, a + w))
            nxt.append((b - w, b))
        intervals = nxt
    return intervals


def build_domain(spec):
    """Construct a built-in grid domain family member.

    Supported families: half_space, quarter_space, punctured_ball (n>=2),
    slit_disk, exterior_cusp(kappa>1), cantor_complement(ratio in (0,1/2)),
    annulus(r_in < r_out), interval_1d.  `resolution` is cells per unit length.
    """
    if isinstance(spec, dict):
        params = dict(spec)
        family = params.pop("family")
        resolution = int(params.pop("resolution", 64))
        spec = DomainSpec(family=family, resolution=resolution, params=params)
    family = spec.family
    n_res = spec.resolution
    params = dict(spec.params)
    if family not in FAMILIES:
        raise ValueError(f"unknown domain family {family!r}")
    if n_res < 8:
        raise ValueError("resolution below 8 cells per axis")
    h = 1.0 / n_res
    dim = int(params.pop("dim", 1 if family == "interval_1d" else 2))

    if family == "half_space":
        axes = tuple(_unit_axis(n_res, 0)[:-1] + 0.5 / n_res for _ in range(dim))
        grids = np.meshgrid(*axes, indexing="ij")
        inside = grids[-1] > 0.5
        name = f"half_space(dim={dim},res={n_res})"
    elif family == "quarter_space":
        if dim < 2:
            raise ValueError("quarter_space needs dim >= 2")
        axes = tuple(_unit_axis(n_res, 0)[:-1] + 0.5 / n_res for _ in range(dim))
        grids = np.meshgrid(*axes, indexing="ij")
        inside = (grids[-1] > 0.5) & (grids[-2] > 0.5)
        name = f"quarter_space(dim={dim},res={n_res})"
    elif family == "punctured_ball":
        if dim < 2:
            raise ValueError("punctured_ball needs dim >= 2")
        ext = int(math.ceil(1.25 * n_res))
        ax = _centered_axis(ext, h)
        axes = tuple(ax for _ in range(dim))
        grids = np.meshgrid(*axes, indexing="ij")
        r2 = sum(g * g for g in grids)
        inside = r2 < 1.0
        center = tuple(ext for _ in range(dim))
        inside[center] = False
        name = f"punctured_ball(dim={dim},res={n_res})"
    elif family == "slit_disk":
        if dim != 2:
            raise ValueError("slit_disk is two-dimensional")
        ext = int(math.ceil(1.25 * n_res))
        ax = _centered_axis(ext, h)
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        inside = gx * gx + gy * gy < 1.0
        slit = (np.abs(gy) < h / 2.0) & (gx >= 0.0)
        inside &= ~slit
        name = f"slit_disk(res={n_res})"
    elif family == "exterior_cusp":
        kappa = float(params.pop("kappa", 2.0))
        if kappa <= 1.0:
            raise ValueError("cusp exponent kappa must exceed 1")
        if dim != 2:
            raise ValueError("exterior_cusp is two-dimensional")
        ax_x = _unit_axis(n_res, max(4, n_res // 2))
        ext_y = int(math.ceil(0.75 * n_res))
        ax_y = _centered_axis(ext_y, h)
        gx, gy = np.meshgrid(ax_x, ax_y, indexing="ij")
        # half-width capped at 1/2 so the exterior stays connected in the box
        width = 0.5 * np.power(np.maximum(gx, 0.0), kappa)
        cusp = (gx >= 0.0) & (gx <= 1.0) & (np.abs(gy) <= width)
        inside = ~cusp
        name = f"exterior_cusp(kappa={kappa:g},res={n_res})"
    elif family == "cantor_complement":
        ratio = float(params.pop("ratio", 1.0 / 3.0))
        depth = int(params.pop("depth", 4))
        if not 0.0 < ratio < 0.5:
            raise ValueError("cantor ratio must lie in (0, 1/2)")
        if dim != 2:
            raise ValueError("cantor_complement is two-dimensional")
        pad = max(4, n_res // 4)
        ax_x = _unit_axis(n_res, pad)
        ext_y = int(math.ceil(0.375 * n_res))
        ax_y = _centered_axis(ext_y, h)
        gx, gy = np.meshgrid(ax_x, ax_y, indexing="ij")
        on_line = np.abs(gy) < h / 2.0
        in_set = np.zeros_like(gx, dtype=bool)
        for a, b in _cantor_intervals(ratio, depth):
            in_set |= (gx >= a) & (gx <= b)
        inside = ~(on_line & in_set)
        name = f"cantor_complement(ratio={ratio:g},depth={depth},res={n_res})"
    elif family == "annulus":
        r_in = float(params.pop("r_in", 0.4))
        r_out = float(params.pop("r_out", 1.0))
        if not 0.0 < r_in < r_out:
            raise ValueError("need 0 < r_in < r_out")
        if dim != 2:
            raise ValueError("annulus is two-dimensional")
        ext = int(math.ceil((r_out + 0.2) * n_res))
        ax = _centered_axis(ext, h)
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        r2 = gx * gx + gy * gy
        inside = (r2 > r_in * r_in) & (r2 < r_out * r_out)
        name = f"annulus(r_in={r_in:g},r_out={r_out:g},res={n_res})"
    elif family == "interval_1d":
        pad = max(4, n_res // 4)
        ax = _unit_axis(n_res, pad)
        inside = (ax > 0.0) & (ax < 1.0)
        return GridDomain(h, (ax,), inside, name=f"interval_1d(res={n_res})")
    else:  # pragma: no cover
        raise ValueError(family)

    if params:
        raise ValueError(f"unknown parameters for {family}: {sorted(params)}")
    if family in ("half_space", "quarter_space", "punctured_ball"):
        axes_out = axes
    elif family in ("exterior_cusp", "cantor_complement"):
        axes_out = (ax_x, ax_y)
    else:
        axes_out = (ax, ax)
    return GridDomain(h, axes_out, inside, name=name)


# ---------------------------------------------------------------------------
# Text import/export
# ---------------------------------------------------------------------------


def domain_to_text(domain):
    """Binary-free text serialization: header `dim h counts...`, an origin line,
    a name line, then one run-length-encoded mask row per line."""
    out = io.StringIO()
    counts = " ".join(str(c) for c in domain.counts)
    out.write(f"{domain.dim} {domain.spacing!r} {counts}\n")
    out.write("origin " + " ".join(repr(o) for o in domain.origin) + "\n")
    out.write(f"name {domain.name}\n")
    flat = domain.inside.reshape(-1, domain.counts[-1])
    for row in flat:
        runs = []
        count = 0
        current = False
        for v in row:
            if v == current:
                count += 1
            else:
                if count:
                    runs.append(f"{count}{'T' if current else 'F'}")
                current = bool(v)
                count = 1
        if count:
            runs.append(f"{count}{'T' if current else 'F'}")
        out.write(" ".join(runs) + "\n")
    return out.getvalue()


def domain_from_text(text, is_domain=True):
    lines = text.strip().splitlines()
    head = lines[0].split()
    dim = int(head[0])
    h = float(head[1])
    counts = tuple(int(c) for c in head[2:])
    if len(counts) != dim:
        raise ValueError("header counts do not match dim")
    origin_line = lines[1].split()
    if origin_line[0] != "origin":
        raise ValueError("missing origin line")
    origin = tuple(float(v) for v in origin_line[1:])
    name_line = lines[2]
    if not name_line.startswith("name "):
        raise ValueError("missing name line")
    name = name_line[5:]
    rows = lines[3:]
    n_rows = int(np.prod(counts[:-1])) if dim > 1 else 1
    if len(rows) != n_rows:
        raise ValueError(f"expected {n_rows} mask rows, found {len(rows)}")
    mask = np.zeros((n_rows, counts[-1]), dtype=bool)
    for i, row in enumerate(rows):
        pos = 0
        for token in row.split():
            n_run = int(token[:-1])
            flag = token[-1] == "T"
            mask[i, pos:pos + n_run] = flag
            pos += n_run
        if pos != counts[-1]:
            raise ValueError(f"row {i} length {pos} != {counts[-1]}")
    axes = tuple(origin[k] + (np.arange(counts[k]) + 0.5) * h for k in range(dim))
    return GridDomain(h, axes, mask.reshape(counts), name=name, is_domain=is_domain)
