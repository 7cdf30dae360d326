"""Quadrature and supremum forms of the fractional-integral operators.

All operators act on step functions sharing one dyadic grid and are sampled
at cell midpoints of the same grid.  Since targets and sources share the
lattice, the arguments x-y and x+y always land on cell midpoints, so no
interpolation is ever needed and every check stays exact for step data.

Kernel integration: in 1D the antiderivative of |y|**(a-1) is elementary, so
the per-cell kernel mass is exact for every cell including the singular one.
In 2D non-singular cells use the midpoint rule; the singular cell (the kernel
pole sits at its center) is split into four corner squares and each corner is
refined dyadically to a configurable depth, three midpoint children per
level, which bounds the only quadrature bias at the singularity.

The truncated bilinear form integrates f(x-y)g(x+y) over the ball
|y|_inf <= d with per-axis fractional cell overlaps, hence exactly for any
d > 0.  The dyadic model sums the truncated forms over the tower of dyadic
cubes containing x; scales below the cell side are dropped and their
geometric-tail bound is reported alongside the field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DyadicCube, GridFunction, PrefixTable, cube_box, triple
from .norms import CubeFamily
from .util import ParameterError, power_mean


@dataclass(frozen=True)
class KernelSpec:
    """Kernel |y|**(alpha - n) with the singular-cell rule for 2D grids."""

    alpha: float
    singular_depth: int = 12

    def validate(self, dim: int) -> None:
        if not (0.0 < self.alpha < dim):
            raise ParameterError(
                f"kernel exponent must satisfy 0 < alpha < n, got alpha={self.alpha} n={dim}")
        if self.singular_depth < 1:
            raise ParameterError("singular subdivision depth must be >= 1")


@dataclass(frozen=True)
class OperatorField:
    """Operator output at cell midpoints, plus a bound on any omitted tail."""

    fn: GridFunction
    tail_bound: float = 0.0


def _flags_for(values: np.ndarray) -> str:
    return "nonneg" if values.size and values.min() >= 0 else "none"


def _field(template: GridFunction, values: np.ndarray, tail: float = 0.0) -> OperatorField:
    out = GridFunction(template.dim, template.root, template.depth,
                       values, _flags_for(values))
    return OperatorField(out, tail)


def _require_common_grid(f: GridFunction, g: GridFunction) -> None:
    if f.root != g.root or f.depth != g.depth or f.dim != g.dim:
        raise ParameterError("operands must live on a common grid")


def _corner_square_integral(side: float, alpha: float, depth: int) -> float:
    """integral of |u|**(alpha-2) over [0,side]**2, singularity at the corner.

    Dyadic refinement toward the corner: per level the three off-corner
    children are covered by uniform midpoint cells, the corner child
    recurses.  The kernel is homogeneous, so the remaining corner square of
    side ``side * 2**-depth`` carries exactly ``2**(-depth*alpha)`` times the
    full mass; that geometric tail is closed in exactly rather than dropped.
    """
    sub = 8  # midpoint cells per axis on each off-corner child
    offsets = (np.arange(sub) + 0.5) / sub
    total = 0.0
    s = side
    for _ in range(depth):
        half = 0.5 * s
        for ox, oy in ((half, 0.0), (0.0, half), (half, half)):
            xs = ox + offsets * half
            ys = oy + offsets * half
            xx, yy = np.meshgrid(xs, ys, indexing="ij")
            weights = (half / sub) ** 2
            total += float(np.sum((xx * xx + yy * yy) ** (0.5 * (alpha - 2.0)))) * weights
        s = half
    return total / (1.0 - 2.0 ** (-depth * alpha))


def kernel_cell_table(spec: KernelSpec, grid: GridFunction) -> np.ndarray:
    """Exact/midpoint kernel masses over the offset cells m*h + [-h/2, h/2)**n."""
    spec.validate(grid.dim)
    m = grid.cells_per_axis
    h = grid.cell_side
    a = spec.alpha
    offsets = np.arange(-(m - 1), m)
    if grid.dim == 1:
        def anti(y):
            return np.sign(y) * np.abs(y) ** a / a
        return anti((offsets + 0.5) * h) - anti((offsets - 0.5) * h)
    ox, oy = np.meshgrid(offsets, offsets, indexing="ij")
    r = h * np.sqrt(ox.astype(float) ** 2 + oy.astype(float) ** 2)
    with np.errstate(divide="ignore"):
        table = h * h * r ** (a - 2.0)
    center = m - 1
    table[center, center] = 4.0 * _corner_square_integral(0.5 * h, a, spec.singular_depth)
    return table


def _truncation_table(grid: GridFunction, d: float) -> np.ndarray:
    """Per-offset-cell overlap volumes with the ball |y|_inf <= d (exact)."""
    if d <= 0:
        raise ParameterError(f"truncation radius must be positive, got {d}")
    m = grid.cells_per_axis
    h = grid.cell_side
    offsets = np.arange(-(m - 1), m)
    lo = np.maximum(offsets * h - 0.5 * h, -d)
    hi = np.minimum(offsets * h + 0.5 * h, d)
    w = np.clip(hi - lo, 0.0, None)
    if grid.dim == 1:
        return w
    return np.multiply.outer(w, w)


def _correlate(fv: np.ndarray, gv: np.ndarray, table: np.ndarray) -> np.ndarray:
    """out[i] = sum_m f[i-m] g[i+m] table[m], m limited to in-range indices."""
    if fv.ndim == 1:
        m = fv.size
        c = m - 1
        out = np.empty(m)
        for i in range(m):
            lo = max(i - m + 1, -i)
            hi = min(i, m - 1 - i)
            fs = fv[i - hi:i - lo + 1][::-1]
            gs = gv[i + lo:i + hi + 1]
            out[i] = float(np.dot(fs * gs, table[c + lo:c + hi + 1]))
        return out
    m = fv.shape[0]
    c = m - 1
    out = np.empty_like(fv)
    for i0 in range(m):
        lo0 = max(i0 - m + 1, -i0)
        hi0 = min(i0, m - 1 - i0)
        f0 = fv[i0 - hi0:i0 - lo0 + 1][::-1]
        g0 = gv[i0 + lo0:i0 + hi0 + 1]
        t0 = table[c + lo0:c + hi0 + 1]
        for i1 in range(m):
            lo1 = max(i1 - m + 1, -i1)
            hi1 = min(i1, m - 1 - i1)
            fs = f0[:, i1 - hi1:i1 - lo1 + 1][:, ::-1]
            gs = g0[:, i1 + lo1:i1 + hi1 + 1]
            out[i0, i1] = float(np.sum(fs * gs * t0[:, c + lo1:c + hi1 + 1]))
    return out


def i_alpha(f: GridFunction, spec: KernelSpec) -> OperatorField:
    """Fractional integral: at midpoint x, sum of f(cell) * kernel cell mass."""
    table = kernel_cell_table(spec, f)
    m = f.cells_per_axis
    if f.dim == 1:
        vals = np.convolve(f.values, table)[m - 1:2 * m - 1]
    else:
        vals = np.empty_like(f.values)
        for i0 in range(m):
            w0 = table[i0:i0 + m][::-1]
            for i1 in range(m):
                vals[i0, i1] = float(np.sum(f.values * w0[:, i1:i1 + m][:, ::-1]))
    return _field(f, vals)


def b_alpha(f: GridFunction, g: GridFunction, spec: KernelSpec) -> OperatorField:
    """Bilinear fractional integral with per-cell kernel masses."""
    _require_common_grid(f, g)
    table = kernel_cell_table(spec, f)
    return _field(f, _correlate(f.values, g.values, table))


def b_truncated(f: GridFunction, g: GridFunction, d: float) -> OperatorField:
    """Kernel-free truncation: integral of f(x-y)g(x+y) over |y|_inf <= d."""
    _require_common_grid(f, g)
    table = _truncation_table(f, d)
    return _field(f, _correlate(f.values, g.values, table))


def b_alpha_dyadic(f: GridFunction, g: GridFunction, spec: KernelSpec,
                   q0: DyadicCube, min_level: int | None = None) -> OperatorField:
    """Dyadic model: for x in Q0, sum over the tower x in Q within Q0 of
    |Q|**(alpha/n - 1) * B_{l(Q)}(f,g)(x).

    Scales below ``min_level`` (default: the cell level) are omitted; the
    omitted part is geometrically small and its bound is reported.
    """
    _require_common_grid(f, g)
    spec.validate(f.dim)
    n = f.dim
    a = spec.alpha
    if min_level is None:
        min_level = f.cell_level
    if min_level < f.cell_level or min_level > q0.level:
        raise ParameterError("min_level must lie between the cell level and Q0")
    box = cube_box(f, q0)  # also validates Q0 against the grid
    vals = np.zeros_like(f.values)
    inner = tuple(slice(l, h) for l, h in zip(box.lo, box.hi))
    for level in range(min_level, q0.level + 1):
        d = 2.0 ** level
        weight = 2.0 ** (level * (a - n))
        term = b_truncated(f, g, d).fn.values
        vals[inner] += weight * term[inner]
    # omitted scales below min_level: B_d <= (2d)^n fmax gmax, summed geometrically
    fmax = float(np.abs(f.values).max())
    gmax = float(np.abs(g.values).max())
    tail = fmax * gmax * 2.0 ** n * 2.0 ** ((min_level - 1) * a) / (1.0 - 2.0 ** (-a))
    return _field(f, vals, tail)


def m_alpha_bilinear(f: GridFunction, g: GridFunction, alpha: float,
                     family: CubeFamily) -> OperatorField:
    """sup over dyadic radii d of (2d)**(alpha-n) * B_d(|f|, |g|)(x)."""
    _require_common_grid(f, g)
    n = f.dim
    if not (0.0 <= alpha < n):
        raise ParameterError(f"maximal exponent must satisfy 0 <= alpha < n, got {alpha}")
    fa = f.with_values(np.abs(f.values), "nonneg")
    ga = g.with_values(np.abs(g.values), "nonneg")
    out = np.zeros_like(f.values)
    for level in family.levels():
        d = 2.0 ** level
        scale = (2.0 * d) ** (alpha - n)
        np.maximum(out, scale * b_truncated(fa, ga, d).fn.values, out=out)
    return _field(f, out)


def m_alpha_vector(f: GridFunction, g: GridFunction, alpha: float,
                   r1: float, r2: float, family: CubeFamily) -> OperatorField:
    """sup over cubes containing x of |Q|**(alpha/n) (avg|f|**r1)**(1/r1)(avg|g|**r2)**(1/r2)."""
    _require_common_grid(f, g)
    if r1 <= 0 or r2 <= 0:
        raise ParameterError("vector maximal exponents must be positive")
    n = f.dim
    tf = PrefixTable(np.abs(f.values) ** r1)
    tg = PrefixTable(np.abs(g.values) ** r2)
    out = np.zeros_like(f.values)
    for cube in family.dyadic_entries():
        box = cube_box(f, cube)
        cells = box.cells()
        mf = tf.box_sum(box.lo, box.hi) / cells
        mg = tg.box_sum(box.lo, box.hi) / cells
        val = cube.volume ** (alpha / n) * mf ** (1.0 / r1) * mg ** (1.0 / r2)
        sl = box.slices()
        np.maximum(out[sl], val, out=out[sl])
    return _field(f, out)


def m_tilde(f: GridFunction, g: GridFunction, v: GridFunction, alpha: float,
            t: float, family: CubeFamily) -> OperatorField:
    """Weighted bilinear maximal: averages of |f|,|g| times the v power-mean.

    The weight factor is (avg_Q v**(t/(1-t)))**((1-t)/t), i.e. the power mean
    of v over Q with exponent t/(1-t); at t=1 it is the exact max of v on Q.
    """
    _require_common_grid(f, g)
    _require_common_grid(f, v)
    if not (0.0 < t <= 1.0):
        raise ParameterError(f"weight exponent t must lie in (0, 1], got {t}")
    if v.values.min() <= 0:
        raise ParameterError("weight must be strictly positive")
    n = f.dim
    tf = PrefixTable(np.abs(f.values))
    tg = PrefixTable(np.abs(g.values))
    out = np.zeros_like(f.values)
    for cube in family.dyadic_entries():
        box = cube_box(f, cube)
        cells = box.cells()
        mf = tf.box_sum(box.lo, box.hi) / cells
        mg = tg.box_sum(box.lo, box.hi) / cells
        slab = v.values[box.slices()]
        wfac = float(slab.max()) if t == 1.0 else power_mean(slab, t / (1.0 - t))
        val = cube.volume ** (alpha / n) * mf * mg * wfac
        sl = box.slices()
        np.maximum(out[sl], val, out=out[sl])
    return _field(f, out)


class TripleAverager:
    """Zero-extended averages over clipped triples 3Q, from one prefix table.

    The average divides by the full |3Q| = 3**n |Q| even when 3Q is clipped,
    matching the compact-support convention: outside the root the data is
    identically zero, so the clipped sum is the true integral over 3Q.
    """

    def __init__(self, f: GridFunction):
        self.grid = f
        self.table = PrefixTable(f.values)

    def mean(self, cube: DyadicCube) -> float:
        box = triple(cube, self.grid)
        s = self.table.box_sum(box.lo, box.hi) * self.grid.cell_volume
        return s / (3.0 ** self.grid.dim * cube.volume)


def m_triple_dyadic(f: GridFunction, g: GridFunction, family: CubeFamily) -> OperatorField:
    """sup over dyadic cubes containing x of avg_{3Q} f * avg_{3Q} g."""
    _require_common_grid(f, g)
    if f.values.min() < 0 or g.values.min() < 0:
        raise ParameterError("triple maximal expects nonnegative inputs")
    ta_f = TripleAverager(f)
    ta_g = TripleAverager(g)
    out = np.zeros_like(f.values)
    for cube in family.dyadic_entries():
        val = ta_f.mean(cube) * ta_g.mean(cube)
        sl = cube_box(f, cube).slices()
        np.maximum(out[sl], val, out=out[sl])
    return _field(f, out)
