"""Dyadic cubes, grid-sampled step functions, and constant-time box aggregation.

Geometry is the standard dyadic lattice: the cube of level ``k`` with integer
coordinates ``m`` occupies ``2**k * (m + [0,1)**n)``.  Grid data is piecewise
constant on the ``2**(n*L)`` cells obtained by halving a root cube ``L`` times
per axis, and is extended by zero outside the root.  Every integral of grid
data is then an exact finite sum over cells, which keeps downstream checks
exact for step functions.

Cell values are understood as the function's value on the whole cell
(midpoint semantics for synthetic smooth generators).  Boxes that stick out
of the root, such as triples ``3Q``, are clipped to the grid and the clipping
is recorded on the result: zero extension makes the clipped *sum* correct,
but averages of strictly positive weights over clipped boxes would silently
mix in artificial zeros, so weight characteristics refuse clipped boxes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .util import ParameterError

_FLAGS = ("none", "nonneg", "pos")


@dataclass(frozen=True)
class DyadicCube:
    """Dyadic cube 2**level * (coords + [0,1)**n)."""

    level: int
    coords: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def side(self) -> float:
        return 2.0 ** self.level

    @property
    def volume(self) -> float:
        return self.side ** self.dim

    def lower(self) -> tuple[float, ...]:
        return tuple(c * self.side for c in self.coords)

    def upper(self) -> tuple[float, ...]:
        return tuple((c + 1) * self.side for c in self.coords)

    def center(self) -> tuple[float, ...]:
        return tuple((c + 0.5) * self.side for c in self.coords)

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.level + 1, tuple(c >> 1 for c in self.coords))

    def children(self) -> list["DyadicCube"]:
        offsets = itertools.product((0, 1), repeat=self.dim)
        base = tuple(c << 1 for c in self.coords)
        return [
            DyadicCube(self.level - 1, tuple(b + o for b, o in zip(base, off)))
            for off in offsets
        ]

    def contains(self, other: "DyadicCube") -> bool:
        """Nested-or-disjoint containment test (self contains other)."""
        if other.level > self.level:
            return False
        shift = self.level - other.level
        return all((oc >> shift) == sc for oc, sc in zip(other.coords, self.coords))

    def sort_key(self):
        """Canonical order: coarsest first, then coordinates row-major."""
        return (-self.level, self.coords)


@dataclass(frozen=True)
class AlignedBox:
    """Axis-aligned half-open cell-index box ``[lo, hi)`` within one grid."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]
    clipped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(int(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(int(v) for v in self.hi))
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ParameterError(f"empty box {self.lo}..{self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def cells(self) -> int:
        n = 1
        for l, h in zip(self.lo, self.hi):
            n *= h - l
        return n

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(l, h) for l, h in zip(self.lo, self.hi))

    def sort_key(self):
        return (max(h - l for l, h in zip(self.lo, self.hi)), self.lo, self.hi)


@dataclass
class GridFunction:
    """Piecewise-constant real data on the cells of a dyadic root cube.

    ``values`` has shape ``(2**depth,) * dim`` with axis ``a`` indexing
    coordinate ``a``; flattening is row-major (last axis fastest).
    """

    dim: int
    root: DyadicCube
    depth: int
    values: np.ndarray
    flags: str = "none"

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError(f"dim must be 1 or 2, got {self.dim}")
        if self.root.dim != self.dim:
            raise ParameterError("root dimension mismatch")
        if self.depth < 0:
            raise ParameterError("depth must be >= 0")
        self.values = np.asarray(self.values, dtype=float)
        want = (2 ** self.depth,) * self.dim
        if self.values.shape != want:
            raise ParameterError(f"values shape {self.values.shape} != {want}")
        if self.flags not in _FLAGS:
            raise ParameterError(f"flags must be one of {_FLAGS}")
        if self.flags == "nonneg" and self.values.min() < 0:
            raise ParameterError("nonneg grid function has negative cells")
        if self.flags == "pos" and self.values.min() <= 0:
            raise ParameterError("pos grid function has nonpositive cells")

    @property
    def cells_per_axis(self) -> int:
        return 2 ** self.depth

    @property
    def cell_level(self) -> int:
        return self.root.level - self.depth

    @property
    def cell_side(self) -> float:
        return 2.0 ** self.cell_level

    @property
    def cell_volume(self) -> float:
        return self.cell_side ** self.dim

    def origin(self) -> tuple[float, ...]:
        return self.root.lower()

    def axis_midpoints(self, axis: int = 0) -> np.ndarray:
        h = self.cell_side
        o = self.origin()[axis]
        return o + (np.arange(self.cells_per_axis) + 0.5) * h

    def with_values(self, values, flags: str | None = None) -> "GridFunction":
        return GridFunction(self.dim, self.root, self.depth, values,
                            flags if flags is not None else "none")

    def refine(self, extra: int) -> "GridFunction":
        """Exact resampling of the step function to a grid ``extra`` levels finer."""
        if extra < 0:
            raise ParameterError("refine expects extra >= 0")
        if extra == 0:
            return GridFunction(self.dim, self.root, self.depth,
                                self.values.copy(), self.flags)
        v = self.values
        for axis in range(self.dim):
            v = np.repeat(v, 2 ** extra, axis=axis)
        return GridFunction(self.dim, self.root, self.depth + extra, v, self.flags)

    def total_integral(self) -> float:
        return float(self.values.sum()) * self.cell_volume


def cube_box(grid: GridFunction, cube: DyadicCube) -> AlignedBox:
    """Cell-index box of a dyadic cube that lies inside the grid's root."""
    if cube.level < grid.cell_level:
        raise ParameterError("cube is finer than the grid cells")
    if not grid.root.contains(cube):
        raise ParameterError("cube lies outside the grid root")
    shift = cube.level - grid.cell_level
    size = 1 << shift
    lo = []
    for c, r in zip(cube.coords, grid.root.coords):
        start = (c << shift) - (r << grid.depth)
        lo.append(start)
    return AlignedBox(tuple(lo), tuple(l + size for l in lo))


def triple(cube: DyadicCube, grid: GridFunction) -> AlignedBox:
    """The box 3Q = Q(c_Q, 3 l(Q)) clipped to the grid; clipping recorded."""
    inner = cube_box(grid, cube)
    m = grid.cells_per_axis
    size = inner.hi[0] - inner.lo[0]
    lo, hi, clipped = [], [], False
    for l, h in zip(inner.lo, inner.hi):
        a, b = l - size, h + size
        if a < 0:
            a, clipped = 0, True
        if b > m:
            b, clipped = m, True
        lo.append(a)
        hi.append(b)
    return AlignedBox(tuple(lo), tuple(hi), clipped)


def enumerate_subcubes(root: DyadicCube, min_level: int) -> list[DyadicCube]:
    """All dyadic subcubes of ``root`` with level in [min_level, root.level].

    Enumeration is coarsest-first, coordinates row-major; the root is first.
    """
    if min_level > root.level:
        raise ParameterError("min_level exceeds the root level")
    out = []
    for level in range(root.level, min_level - 1, -1):
        shift = root.level - level
        per_axis = 1 << shift
        base = tuple(c << shift for c in root.coords)
        for off in itertools.product(range(per_axis), repeat=root.dim):
            out.append(DyadicCube(level, tuple(b + o for b, o in zip(base, off))))
    return out


class PrefixTable:
    """Padded cumulative-sum table giving O(1) box sums by inclusion-exclusion."""

    def __init__(self, values: np.ndarray):
        v = np.asarray(values, dtype=float)
        p = v.cumsum(axis=0)
        shape = list(v.shape)
        shape[0] += 1
        for axis in range(1, v.ndim):
            p = p.cumsum(axis=axis)
            shape[axis] += 1
        padded = np.zeros(shape)
        padded[tuple(slice(1, None) for _ in range(v.ndim))] = p
        self.table = padded
        self.ndim = v.ndim

    def box_sum(self, lo, hi) -> float:
        t = self.table
        if self.ndim == 1:
            return float(t[hi[0]] - t[lo[0]])
        (a0, a1), (b0, b1) = lo, hi
        return float(t[b0, b1] - t[a0, b1] - t[b0, a1] + t[a0, a1])


def box_average(f: GridFunction, box: AlignedBox, power: float = 1.0) -> float:
    """Mean of |f|**power over the box, computed from a prefix table.

    Equals ``|box|**-1 * sum_cells |f|**power * cell_volume``; cell volumes
    cancel, so this is the arithmetic mean of the powered cell values.
    """
    sl = box.slices()
    block = f.values[sl]
    if power < 0 and np.min(np.abs(block)) <= 0:
        raise ParameterError("nonpositive value raised to negative power")
    table = PrefixTable(np.abs(f.values) ** power)
    return table.box_sum(box.lo, box.hi) / box.cells()


# --- MGF/1 file format -----------------------------------------------------
#
# Line 1:  MGF 1 dim=<n> rootlevel=<k> rootcoords=<m1,...,mn> depth=<L>
#          flags=<nonneg|pos|none>
# then 2**(n*L) decimal values, one per line, row-major (last axis fastest).
# Writers emit 17 significant digits.

def write_mgf(path, f: GridFunction) -> None:
    coords = ",".join(str(c) for c in f.root.coords)
    header = (f"MGF 1 dim={f.dim} rootlevel={f.root.level} "
              f"rootcoords={coords} depth={f.depth} flags={f.flags}")
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for v in f.values.ravel(order="C"):
            fh.write(f"{v:.17g}\n")


def read_mgf(path) -> GridFunction:
    with open(path) as fh:
        header = fh.readline().strip()
        parts = header.split()
        if len(parts) != 7 or parts[0] != "MGF" or parts[1] != "1":
            raise ParameterError(f"not an MGF/1 header: {header!r}")
        kv = {}
        for tok in parts[2:]:
            key, _, val = tok.partition("=")
            kv[key] = val
        try:
            dim = int(kv["dim"])
            rootlevel = int(kv["rootlevel"])
            rootcoords = tuple(int(c) for c in kv["rootcoords"].split(","))
            depth = int(kv["depth"])
            flags = kv["flags"]
        except (KeyError, ValueError) as exc:
            raise ParameterError(f"malformed MGF/1 header: {header!r}") from exc
        count = (2 ** depth) ** dim
        vals = np.empty(count)
        for i in range(count):
            line = fh.readline()
            if not line:
                raise ParameterError(f"MGF/1 file truncated at value {i}")
            vals[i] = float(line)
    values = vals.reshape((2 ** depth,) * dim, order="C")
    return GridFunction(dim, DyadicCube(rootlevel, rootcoords), depth, values, flags)


def unit_root(dim: int) -> DyadicCube:
    """The cube [0,1)**dim."""
    return DyadicCube(0, (0,) * dim)
