"""Discrete Lebesgue, weak-Lebesgue, and Morrey quasi-norms over cube families.

The Morrey quantity of a cube is ``|Q|**(1/p) * (avg_Q |f|**q)**(1/q)`` with
``0 < q <= p``.  The classical supremum ranges over an infinite cube family;
here every supremum is taken over an explicit finite family and is therefore
a monotone lower bound of the classical value: growing the family can only
increase the reported norm.  Two families are provided and both values can be
reported side by side, since no equivalence constant between them is assumed
anywhere:

* ``dyadic-subcubes`` - all dyadic subcubes of a root down to a level;
* ``all-aligned-cubes`` - every axis-aligned cube whose corners are grid
  points (a cofinal subfamily of all open cubes for step functions, so for
  grid data the all-cubes supremum is attained exactly).

Ties in the max-reduction keep the first cube in canonical order (coarsest
first, then row-major start), so results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (AlignedBox, DyadicCube, GridFunction, PrefixTable,
                   cube_box, enumerate_subcubes)
from .util import ParameterError

DYADIC = "dyadic-subcubes"
ALIGNED = "all-aligned-cubes"
CUSTOM = "custom"


@dataclass(frozen=True)
class CubeFamily:
    """A finite cube family: explicit entries, or an implicit aligned sweep.

    For ``all-aligned-cubes`` the entries are not materialized (there are
    O(M**2) of them in 1D); ``aligned_sizes`` lists the admitted side lengths
    in cells and positions range over every valid start.
    """

    tag: str
    root: DyadicCube
    entries: tuple = ()
    aligned_depth: int = 0
    aligned_sizes: tuple[int, ...] = ()

    def __len__(self):
        if self.tag == ALIGNED:
            m = 2 ** self.aligned_depth
            n = self.root.dim
            return sum((m - s + 1) ** n for s in self.aligned_sizes)
        return len(self.entries)

    def dyadic_entries(self) -> tuple[DyadicCube, ...]:
        if self.tag == ALIGNED:
            raise ParameterError("aligned family has no dyadic entries")
        bad = [e for e in self.entries if not isinstance(e, DyadicCube)]
        if bad:
            raise ParameterError("family contains non-dyadic entries")
        return self.entries

    def levels(self) -> list[int]:
        """Distinct dyadic levels present, coarsest first."""
        return sorted({c.level for c in self.dyadic_entries()}, reverse=True)


def dyadic_family(root: DyadicCube, min_level: int) -> CubeFamily:
    return CubeFamily(DYADIC, root, tuple(enumerate_subcubes(root, min_level)))


def aligned_family(grid: GridFunction, budget: int | None = 2_000_000) -> CubeFamily:
    """Every grid-cornered cube; sizes are thinned to dyadic ones over budget."""
    m = grid.cells_per_axis
    n = grid.dim
    sizes = tuple(range(1, m + 1))
    count = sum((m - s + 1) ** n for s in sizes)
    if budget is not None and count > budget:
        sizes = tuple(1 << j for j in range(grid.depth + 1))
        count = sum((m - s + 1) ** n for s in sizes)
        if count > budget:
            raise ParameterError(
                f"aligned family needs {count} cubes, budget is {budget}")
    return CubeFamily(ALIGNED, grid.root, (), grid.depth, sizes)


def custom_family(root: DyadicCube, entries) -> CubeFamily:
    return CubeFamily(CUSTOM, root, tuple(entries))


@dataclass(frozen=True)
class NormReport:
    value: float
    attaining: DyadicCube | AlignedBox | None


def lebesgue_norm(f: GridFunction, t: float, box: AlignedBox | None = None) -> float:
    """(sum over the box of |f|**t * cell_volume)**(1/t)."""
    if t <= 0:
        raise ParameterError(f"Lebesgue exponent must be positive, got {t}")
    vals = f.values if box is None else f.values[box.slices()]
    s = float(np.sum(np.abs(vals) ** t)) * f.cell_volume
    return s ** (1.0 / t)


def weak_quasinorm(f: GridFunction, p: float) -> float:
    """sup over lambda of lambda * |{|f| > lambda}|**(1/p), exact on step data.

    Candidates are the distinct values v of |f| with the measure of
    ``{|f| >= v}``: on each plateau of the distribution function the product
    increases in lambda, so its supremum is the left limit at the next value.
    """
    if p <= 0:
        raise ParameterError(f"weak exponent must be positive, got {p}")
    vals = np.abs(f.values).ravel()
    order = np.argsort(vals)[::-1]
    sorted_vals = vals[order]
    if sorted_vals[0] == 0.0:
        return 0.0
    measures = (np.arange(vals.size) + 1) * f.cell_volume
    keep = sorted_vals > 0
    cand = sorted_vals[keep] * measures[keep] ** (1.0 / p)
    return float(cand.max())


def _entry_stats(f_pow_table: PrefixTable, grid: GridFunction, entry):
    """(measure, mean of the powered values, canonical key) for one entry."""
    if isinstance(entry, DyadicCube):
        box = cube_box(grid, entry)
        measure = entry.volume
        key = entry.sort_key()
    else:
        box = entry
        measure = box.cells() * grid.cell_volume
        key = box.sort_key()
    mean = f_pow_table.box_sum(box.lo, box.hi) / box.cells()
    return measure, mean, key


def morrey_norm(f: GridFunction, p: float, q: float, family: CubeFamily) -> NormReport:
    """max over the family of |Q|**(1/p) * (avg_Q |f|**q)**(1/q)."""
    if not (0 < q <= p < np.inf):
        raise ParameterError(f"Morrey exponents need 0 < q <= p < inf, got q={q} p={p}")
    if len(family) == 0:
        raise ParameterError("empty cube family")
    if family.tag == ALIGNED:
        return _morrey_aligned(f, p, q, family)
    table = PrefixTable(np.abs(f.values) ** q)
    best_val, best_entry = -1.0, None
    for entry in family.entries:
        measure, mean, _ = _entry_stats(table, f, entry)
        val = measure ** (1.0 / p) * mean ** (1.0 / q)
        if val > best_val:
            best_val, best_entry = val, entry
    return NormReport(best_val, best_entry)


def _morrey_aligned(f: GridFunction, p: float, q: float, family: CubeFamily) -> NormReport:
    """Aligned-family sweep without materializing entries.

    For a fixed side the cube value is monotone in the window sum, so only the
    maximal window per side matters; windows come from the prefix table in one
    vectorized pass per side.
    """
    if f.depth != family.aligned_depth or f.root != family.root:
        raise ParameterError("aligned family was built for a different grid")
    powered = np.abs(f.values) ** q
    m = f.cells_per_axis
    h = f.cell_side
    best_val, best_box = -1.0, None
    if f.dim == 1:
        prefix = np.concatenate([[0.0], powered.cumsum()])
        for s in family.aligned_sizes:
            windows = prefix[s:] - prefix[:-s]
            i = int(np.argmax(windows))
            measure = (s * h)
            val = measure ** (1.0 / p) * (windows[i] / s) ** (1.0 / q)
            if val > best_val:
                best_val = val
                best_box = AlignedBox((i,), (i + s,))
    else:
        t = PrefixTable(powered).table
        for s in family.aligned_sizes:
            win = (t[s:, s:] - t[:-s, s:] - t[s:, :-s] + t[:-s, :-s])
            flat = int(np.argmax(win))
            i0, i1 = divmod(flat, win.shape[1])
            measure = (s * h) ** 2
            val = measure ** (1.0 / p) * (win[i0, i1] / s ** 2) ** (1.0 / q)
            if val > best_val:
                best_val = val
                best_box = AlignedBox((i0, i1), (i0 + s, i1 + s))
    return NormReport(best_val, best_box)


def pair_morrey_sup(f: GridFunction, g: GridFunction, p: float,
                    q1: float, q2: float, family: CubeFamily) -> NormReport:
    """max over cubes of |Q|**(1/p) (avg |f|**q1)**(1/q1) (avg |g|**q2)**(1/q2).

    This is the normalization functional on the right-hand side of the
    weighted bounds; f and g must share a grid.
    """
    if f.values.shape != g.values.shape or f.root != g.root:
        raise ParameterError("pair supremum needs a common grid")
    if q1 <= 0 or q2 <= 0 or p <= 0:
        raise ParameterError("pair supremum exponents must be positive")
    tf = PrefixTable(np.abs(f.values) ** q1)
    tg = PrefixTable(np.abs(g.values) ** q2)
    best_val, best_entry = -1.0, None
    for entry in family.dyadic_entries():
        box = cube_box(f, entry)
        cells = box.cells()
        mf = tf.box_sum(box.lo, box.hi) / cells
        mg = tg.box_sum(box.lo, box.hi) / cells
        val = entry.volume ** (1.0 / p) * mf ** (1.0 / q1) * mg ** (1.0 / q2)
        if val > best_val:
            best_val, best_entry = val, entry
    return NormReport(best_val, best_entry)
