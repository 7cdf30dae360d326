"""Stopping-time decomposition over the dyadic subcubes of a base cube.

Write m_3Q(f,g) for the product of zero-extended averages of f and g over the
(possibly clipped) triple 3Q.  Given a threshold base a > 1, generation k
collects the inclusion-maximal dyadic subcubes Q of Q0 with m_3Q(f,g) > a**k;
their union is D_k.  Carving E_jk = Q_jk minus D_{k+1} and E_0 = Q0 minus D_1
partitions Q0 exactly (cell-level set equality, verified by tests).

When a is large enough the construction also satisfies, for every selected
cube, the sandwich a**k < m_3Q <= 2**(2n) a**k (via the parent's maximality)
and the measure-halving |Q_jk intersect D_{k+1}| <= |Q_jk| / 2.  The halving
constant classically comes from a weak-type operator norm that is not
computable here, so ``choose_a`` replaces it by the smallest member of a
doubling schedule that ``verify_halving`` certifies; the downstream algorithm
only ever consumes the certified halving outcome, not the constant's origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import DyadicCube, GridFunction, cube_box, enumerate_subcubes
from .operators import TripleAverager
from .util import ParameterError


@dataclass(frozen=True)
class SelectedCube:
    cube: DyadicCube
    m_value: float
    e_cells: int  # cells of E_jk = cube minus next generation


@dataclass
class StoppingFamily:
    base: DyadicCube
    a: float
    generations: list[list[SelectedCube]]  # generations[k-1] holds level k
    e0_mask: np.ndarray                    # E_0 as a cell mask over the grid
    e_masks: dict                          # (k, cube) -> cell mask
    d_masks: list[np.ndarray]              # D_1, D_2, ... as cell masks
    m_by_cube: dict = field(default_factory=dict)

    @property
    def kmax(self) -> int:
        return len(self.generations)


def _m3(ta_f: TripleAverager, ta_g: TripleAverager, cube: DyadicCube) -> float:
    return ta_f.mean(cube) * ta_g.mean(cube)


def cz_decompose(f: GridFunction, g: GridFunction, q0: DyadicCube,
                 a: float) -> StoppingFamily:
    """Maximal-cube generations for thresholds a**k, with carved E-sets."""
    if a <= 1.0:
        raise ParameterError(f"threshold base must exceed 1, got {a}")
    if f.values.min() < 0 or g.values.min() < 0:
        raise ParameterError("decomposition expects nonnegative inputs")
    if q0.level <= f.cell_level:
        raise ParameterError("grid cells must be strictly finer than the base cube")
    base_box = cube_box(f, q0)
    ta_f, ta_g = TripleAverager(f), TripleAverager(g)
    cubes = enumerate_subcubes(q0, f.cell_level)
    m_by_cube = {c: _m3(ta_f, ta_g, c) for c in cubes}
    max_m = max(m_by_cube.values())

    generations: list[list[SelectedCube]] = []
    d_masks: list[np.ndarray] = []
    k = 1
    while max_m > a ** k:
        thresh = a ** k
        selected: list[DyadicCube] = []
        chosen: set = set()
        for cube in cubes:  # coarsest first: ancestors precede descendants
            if m_by_cube[cube] <= thresh:
                continue
            cur, covered = cube, False
            while cur.level < q0.level:
                cur = cur.parent()
                if cur in chosen:
                    covered = True
                    break
            if not covered:
                selected.append(cube)
                chosen.add(cube)
        mask = np.zeros(f.values.shape, dtype=bool)
        for cube in selected:
            mask[cube_box(f, cube).slices()] = True
        generations.append([SelectedCube(c, m_by_cube[c], 0) for c in selected])
        d_masks.append(mask)
        k += 1

    empty = np.zeros(f.values.shape, dtype=bool)
    e_masks = {}
    for idx, gen in enumerate(generations):
        next_mask = d_masks[idx + 1] if idx + 1 < len(d_masks) else empty
        refreshed = []
        for sel in gen:
            sl = cube_box(f, sel.cube).slices()
            emask = np.zeros(f.values.shape, dtype=bool)
            emask[sl] = ~next_mask[sl]
            e_masks[(idx + 1, sel.cube)] = emask
            refreshed.append(SelectedCube(sel.cube, sel.m_value, int(emask.sum())))
        generations[idx] = refreshed
    e0 = np.zeros(f.values.shape, dtype=bool)
    e0[base_box.slices()] = True
    if d_masks:
        e0 &= ~d_masks[0]
    return StoppingFamily(q0, a, generations, e0, e_masks, d_masks, m_by_cube)


@dataclass(frozen=True)
class HalvingReport:
    ok: bool
    worst_ratio: float
    offender: DyadicCube | None
    detail: str = ""


def verify_halving(sf: StoppingFamily, f: GridFunction, g: GridFunction) -> HalvingReport:
    """Check |Q_jk meet D_{k+1}| <= |Q_jk|/2 and |D_1| <= |Q0|/2; never raises."""
    worst, offender = 0.0, None
    base_cells = cube_box(f, sf.base).cells()
    if sf.d_masks:
        ratio = sf.d_masks[0].sum() / base_cells
        if ratio > worst:
            worst, offender = ratio, sf.base
    for idx, gen in enumerate(sf.generations):
        if idx + 1 >= len(sf.d_masks):
            break  # no next generation: intersection is empty
        next_mask = sf.d_masks[idx + 1]
        for sel in gen:
            sl = cube_box(f, sel.cube).slices()
            cells = cube_box(f, sel.cube).cells()
            ratio = next_mask[sl].sum() / cells
            if ratio > worst:
                worst, offender = ratio, sel.cube
    ok = worst <= 0.5
    detail = "halving certified" if ok else f"halving fails at ratio {worst:.6f}"
    return HalvingReport(ok, float(worst), offender, detail)


def choose_a(f: GridFunction, g: GridFunction, q0: DyadicCube,
             schedule=None) -> float:
    """Smallest doubling-schedule threshold base whose halving is certified.

    Termination: once a exceeds the largest triple-average product, every
    generation is empty and halving holds vacuously.
    """
    if schedule is None:
        def doubling():
            x = 2.0
            while True:
                yield x
                x *= 2.0
        schedule = doubling()
    for a in schedule:
        sf = cz_decompose(f, g, q0, a)
        if verify_halving(sf, f, g).ok:
            return a
    raise ParameterError("threshold schedule exhausted without certification")


def packing_sum(q_jk: DyadicCube, v: GridFunction, t: float, alpha: float) -> float:
    """Ratio of the dyadic-subcube packing sum to its closed-form bound.

    LHS: sum over dyadic Q within q_jk (down to cell level) of
         |Q|**((alpha/n + 1) t) (integral_Q v**(t/(1-t)))**(1-t).
    RHS: 2**(alpha t) / (2**(alpha t) - 1)
         * |q_jk|**((alpha/n) t) (avg v**(t/(1-t)))**(1-t) |q_jk|.

    The bound absorbs the whole infinite tower; the finite LHS is strictly
    below it and approaches the slack as the grid refines.
    """
    if not (0.0 < t < 1.0):
        raise ParameterError(f"packing exponent t must lie in (0,1), got {t}")
    n = v.dim
    if not (0.0 < alpha <= n):
        raise ParameterError(f"packing order must satisfy 0 < alpha <= n, got {alpha}")
    if v.values.min() <= 0:
        raise ParameterError("packing weight must be strictly positive")
    e = t / (1.0 - t)
    powered = v.values ** e
    if not np.all(np.isfinite(powered)):
        # stabilised path: cell powers overflow, integrate in shifted form
        raise ParameterError("weight power overflows; use t farther from 1")
    cell_vol = v.cell_volume
    lhs = 0.0
    for cube in enumerate_subcubes(q_jk, v.cell_level):
        sl = cube_box(v, cube).slices()
        integral = float(powered[sl].sum()) * cell_vol
        lhs += cube.volume ** ((alpha / n + 1.0) * t) * integral ** (1.0 - t)
    geo = 2.0 ** (alpha * t) / (2.0 ** (alpha * t) - 1.0)
    base_box = cube_box(v, q_jk)
    avg = float(powered[base_box.slices()].mean())
    rhs = geo * q_jk.volume ** ((alpha / n) * t) * avg ** (1.0 - t) * q_jk.volume
    return lhs / rhs
