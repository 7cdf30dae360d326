"""Weight systems and the characteristic constants of the two-weight theory.

A characteristic is a supremum over single cubes or nested cube pairs
Q inside Q' of a product of weighted averages.  All suprema here run over
explicit finite dyadic families and are monotone lower bounds of their
classical counterparts; growing the family can only increase the value, so
truncation is sound for lower-bound reporting.

Conventions shared by every characteristic:

* ``(avg_Q v**(t/(1-t)))**((1-t)/t)`` degenerates to the exact max of v over
  Q at t = 1; intermediate powers go through a shifted power mean so that
  exponents near t = 1 cannot overflow.  A non-finite product is reported as
  +inf with the ``overflowed`` flag set.
* ``r = inf`` drops the |Q'|**(1/r) factor.
* Weights must be strictly positive on the grid; zero cells are rejected
  rather than regularized, since negative dual powers would be undefined.
* Families must consist of (never clipped) dyadic cubes: averaging a
  positive weight against the artificial zeros of a clipped box would
  corrupt the constants.

The attaining pair is recomputed through the same code path as the scan, so
reports reproduce bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DyadicCube, GridFunction, cube_box
from .norms import CubeFamily
from .util import ParameterError, power_mean

INF = float("inf")


# --- weight systems ---------------------------------------------------------

@dataclass(frozen=True)
class PowerWeightSpec:
    """Synthetic descriptor: v = |x - c|**(-beta), w_i = |x - c|**(gamma_i)."""

    beta: float
    gamma1: float
    gamma2: float
    center: tuple[float, ...]


@dataclass
class WeightSystem:
    v: GridFunction
    w1: GridFunction
    w2: GridFunction
    synthetic: PowerWeightSpec | None = None

    def __post_init__(self):
        for name, w in (("v", self.v), ("w1", self.w1), ("w2", self.w2)):
            if w.values.min() <= 0:
                raise ParameterError(f"weight {name} must be strictly positive")
        if (self.v.root != self.w1.root or self.v.root != self.w2.root
                or self.v.depth != self.w1.depth or self.v.depth != self.w2.depth):
            raise ParameterError("weights must share one grid")

    def regenerate(self) -> "WeightSystem":
        """Rebuild the grid data from the synthetic descriptor (exactly)."""
        if self.synthetic is None:
            raise ParameterError("weight system has no synthetic descriptor")
        return power_system(self.synthetic.beta, self.synthetic.gamma1,
                            self.synthetic.gamma2, self.synthetic.center,
                            self.v.root, self.v.depth)


def power_weight(beta: float, center, root: DyadicCube, depth: int) -> GridFunction:
    """|x - center|**beta on a grid: exact 1D cell averages, 2D midpoint values.

    1D uses the antiderivative of |u|**beta (logarithm at beta = -1), so cell
    values are exact averages even for cells straddling the center as long as
    the power stays integrable there (beta > -1).
    """
    dim = root.dim
    center = tuple(float(c) for c in (center if np.iterable(center) else (center,)))
    if len(center) != dim:
        raise ParameterError("center dimension mismatch")
    m = 2 ** depth
    h = 2.0 ** (root.level - depth)
    origin = root.lower()
    if dim == 1:
        edges = origin[0] + h * np.arange(m + 1) - center[0]
        vals = np.empty(m)
        for i in range(m):
            a, b = edges[i], edges[i + 1]
            if beta <= -1.0 and a <= 0.0 <= b:
                raise ParameterError(
                    f"cell [{a + center[0]}, {b + center[0]}) touches the center: "
                    f"|x|**({beta}) is not integrable there")
            if beta == -1.0:
                integral = abs(math.log(abs(b / a)))
            else:
                def anti(u):
                    return math.copysign(abs(u) ** (beta + 1.0), u) / (beta + 1.0)
                integral = anti(b) - anti(a)
            vals[i] = integral / (b - a)
        return GridFunction(1, root, depth, vals, "pos")
    mids0 = origin[0] + h * (np.arange(m) + 0.5) - center[0]
    mids1 = origin[1] + h * (np.arange(m) + 0.5) - center[1]
    x0, x1 = np.meshgrid(mids0, mids1, indexing="ij")
    r = np.hypot(x0, x1)
    if beta < 0 and np.any(r == 0.0):
        raise ParameterError("a cell midpoint coincides with the center")
    if beta <= -dim:
        # non-integrable singularity: no cell may contain the center
        inside = np.all([(origin[d] <= center[d] < origin[d] + m * h)
                         for d in range(dim)])
        if inside:
            raise ParameterError(
                f"|x|**({beta}) is not integrable at the center inside the grid")
    vals = r ** beta
    return GridFunction(2, root, depth, vals, "pos")


def power_system(beta: float, gamma1: float, gamma2: float, center,
                 root: DyadicCube, depth: int) -> WeightSystem:
    """Stein-Weiss style system: v = |x|**(-beta), w_i = |x|**(gamma_i)."""
    v = power_weight(-beta, center, root, depth)
    w1 = power_weight(gamma1, center, root, depth)
    w2 = power_weight(gamma2, center, root, depth)
    return WeightSystem(v, w1, w2,
                        PowerWeightSpec(beta, gamma1, gamma2,
                                        tuple(float(c) for c in (center if np.iterable(center) else (center,)))))


# --- parameters --------------------------------------------------------------

VARIANTS = ("s<1", "s>=1", "remark", "one-weight-s<1", "one-weight-s>=1", "testing")
_REL_TOL = 1e-9


def _dual(x: float) -> float:
    if x <= 1.0:
        raise ParameterError(f"dual exponent needs x > 1, got {x}")
    return x / (x - 1.0)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _REL_TOL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class CharParams:
    """Exponent tuple for the weighted characteristics, with validity predicates."""

    alpha: float
    n: int
    q1: float
    q2: float
    p: float
    s: float
    t: float
    r: float
    a: float
    variant: str = "s<1"

    @property
    def q(self) -> float:
        return 1.0 / (1.0 / self.q1 + 1.0 / self.q2)

    def violations(self) -> list[str]:
        """Names of violated side conditions; empty when valid for the variant."""
        v = []
        cp = self
        if cp.variant not in VARIANTS:
            return [f"unknown variant {cp.variant!r}"]
        if cp.variant == "testing":
            if not (0.0 <= cp.alpha < cp.n):
                v.append("0 <= alpha < n")
            if not (1.0 <= cp.t <= cp.s):
                v.append("1 <= t <= s")
            if not (cp.alpha / cp.n >= (0.0 if cp.r == INF else 1.0 / cp.r) >= 0.0):
                v.append("alpha/n >= 1/r >= 0")
        else:
            if not (0.0 < cp.alpha < cp.n):
                v.append("0 < alpha < n")
            if not (0.0 < cp.t <= 1.0):
                v.append("0 < t <= 1")
            if not (cp.t <= cp.s):
                v.append("t <= s")
        if not (1.0 < cp.q1 and 1.0 < cp.q2):
            v.append("1 < q1, q2")
        if not (0.0 < cp.q <= cp.p):
            v.append("0 < q <= p")
        if not _close(cp.t / cp.s, cp.q / cp.p):
            v.append("t/s = q/p")
        one_weight = cp.variant.startswith("one-weight")
        if one_weight:
            if cp.r != INF:
                v.append("r = inf (one-weight)")
            if not _close(1.0 / cp.s, 1.0 / cp.p - cp.alpha / cp.n):
                v.append("1/s = 1/p - alpha/n")
            if not cp.a > 1.0:
                v.append("a > 1")
        elif cp.variant != "testing":
            r_inv = 0.0 if cp.r == INF else 1.0 / cp.r
            if cp.r != INF and cp.r <= 0:
                v.append("0 < r <= inf")
            if not (cp.alpha / cp.n > r_inv):
                v.append("alpha/n > 1/r")
            if not _close(1.0 / cp.s, 1.0 / cp.p + r_inv - cp.alpha / cp.n):
                v.append("1/s = 1/p + 1/r - alpha/n")
        else:
            r_inv = 0.0 if cp.r == INF else 1.0 / cp.r
            if not _close(1.0 / cp.s, 1.0 / cp.p + r_inv - cp.alpha / cp.n):
                v.append("1/s = 1/p + 1/r - alpha/n")
        if cp.variant in ("s<1", "remark", "one-weight-s<1"):
            if not cp.s < 1.0:
                v.append("s < 1")
        if cp.variant in ("s>=1", "one-weight-s>=1"):
            if not cp.s >= 1.0:
                v.append("s >= 1")
        if cp.variant == "s<1":
            if cp.r != INF and not (cp.s / (1.0 - cp.s) < cp.r):
                v.append("s/(1-s) < r")
            bound = min(cp.q1, cp.q2)
            if cp.r != INF:
                bound = min(bound, cp.r * (1.0 - cp.s) / cp.s)
            if not (1.0 < cp.a < bound):
                v.append("1 < a < min(r(1-s)/s, q1, q2)")
        if cp.variant in ("s>=1",):
            if not (1.0 < cp.a < min(cp.q1, cp.q2)):
                v.append("1 < a < min(q1, q2)")
        if cp.variant == "remark":
            if not (1.0 < cp.a < min(cp.q1, cp.q2)):
                v.append("1 < a < min(q1, q2)")
        return v

    def validate(self) -> "CharParams":
        bad = self.violations()
        if bad:
            raise ParameterError("invalid parameters: " + "; ".join(bad))
        return self


# --- characteristic scans -----------------------------------------------------

@dataclass(frozen=True)
class CharacteristicReport:
    value: float
    attaining: tuple[DyadicCube, DyadicCube] | None
    pairs_scanned: int
    overflowed: bool = False
    truncated: bool = False


def _family_cubes(family: CubeFamily) -> tuple[DyadicCube, ...]:
    cubes = family.dyadic_entries()
    if not cubes:
        raise ParameterError("empty cube family")
    return cubes


def _v_factor(ws: WeightSystem, box, t: float) -> float:
    slab = ws.v.values[box.slices()]
    if t == 1.0:
        return float(slab.max())
    return power_mean(slab, t / (1.0 - t))


def _w_dual_factor(w: GridFunction, box, dual: float) -> float:
    # (avg w**-dual)**(1/dual) = 1 / power_mean(w, -dual)
    return 1.0 / power_mean(w.values[box.slices()], -dual)


def _ancestor_chain(cube: DyadicCube, members: set, root: DyadicCube):
    out = []
    cur = cube
    while cur in members:
        out.append(cur)
        if cur.level >= root.level:
            break
        cur = cur.parent()
    return out


def _pair_scan(cubes, vfac, wfac, exponent: float, r_inv: float, root: DyadicCube,
               volumes, pair_budget: int | None):
    members = set(cubes)
    best, attaining = -1.0, None
    scanned = 0
    overflow = False
    truncated = False
    for q in cubes:
        for anc in _ancestor_chain(q, members, root):
            if pair_budget is not None and scanned >= pair_budget:
                truncated = True
                break
            val = ((volumes[q] / volumes[anc]) ** exponent
                   * (volumes[anc] ** r_inv if r_inv else 1.0)
                   * vfac[q] * wfac[anc])
            scanned += 1
            if not math.isfinite(val):
                overflow = True
                val = INF
            if val > best:
                best, attaining = val, (q, anc)
        if truncated:
            break
    return best, attaining, scanned, overflow, truncated


def char_two_weight(ws: WeightSystem, cp: CharParams, family: CubeFamily,
                    pair_budget: int | None = 500_000) -> CharacteristicReport:
    """Nested-pair characteristic of the two-weight bound.

    sup over Q in Q' of (|Q|/|Q'|)**E |Q'|**(1/r)
    (avg_Q v**(t/(1-t)))**((1-t)/t) prod_i (avg_Q' w_i**(-(q_i/a)'))**(1/(q_i/a)')
    with E = (1-s)/(as) for s < 1 and (1-as)/(as) for s >= 1.
    """
    if cp.variant not in ("s<1", "s>=1"):
        raise ParameterError(f"two-weight characteristic expects variant s<1 or s>=1, got {cp.variant}")
    cp.validate()
    cubes = _family_cubes(family)
    d1, d2 = _dual(cp.q1 / cp.a), _dual(cp.q2 / cp.a)
    exponent = ((1.0 - cp.s) / (cp.a * cp.s) if cp.variant == "s<1"
                else (1.0 - cp.a * cp.s) / (cp.a * cp.s))
    r_inv = 0.0 if cp.r == INF else 1.0 / cp.r
    vfac, wfac, volumes = {}, {}, {}
    for q in cubes:
        box = cube_box(ws.v, q)
        vfac[q] = _v_factor(ws, box, cp.t)
        wfac[q] = _w_dual_factor(ws.w1, box, d1) * _w_dual_factor(ws.w2, box, d2)
        volumes[q] = q.volume
    best, attaining, scanned, overflow, truncated = _pair_scan(
        cubes, vfac, wfac, exponent, r_inv, family.root, volumes, pair_budget)
    return CharacteristicReport(best, attaining, scanned, overflow, truncated)


def char_remark(ws: WeightSystem, cp: CharParams, family: CubeFamily) -> CharacteristicReport:
    """Single-cube majorant of the s < 1 two-weight characteristic.

    sup over Q of |Q|**(1/r) (avg_Q v**(as/(1-s)))**((1-s)/(as))
    prod_i (avg_Q w_i**(-(q_i/a)'))**(1/(q_i/a)').
    """
    if cp.s >= 1.0:
        raise ParameterError("single-cube majorant requires s < 1")
    d1, d2 = _dual(cp.q1 / cp.a), _dual(cp.q2 / cp.a)
    e_v = cp.a * cp.s / (1.0 - cp.s)
    r_inv = 0.0 if cp.r == INF else 1.0 / cp.r
    cubes = _family_cubes(family)
    best, attaining, overflow = -1.0, None, False
    for q in cubes:
        box = cube_box(ws.v, q)
        val = ((q.volume ** r_inv if r_inv else 1.0)
               * power_mean(ws.v.values[box.slices()], e_v)
               * _w_dual_factor(ws.w1, box, d1) * _w_dual_factor(ws.w2, box, d2))
        if not math.isfinite(val):
            overflow = True
            val = INF
        if val > best:
            best, attaining = val, (q, q)
    return CharacteristicReport(best, attaining, len(cubes), overflow)


def char_one_weight(ws: WeightSystem, cp: CharParams, family: CubeFamily,
                    pair_budget: int | None = 500_000) -> CharacteristicReport:
    """One-weight characteristic: r = inf, v = w1 w2, full dual exponents q_i'."""
    if not cp.variant.startswith("one-weight"):
        raise ParameterError(f"one-weight characteristic got variant {cp.variant}")
    cp.validate()
    prod = ws.w1.values * ws.w2.values
    if not np.allclose(ws.v.values, prod, rtol=1e-12, atol=0.0):
        raise ParameterError("one-weight system requires v = w1*w2 pointwise")
    cubes = _family_cubes(family)
    d1, d2 = _dual(cp.q1), _dual(cp.q2)
    exponent = ((1.0 - cp.s) / (cp.a * cp.s) if cp.variant.endswith("s<1")
                else (1.0 - cp.a * cp.s) / (cp.a * cp.s))
    vfac, wfac, volumes = {}, {}, {}
    for q in cubes:
        box = cube_box(ws.v, q)
        vfac[q] = _v_factor(ws, box, cp.t)
        wfac[q] = _w_dual_factor(ws.w1, box, d1) * _w_dual_factor(ws.w2, box, d2)
        volumes[q] = q.volume
    best, attaining, scanned, overflow, truncated = _pair_scan(
        cubes, vfac, wfac, exponent, 0.0, family.root, volumes, pair_budget)
    return CharacteristicReport(best, attaining, scanned, overflow, truncated)


def char_testing(ws: WeightSystem, cp: CharParams, family: CubeFamily) -> CharacteristicReport:
    """Necessary-condition constant: sup_Q |Q|**(1/r) (inf_Q v) prod dual averages."""
    d1, d2 = _dual(cp.q1), _dual(cp.q2)
    r_inv = 0.0 if cp.r == INF else 1.0 / cp.r
    cubes = _family_cubes(family)
    best, attaining = -1.0, None
    for q in cubes:
        box = cube_box(ws.v, q)
        val = ((q.volume ** r_inv if r_inv else 1.0)
               * float(ws.v.values[box.slices()].min())
               * _w_dual_factor(ws.w1, box, d1) * _w_dual_factor(ws.w2, box, d2))
        if val > best:
            best, attaining = val, (q, q)
    return CharacteristicReport(best, attaining, len(cubes))


def ap_characteristic(w: GridFunction, p: float, family: CubeFamily) -> CharacteristicReport:
    """Muckenhoupt constant sup_Q (avg_Q w) (avg_Q w**(1-p'))**(p-1)."""
    if p <= 1.0:
        raise ParameterError(f"A_p requires p > 1, got {p}")
    if w.values.min() <= 0:
        raise ParameterError("A_p weight must be strictly positive")
    e = 1.0 - _dual(p)  # = -1/(p-1)
    cubes = _family_cubes(family)
    best, attaining = -1.0, None
    for q in cubes:
        slab = w.values[cube_box(w, q).slices()]
        val = float(slab.mean()) / power_mean(slab, e)
        if val > best:
            best, attaining = val, (q, q)
    return CharacteristicReport(best, attaining, len(cubes))


def fs_majorant(w: GridFunction, r_i: float, s_i: float,
                family: CubeFamily) -> GridFunction:
    """Pointwise majorant W(x) = sup over cubes containing x of
    |Q|**(1/r_i) (avg_Q w**(s_i/(1-s_i)))**((1-s_i)/s_i)."""
    if not (0.0 < s_i < 1.0):
        raise ParameterError(f"majorant exponent must lie in (0,1), got {s_i}")
    if w.values.min() <= 0:
        raise ParameterError("majorant weight must be strictly positive")
    r_inv = 0.0 if r_i == INF else 1.0 / r_i
    e = s_i / (1.0 - s_i)
    out = np.zeros_like(w.values)
    for q in _family_cubes(family):
        box = cube_box(w, q)
        val = (q.volume ** r_inv if r_inv else 1.0) * power_mean(w.values[box.slices()], e)
        sl = box.slices()
        np.maximum(out[sl], val, out=out[sl])
    flags = "pos" if out.min() > 0 else "nonneg"
    return GridFunction(w.dim, w.root, w.depth, out, flags)


def pair_value(ws: WeightSystem, cp: CharParams, q: DyadicCube, qp: DyadicCube) -> float:
    """Recompute one nested-pair value through the scan's own code path."""
    d1, d2 = _dual(cp.q1 / cp.a), _dual(cp.q2 / cp.a)
    exponent = ((1.0 - cp.s) / (cp.a * cp.s) if cp.variant == "s<1"
                else (1.0 - cp.a * cp.s) / (cp.a * cp.s))
    r_inv = 0.0 if cp.r == INF else 1.0 / cp.r
    box_q = cube_box(ws.v, q)
    box_a = cube_box(ws.v, qp)
    wfac = _w_dual_factor(ws.w1, box_a, d1) * _w_dual_factor(ws.w2, box_a, d2)
    return ((q.volume / qp.volume) ** exponent
            * (qp.volume ** r_inv if r_inv else 1.0)
            * _v_factor(ws, box_q, cp.t) * wfac)
