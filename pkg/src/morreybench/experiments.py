"""Theorem-level empirical verification harnesses.

The boundedness statements assert the existence of a constant C.  A finite
grid cannot exhibit C, but it can falsify boundedness: the harnesses compute
left/right norm ratios over seeded function families at increasing grid
refinement and assert that the worst ratio does not grow beyond five percent
per level.  The sharpness construction provides the positive control: on the
parameter branch where no constant exists, the measured Morrey norm blows up
along a predicted power law in the cluster spacing delta, while on the
boundary branch the fitted slope is flat.

Function families span the extremes the estimates are sensitive to: flat
random steps with log-uniform cells, indicators of random dyadic cubes,
sampled smooth bumps, and the lattice-of-clusters sharpness pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DyadicCube, GridFunction, cube_box, unit_root
from .norms import (CubeFamily, aligned_family, dyadic_family,
                    morrey_norm, pair_morrey_sup)
from .operators import (KernelSpec, b_alpha, i_alpha, m_alpha_bilinear,
                        m_alpha_vector)
from .util import NumericalError, ParameterError, make_rng, parallel_map
from .weights import (INF, CharParams, WeightSystem, char_one_weight,
                      char_testing, char_two_weight, power_weight)

THEOREMS = ("bilinear-ratio", "bilinear-sum", "bilinear-critical",
            "linear-adams", "product-embedding", "two-weight", "one-weight",
            "olsen")


# --- exponent profiles --------------------------------------------------------

@dataclass(frozen=True)
class ExponentProfile:
    """The exponent tuple shared by the harnesses; unused slots stay None."""

    alpha: float
    n: int
    p1: float | None = None
    q1: float | None = None
    p2: float | None = None
    q2: float | None = None
    p: float | None = None
    q: float | None = None
    s: float | None = None
    t: float | None = None
    r: float | None = None
    a: float | None = None

    def violations(self, theorem: str) -> list[str]:
        return profile_violations(self, theorem)

    def validate(self, theorem: str) -> "ExponentProfile":
        bad = self.violations(theorem)
        if bad:
            raise ParameterError(
                f"hypotheses of {theorem} violated: " + "; ".join(bad))
        return self


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


def profile_violations(pr: ExponentProfile, theorem: str) -> list[str]:
    v = []
    n, alpha = pr.n, pr.alpha
    if theorem in ("bilinear-ratio", "bilinear-sum", "bilinear-critical"):
        if not (0.0 < alpha < n):
            v.append("0 < alpha < n")
        for qi, pi, tag in ((pr.q1, pr.p1, "1"), (pr.q2, pr.p2, "2")):
            if not (1.0 < qi <= pi):
                v.append(f"1 < q{tag} <= p{tag}")
        if not (1.0 / pr.q1 + 1.0 / pr.q2 < 1.0):
            v.append("1/q1 + 1/q2 < 1")
    if theorem in ("bilinear-ratio", "bilinear-sum"):
        if not (1.0 < pr.t <= pr.s):
            v.append("1 < t <= s")
        if not _close(1.0 / pr.s, 1.0 / pr.p1 + 1.0 / pr.p2 - alpha / n):
            v.append("1/s = 1/p1 + 1/p2 - alpha/n")
    if theorem == "bilinear-ratio":
        if not (_close(pr.t / pr.s, pr.q1 / pr.p1)
                and _close(pr.t / pr.s, pr.q2 / pr.p2)):
            v.append("t/s = q1/p1 = q2/p2")
    if theorem == "bilinear-sum":
        if not _close(1.0 / pr.t, 1.0 / pr.q1 + 1.0 / pr.q2 - alpha / n):
            v.append("1/t = 1/q1 + 1/q2 - alpha/n")
    if theorem == "bilinear-critical":
        if not _close(pr.p1, n / alpha):
            v.append("p1 = n/alpha")
        if not (pr.p2 < pr.q2 * n / alpha):
            v.append("p2 < q2 n/alpha")
    if theorem == "linear-adams":
        if not (0.0 < alpha < n):
            v.append("0 < alpha < n")
        if not (1.0 < pr.q1 <= pr.p1):
            v.append("1 < q <= p")
        if not (1.0 < pr.t <= pr.s):
            v.append("1 < t <= s")
        if not _close(1.0 / pr.s, 1.0 / pr.p1 - alpha / n):
            v.append("1/s = 1/p - alpha/n")
        if not _close(pr.t / pr.s, pr.q1 / pr.p1):
            v.append("t/s = q/p")
    if theorem == "product-embedding":
        if not (0.0 < alpha < n):
            v.append("0 < alpha < n")
        if not (1.0 < pr.q1 <= pr.p1):
            v.append("1 < p <= p0")
        if not (1.0 < pr.q2 <= pr.p2):
            v.append("1 < q <= q0")
        if not (1.0 < pr.t <= pr.s):
            v.append("1 < r <= r0")
        if not (pr.q2 > pr.t):
            v.append("q > r")
        if not (1.0 / pr.p1 > alpha / n):
            v.append("1/p0 > alpha/n")
        if not (1.0 / pr.p2 <= alpha / n):
            v.append("1/q0 <= alpha/n")
        if not _close(1.0 / pr.s, 1.0 / pr.p1 + 1.0 / pr.p2 - alpha / n):
            v.append("1/r0 = 1/p0 + 1/q0 - alpha/n")
        if not _close(pr.t / pr.s, pr.q1 / pr.p1):
            v.append("r/r0 = p/p0")
    if theorem == "olsen":
        if not (0.0 < alpha < n):
            v.append("0 < alpha < n")
        if not (1.0 < pr.q1 and 1.0 < pr.q2):
            v.append("1 < q1, q2")
        if not (0.0 < pr.t <= pr.s < 1.0):
            v.append("0 < t <= s < 1")
        r_inv = 0.0 if pr.r == INF else 1.0 / pr.r
        if pr.r != INF and not (pr.s / (1.0 - pr.s) < pr.r):
            v.append("s/(1-s) < r")
        if not (alpha / n > r_inv):
            v.append("alpha/n > 1/r")
        if not _close(1.0 / pr.s, 1.0 / pr.p + r_inv - alpha / n):
            v.append("1/s = 1/p + 1/r - alpha/n")
        q = 1.0 / (1.0 / pr.q1 + 1.0 / pr.q2)
        if not _close(pr.t / pr.s, q / pr.p):
            v.append("t/s = q/p")
        if not (pr.a is not None and pr.a > 1.0):
            v.append("a > 1")
    if theorem in ("two-weight", "one-weight"):
        pass  # validated through CharParams by the caller
    if theorem not in THEOREMS:
        v.append(f"unknown theorem id {theorem!r}")
    return v


# --- function zoo --------------------------------------------------------------

def random_step(seed: int, depth: int, dim: int = 1,
                root: DyadicCube | None = None) -> GridFunction:
    """Log-uniform i.i.d. cells in [e^-2, e^2]."""
    root = root if root is not None else unit_root(dim)
    rng = make_rng(seed, 101)
    vals = np.exp(rng.uniform(-2.0, 2.0, size=(2 ** depth,) * dim))
    return GridFunction(dim, root, depth, vals, "pos")


def indicator_step(seed: int, depth: int, dim: int = 1,
                   root: DyadicCube | None = None) -> GridFunction:
    root = root if root is not None else unit_root(dim)
    rng = make_rng(seed, 103)
    level = int(rng.integers(root.level - depth + 1, root.level + 1))
    shift = root.level - level
    coords = tuple(int(rng.integers(0, 1 << shift)) + (c << shift)
                   for c in root.coords)
    cube = DyadicCube(level, coords)
    vals = np.zeros((2 ** depth,) * dim)
    template = GridFunction(dim, root, depth, vals, "none")
    vals[cube_box(template, cube).slices()] = 1.0
    return GridFunction(dim, root, depth, vals, "nonneg")


def bump_step(seed: int, depth: int, dim: int = 1,
              root: DyadicCube | None = None) -> GridFunction:
    root = root if root is not None else unit_root(dim)
    rng = make_rng(seed, 107)
    side = root.side
    center = rng.uniform(0.3, 0.7, size=dim) * side
    width = rng.uniform(0.08, 0.2) * side
    m = 2 ** depth
    h = side / m
    axes = [root.lower()[d] + (np.arange(m) + 0.5) * h for d in range(dim)]
    if dim == 1:
        r2 = (axes[0] - center[0]) ** 2
    else:
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        r2 = (xx - center[0]) ** 2 + (yy - center[1]) ** 2
    return GridFunction(dim, root, depth, np.exp(-r2 / width ** 2), "pos")


_KINDS = {"step": random_step, "indicator": indicator_step, "bump": bump_step}


def make_pairs(kind: str, count: int, seed: int, depth: int, dim: int = 1,
               root: DyadicCube | None = None):
    """Seeded (name, f, g) pairs of one zoo kind at a base depth."""
    if kind not in _KINDS:
        raise ParameterError(f"unknown pair kind {kind!r}")
    gen = _KINDS[kind]
    out = []
    for i in range(count):
        f = gen(seed + 2 * i, depth, dim, root)
        g = gen(seed + 2 * i + 1, depth, dim, root)
        out.append((f"{kind}-{i}", f, g))
    return out


# --- ratio harness --------------------------------------------------------------

@dataclass(frozen=True)
class RatioRecord:
    theorem: str
    params_id: str
    pair_id: str
    level: int
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0
        return self.lhs / self.rhs


@dataclass
class HarnessResult:
    theorem: str
    records: list
    max_ratio_by_level: dict
    growth_limit: float = 1.05

    @property
    def stable(self) -> bool:
        levels = sorted(self.max_ratio_by_level)
        pairs = zip(levels, levels[1:])
        return all(self.max_ratio_by_level[b]
                   <= self.growth_limit * self.max_ratio_by_level[a]
                   for a, b in pairs)


def _theorem_sides(theorem, pr, f, g, fam, ws, cp):
    spec = KernelSpec(pr.alpha)
    if theorem in ("bilinear-ratio", "bilinear-sum"):
        B = b_alpha(f, g, spec).fn
        lhs = morrey_norm(B, pr.s, pr.t, fam).value
        rhs = (morrey_norm(f, pr.p1, pr.q1, fam).value
               * morrey_norm(g, pr.p2, pr.q2, fam).value)
    elif theorem == "bilinear-critical":
        B = b_alpha(f, g, spec).fn
        lhs = morrey_norm(B, pr.p2, pr.q2, fam).value
        rhs = (morrey_norm(f, pr.p1, pr.q1, fam).value
               * morrey_norm(g, pr.p2, pr.q2, fam).value)
    elif theorem == "linear-adams":
        I = i_alpha(f, spec).fn
        lhs = morrey_norm(I, pr.s, pr.t, fam).value
        rhs = morrey_norm(f, pr.p1, pr.q1, fam).value
    elif theorem == "product-embedding":
        I = i_alpha(f, spec).fn
        prod = I.with_values(np.abs(g.values) * I.values)
        lhs = morrey_norm(prod, pr.s, pr.t, fam).value
        rhs = (morrey_norm(g, pr.p2, pr.q2, fam).value
               * morrey_norm(f, pr.p1, pr.q1, fam).value)
    elif theorem in ("two-weight", "one-weight"):
        B = b_alpha(f, g, spec).fn
        weighted = B.with_values(B.values * ws.v.values)
        lhs = morrey_norm(weighted, cp.s, cp.t, fam).value
        fw = f.with_values(np.abs(f.values) * ws.w1.values)
        gw = g.with_values(np.abs(g.values) * ws.w2.values)
        sup = pair_morrey_sup(fw, gw, cp.p, cp.q1, cp.q2, fam).value
        char = (char_two_weight(ws, cp, fam) if theorem == "two-weight"
                else char_one_weight(ws, cp, fam))
        rhs = char.value * sup
    elif theorem == "olsen":
        B = b_alpha(f, g, spec).fn
        weighted = B.with_values(B.values * ws.v.values)
        lhs = morrey_norm(weighted, pr.s, pr.t, fam).value
        vnorm = morrey_norm(ws.v, pr.r, pr.t / (1.0 - pr.t), fam).value
        sup = pair_morrey_sup(f, g, pr.p, pr.q1, pr.q2, fam).value
        rhs = vnorm * sup
    else:
        raise ParameterError(f"unknown theorem id {theorem!r}")
    return lhs, rhs


def ratio_harness(theorem: str, profile: ExponentProfile, pairs, levels,
                  ws: WeightSystem | None = None, cp: CharParams | None = None,
                  params_id: str = "", growth_limit: float = 1.05) -> HarnessResult:
    """LHS/RHS ratios for one theorem over pairs and refinement levels.

    ``pairs`` holds (name, f, g) at a base depth; each level re-samples the
    same step functions on the finer grid (exactly), so growth in the worst
    ratio would witness unboundedness.  A zero right side with nonzero left
    side aborts: it cannot occur for positive weights and nonzero data.
    """
    if theorem in ("two-weight", "one-weight"):
        if ws is None or cp is None:
            raise ParameterError(f"{theorem} harness needs a weight system and parameters")
        cp.validate()
    else:
        profile.validate(theorem)
    records = []
    for level in levels:
        def run_pair(item, level=level):
            name, f, g = item
            if level < f.depth:
                raise ParameterError("refinement level below the pair's base depth")
            ff, gg = f.refine(level - f.depth), g.refine(level - g.depth)
            fam = dyadic_family(ff.root, ff.cell_level)
            ws_fine = None
            if ws is not None:
                ws_fine = WeightSystem(ws.v.refine(level - ws.v.depth),
                                       ws.w1.refine(level - ws.w1.depth),
                                       ws.w2.refine(level - ws.w2.depth))
            lhs, rhs = _theorem_sides(theorem, profile, ff, gg, fam, ws_fine, cp)
            if rhs == 0.0 and lhs > 0.0:
                raise NumericalError(
                    f"zero right side with nonzero left side for pair {name}")
            return RatioRecord(theorem, params_id, name, level, lhs, rhs)
        records.extend(parallel_map(run_pair, pairs))
    by_level = {}
    for rec in records:
        by_level[rec.level] = max(by_level.get(rec.level, 0.0), rec.ratio)
    return HarnessResult(theorem, records, by_level, growth_limit)


# --- sharpness ------------------------------------------------------------------

@dataclass(frozen=True)
class SharpnessConfig:
    """Lattice-of-clusters construction on the unit cube.

    delta runs over 2**-m for m in delta_exps; the cluster count per axis is
    N = floor(delta**(q1/p1 - 1)); grids use depth m + depth_extra so that the
    cluster triples are grid-aligned.  The target norm uses exponents (s, t)
    with 1/s = 1/p1 + 1/p2 - alpha/n.
    """

    n: int
    alpha: float
    p1: float
    q1: float
    p2: float
    q2: float
    t: float
    delta_exps: tuple[int, ...] = (4, 5, 6, 7, 8)
    depth_extra: int = 3

    @property
    def s(self) -> float:
        return 1.0 / (1.0 / self.p1 + 1.0 / self.p2 - self.alpha / self.n)

    def validate(self) -> "SharpnessConfig":
        if self.n != 1:
            raise ParameterError("sharpness harness is one-dimensional")
        if not (0.0 < self.alpha < self.n):
            raise ParameterError("0 < alpha < n fails")
        for qi, pi in ((self.q1, self.p1), (self.q2, self.p2)):
            if not (0.0 < qi <= pi):
                raise ParameterError("0 < q_i <= p_i fails")
        if self.s <= 0:
            raise ParameterError("1/s = 1/p1 + 1/p2 - alpha/n must be positive")
        if not (0.0 < self.t <= self.s):
            raise ParameterError("0 < t <= s fails")
        if self.depth_extra < 1:
            raise ParameterError("depth_extra must be >= 1 to align triples")
        return self


@dataclass(frozen=True)
class SharpnessPairMeta:
    delta: float
    count: int           # clusters per axis
    inner_boxes: tuple   # cell boxes of the inner cubes Q_j
    height_f: float
    height_g: float


def build_sharpness_pair(cfg: SharpnessConfig, m: int):
    """Step pair supported on the union of cluster triples at delta = 2**-m.

    Cluster centers sit on the open-unit-cube lattice (1/N) Z^n and are
    snapped to the evaluation grid (a shift of at most half a cell) so every
    triple is grid-aligned even when N is not a power of two.
    """
    cfg.validate()
    delta = 2.0 ** (-m)
    depth = m + cfg.depth_extra
    if depth < m + 1:
        raise NumericalError(f"delta 2^-{m} is unresolvable at depth {depth}")
    count_real = delta ** (cfg.q1 / cfg.p1 - 1.0)
    big_n = int(math.floor(count_real + 1e-12))
    if big_n < 2:
        raise NumericalError(f"cluster count N = {big_n} leaves no interior lattice")
    root = unit_root(cfg.n)
    grid_m = 2 ** depth
    h = 1.0 / grid_m
    half_triple = int(round(1.5 * delta / h))
    if abs(half_triple * h - 1.5 * delta) > 1e-12:
        raise NumericalError(f"triple half-width 1.5*2^-{m} is not grid-aligned at depth {depth}")
    half_inner = int(round(0.5 * delta / h))
    height_f = delta ** (-cfg.n / cfg.p1)
    height_g = delta ** (-cfg.n / cfg.p2)
    fvals = np.zeros((grid_m,) * cfg.n)
    gvals = np.zeros((grid_m,) * cfg.n)
    inner_boxes = []
    for j in range(1, big_n):
        center_cells = int(round(j / big_n * grid_m))
        lo, hi = center_cells - half_triple, center_cells + half_triple
        if lo < 0 or hi > grid_m:
            raise NumericalError("cluster triple leaves the unit root")
        fvals[lo:hi] = height_f
        gvals[lo:hi] = height_g
        inner_boxes.append((center_cells - half_inner, center_cells + half_inner))
    f = GridFunction(cfg.n, root, depth, fvals, "nonneg")
    g = GridFunction(cfg.n, root, depth, gvals, "nonneg")
    meta = SharpnessPairMeta(delta, big_n, tuple(inner_boxes), height_f, height_g)
    return f, g, meta


@dataclass
class SharpnessRow:
    m: int
    delta: float
    min_pointwise: float
    floor: float            # delta**(-n/s)
    floor_ok: bool
    norm_f: float
    bound_f: float          # 3**(n/p1)
    norm_g: float
    bound_g: float
    norm_b: float


@dataclass
class SharpnessResult:
    config: SharpnessConfig
    rows: list
    slope: float
    slope_bound: float      # n (q1/p1 - t/s)/t; blow-up branch requires <=
    boundary: bool          # t/s == q1/p1: slope should vanish instead

    def norm_bounds_hold(self) -> bool:
        return all(r.norm_f <= r.bound_f * (1 + 1e-12)
                   and r.norm_g <= r.bound_g * (1 + 1e-12) for r in self.rows)

    def floors_hold(self) -> bool:
        return all(r.floor_ok for r in self.rows)


def run_sharpness(cfg: SharpnessConfig, floor_tol: float = 0.95) -> SharpnessResult:
    cfg.validate()
    spec = KernelSpec(cfg.alpha)

    def run_one(m):
        f, g, meta = build_sharpness_pair(cfg, m)
        B = b_alpha(f, g, spec).fn
        min_pt = min(float(B.values[lo:hi].min()) for lo, hi in meta.inner_boxes)
        floor = meta.delta ** (-cfg.n / cfg.s)
        fam = aligned_family(f)
        norm_f = morrey_norm(f, cfg.p1, cfg.q1, fam).value
        norm_g = morrey_norm(g, cfg.p2, cfg.q2, fam).value
        norm_b = morrey_norm(B, cfg.s, cfg.t, fam).value
        return SharpnessRow(m, meta.delta, min_pt, floor,
                            min_pt >= floor_tol * floor,
                            norm_f, 3.0 ** (cfg.n / cfg.p1),
                            norm_g, 3.0 ** (cfg.n / cfg.p2), norm_b)

    rows = parallel_map(run_one, cfg.delta_exps)
    logs_d = np.log([r.delta for r in rows])
    logs_n = np.log([r.norm_b for r in rows])
    slope = float(np.polyfit(logs_d, logs_n, 1)[0])
    bound = cfg.n * (cfg.q1 / cfg.p1 - cfg.t / cfg.s) / cfg.t
    boundary = _close(cfg.t / cfg.s, cfg.q1 / cfg.p1)
    return SharpnessResult(cfg, rows, slope, bound, boundary)


# --- Stein-Weiss dichotomy ------------------------------------------------------

@dataclass(frozen=True)
class SteinWeissParams:
    """Power-weight setting for the kernel |y|**-alpha (order n - alpha)."""

    n: int
    alpha: float
    q1: float
    q2: float
    p1: float
    p2: float
    r: float
    a: float
    beta: float
    gamma1: float
    gamma2: float

    @property
    def p(self) -> float:
        return 1.0 / (1.0 / self.p1 + 1.0 / self.p2)

    @property
    def q(self) -> float:
        return 1.0 / (1.0 / self.q1 + 1.0 / self.q2)

    @property
    def s(self) -> float:
        return 1.0 / (1.0 / self.p + self._r_inv - (self.n - self.alpha) / self.n)

    @property
    def t(self) -> float:
        return 1.0 / (1.0 / self.q + self._r_inv - (self.n - self.alpha) / self.n)

    @property
    def _r_inv(self) -> float:
        return 0.0 if self.r == INF else 1.0 / self.r

    @property
    def sigma(self) -> float:
        return self.beta + self.gamma1 + self.gamma2

    def violations(self, require_weight_conditions: bool = True) -> list[str]:
        v = []
        n = self.n
        if not (0.0 < self.alpha < n):
            v.append("0 < alpha < n")
        for qi, pi, tag in ((self.q1, self.p1, "1"), (self.q2, self.p2, "2")):
            if not (1.0 < qi <= pi):
                v.append(f"1 < q{tag} <= p{tag}")
        if self.r != INF and not (n / (n - self.alpha) < self.r):
            v.append("n/(n-alpha) < r")
        if not (0.0 < self.t <= self.s < 1.0):
            v.append("0 < t <= s < 1")
        if not (1.0 < self.a < min(self.q1, self.q2)):
            v.append("1 < a < min(q1, q2)")
        if not (self.beta < n * (1.0 / self.s - 1.0)):
            v.append("beta < n (1/s - 1)")
        for gi, qi, tag in ((self.gamma1, self.q1, "1"), (self.gamma2, self.q2, "2")):
            if not (gi < n * (1.0 - 1.0 / qi)):
                v.append(f"gamma{tag} < n/q{tag}'")
        if require_weight_conditions:
            balance = n + n / self.t - n / self.q1 - n / self.q2
            if not _close(self.alpha + self.sigma, balance):
                v.append("alpha + beta + gamma1 + gamma2 = n + n/t - n/q1 - n/q2")
            if not (self.sigma >= 0.0):
                v.append("beta + gamma1 + gamma2 >= 0")
        return v


@dataclass
class SteinWeissVerdict:
    verdict: str                 # FINITE | DIVERGENT | INCONCLUSIVE
    char_by_level: dict
    growth: list
    harness: HarnessResult | None


def _power_char(sw: SteinWeissParams, root: DyadicCube, depth: int) -> float:
    """Single-cube sup of the power-weight characteristic of the proof."""
    e_v = sw.a * sw.s / (1.0 - sw.s)
    d1 = (sw.q1 / sw.a) / (sw.q1 / sw.a - 1.0)
    d2 = (sw.q2 / sw.a) / (sw.q2 / sw.a - 1.0)
    pv = power_weight(-sw.beta * e_v, (0.0,) * sw.n, root, depth)
    p1 = power_weight(-sw.gamma1 * d1, (0.0,) * sw.n, root, depth)
    p2 = power_weight(-sw.gamma2 * d2, (0.0,) * sw.n, root, depth)
    fam = dyadic_family(root, root.level - depth)
    r_inv = sw._r_inv
    best = 0.0
    for cube in fam.entries:
        sl = cube_box(pv, cube).slices()
        val = ((cube.volume ** r_inv if r_inv else 1.0)
               * float(np.mean(pv.values[sl])) ** (1.0 / e_v)
               * float(np.mean(p1.values[sl])) ** (1.0 / d1)
               * float(np.mean(p2.values[sl])) ** (1.0 / d2))
        best = max(best, val)
    return best


def stein_weiss_check(sw: SteinWeissParams, k_levels=(0, 1, 2, 3, 4),
                      base_depth: int = 5, run_harness: bool = True,
                      seed: int = 11) -> SteinWeissVerdict:
    """Dichotomy probe: the proof characteristic over growing nested roots.

    FINITE when the value varies by less than ten percent across the root
    levels, DIVERGENT when it grows by more than ten percent at every step.
    The structural hypotheses must hold; the weight conditions themselves
    (balance and nonnegative exponent sum) are exactly what is being probed.
    """
    bad = sw.violations(require_weight_conditions=False)
    if bad:
        raise ParameterError("hypotheses violated: " + "; ".join(bad))
    chars = {}
    for k in k_levels:
        root = DyadicCube(k, (0,) * sw.n)
        chars[k] = _power_char(sw, root, base_depth + k)
    levels = sorted(chars)
    growth = [chars[b] / chars[a] for a, b in zip(levels, levels[1:])]
    spread = max(chars.values()) / min(chars.values())
    if spread < 1.10:
        verdict = "FINITE"
    elif all(gr > 1.10 for gr in growth):
        verdict = "DIVERGENT"
    else:
        verdict = "INCONCLUSIVE"
    harness = None
    if run_harness and verdict == "FINITE":
        harness = _stein_weiss_harness(sw, seed)
    return SteinWeissVerdict(verdict, chars, growth, harness)


def _stein_weiss_harness(sw: SteinWeissParams, seed: int) -> HarnessResult:
    """Weighted ratio run for the kernel of order n - alpha on indicators."""
    root = unit_root(sw.n)
    kernel_order = sw.n - sw.alpha
    records = []
    for level in (4, 5, 6):
        wv = power_weight(-sw.beta, (0.0,) * sw.n, root, level)
        w1 = power_weight(sw.gamma1, (0.0,) * sw.n, root, level)
        w2 = power_weight(sw.gamma2, (0.0,) * sw.n, root, level)
        fam = dyadic_family(root, root.level - level)
        for i, (name, f, g) in enumerate(make_pairs("indicator", 4, seed, level, sw.n)):
            B = b_alpha(f, g, KernelSpec(kernel_order)).fn
            lhs = morrey_norm(B.with_values(B.values * wv.values), sw.s, sw.t, fam).value
            rf = morrey_norm(f.with_values(f.values * w1.values), sw.p1, sw.q1, fam).value
            rg = morrey_norm(g.with_values(g.values * w2.values), sw.p2, sw.q2, fam).value
            rhs = rf * rg
            if rhs == 0.0 and lhs > 0.0:
                raise NumericalError(f"zero right side for pair {name}")
            records.append(RatioRecord("stein-weiss", "", name, level, lhs, rhs))
    by_level = {}
    for rec in records:
        by_level[rec.level] = max(by_level.get(rec.level, 0.0), rec.ratio)
    return HarnessResult("stein-weiss", records, by_level)


# --- necessity ------------------------------------------------------------------

@dataclass
class NecessityReport:
    char_value: float
    op_constant: float
    ratio: float              # char / operator constant
    exact_floor_ok: bool      # unweighted indicator floor holds exactly
    c_cube_sup: float         # constants of the testing estimate, cube-sup form
    c_truncated: float        # and truncated-ball form


def necessity_check(ws: WeightSystem, cp: CharParams, family: CubeFamily,
                    pairs=None, seed: int = 5) -> NecessityReport:
    """Testing-condition probe for the truncated bilinear maximal operator.

    (1) On indicator inputs f = chi_Q w1**-q1', g = chi_Q w2**-q2' the
        localized product |Q|**(alpha/n) (sup_Q v)(avg f)(avg g) is compared
        with (avg_Q (M(f,g) v)**t)**(1/t) for both maximal variants; with the
        cube-sup variant and v = 1 the bound holds pointwise with constant
        one, which is checked exactly.
    (2) The single-cube testing constant must not exceed the empirical
        operator constant (the worst harness ratio) by more than the
        recorded factor.
    """
    cp = CharParams(**{**cp.__dict__, "variant": "testing"}).validate()
    grid = ws.v
    n = grid.dim
    d1 = cp.q1 / (cp.q1 - 1.0)
    d2 = cp.q2 / (cp.q2 - 1.0)
    cubes = family.dyadic_entries()
    c_cube, c_trunc = 0.0, 0.0
    exact_ok = True
    extremal_pairs = []
    probe_cubes = [c for c in cubes if c.level >= grid.cell_level + 1][:24]
    for cube in probe_cubes:
        sl = cube_box(grid, cube).slices()
        fvals = np.zeros_like(grid.values)
        gvals = np.zeros_like(grid.values)
        fvals[sl] = ws.w1.values[sl] ** (-d1)
        gvals[sl] = ws.w2.values[sl] ** (-d2)
        f = grid.with_values(fvals, "nonneg")
        g = grid.with_values(gvals, "nonneg")
        extremal_pairs.append((f"extremal-{cube.level}-{cube.coords}", f, g))
        lhs = (cube.volume ** (cp.alpha / n) * float(ws.v.values[sl].max())
               * float(fvals[sl].mean()) * float(gvals[sl].mean()))
        m_vec = m_alpha_vector(f, g, cp.alpha, 1.0, 1.0, family).fn.values
        m_tr = m_alpha_bilinear(f, g, cp.alpha, family).fn.values
        rhs_vec = float(np.mean((m_vec[sl] * ws.v.values[sl]) ** cp.t)) ** (1.0 / cp.t)
        rhs_tr = float(np.mean((m_tr[sl] * ws.v.values[sl]) ** cp.t)) ** (1.0 / cp.t)
        c_cube = max(c_cube, lhs / rhs_vec)
        c_trunc = max(c_trunc, lhs / rhs_tr)
        # exact unweighted floor: chi_Q inputs, v = 1, cube-sup variant
        ind = grid.with_values((fvals > 0).astype(float), "nonneg")
        m_ind = m_alpha_vector(ind, ind, cp.alpha, 1.0, 1.0, family).fn.values
        floor_rhs = float(np.mean(m_ind[sl] ** cp.t)) ** (1.0 / cp.t)
        if floor_rhs < cube.volume ** (cp.alpha / n) * (1.0 - 1e-12):
            exact_ok = False
    if pairs is None:
        pairs = make_pairs("step", 4, seed, grid.depth, n)
    op_const = 0.0
    for name, f, g in list(pairs) + extremal_pairs:
        mb = m_alpha_bilinear(f, g, cp.alpha, family).fn
        weighted = mb.with_values(mb.values * ws.v.values)
        lhs = morrey_norm(weighted, cp.s, cp.t, family).value
        fw = f.with_values(np.abs(f.values) * ws.w1.values)
        gw = g.with_values(np.abs(g.values) * ws.w2.values)
        rhs = pair_morrey_sup(fw, gw, cp.p, cp.q1, cp.q2, family).value
        if rhs > 0:
            op_const = max(op_const, lhs / rhs)
    char = char_testing(ws, cp, family).value
    ratio = char / op_const if op_const > 0 else INF
    return NecessityReport(char, op_const, ratio, exact_ok, c_cube, c_trunc)


# --- Fefferman-Stein dual ---------------------------------------------------------

@dataclass(frozen=True)
class FsDualParams:
    cp: CharParams           # the s < 1 two-weight parameter set
    r1: float
    r2: float
    s1: float
    s2: float

    def violations(self) -> list[str]:
        v = list(self.cp.violations())
        for si, ri, tag in ((self.s1, self.r1, "1"), (self.s2, self.r2, "2")):
            if not (0.0 < si < 1.0):
                v.append(f"0 < s{tag} < 1")
            if ri != INF and not (si / (1.0 - si) < ri):
                v.append(f"s{tag}/(1-s{tag}) < r{tag}")
        want = (1.0 - self.cp.s) / (self.cp.a * self.cp.s)
        got = (1.0 - self.s1) / self.s1 + (1.0 - self.s2) / self.s2
        if not _close(want, got):
            v.append("(1-s)/(as) = (1-s1)/s1 + (1-s2)/s2")
        r_inv = 0.0 if self.cp.r == INF else 1.0 / self.cp.r
        got_r = ((0.0 if self.r1 == INF else 1.0 / self.r1)
                 + (0.0 if self.r2 == INF else 1.0 / self.r2))
        if not _close(r_inv, got_r):
            v.append("1/r = 1/r1 + 1/r2")
        return v


@dataclass
class FsDualReport:
    split_ok: bool            # per-cube product split holds
    worst_split_excess: float
    harness: HarnessResult


def fs_dual_check(w1: GridFunction, w2: GridFunction, params: FsDualParams,
                  pairs=None, levels=(4, 5), seed: int = 7) -> FsDualReport:
    """Majorant-weight route: split check plus a stability harness.

    Per cube, |Q|**(1/r) (avg (w1 w2)**(as/(1-s)))**((1-s)/(as)) must not
    exceed the product of the two majorant factors; then B(f,g) w1 w2 is
    normalized by the pair supremum built from the majorants W_i.
    """
    bad = params.violations()
    if bad:
        raise ParameterError("relations violated: " + "; ".join(bad))
    from .weights import fs_majorant
    cp = params.cp
    e = cp.a * cp.s / (1.0 - cp.s)
    e1 = params.s1 / (1.0 - params.s1)
    e2 = params.s2 / (1.0 - params.s2)
    r_inv = 0.0 if cp.r == INF else 1.0 / cp.r
    r1_inv = 0.0 if params.r1 == INF else 1.0 / params.r1
    r2_inv = 0.0 if params.r2 == INF else 1.0 / params.r2
    fam = dyadic_family(w1.root, w1.cell_level)
    worst = 0.0
    for cube in fam.entries:
        sl = cube_box(w1, cube).slices()
        prod = (w1.values[sl] * w2.values[sl]) ** e
        lhs = cube.volume ** r_inv * float(np.mean(prod)) ** (1.0 / e)
        rhs = ((cube.volume ** r1_inv) * float(np.mean(w1.values[sl] ** e1)) ** (1.0 / e1)
               * (cube.volume ** r2_inv) * float(np.mean(w2.values[sl] ** e2)) ** (1.0 / e2))
        worst = max(worst, lhs / rhs)
    split_ok = worst <= 1.0 + 1e-12

    if pairs is None:
        pairs = make_pairs("step", 4, seed, w1.depth, w1.dim)
    spec = KernelSpec(cp.alpha)
    records = []
    for level in levels:
        ww1 = w1.refine(level - w1.depth)
        ww2 = w2.refine(level - w2.depth)
        maj1 = fs_majorant(ww1, params.r1, params.s1,
                           dyadic_family(ww1.root, ww1.cell_level))
        maj2 = fs_majorant(ww2, params.r2, params.s2,
                           dyadic_family(ww2.root, ww2.cell_level))
        fam_l = dyadic_family(ww1.root, ww1.cell_level)
        for name, f, g in pairs:
            ff, gg = f.refine(level - f.depth), g.refine(level - g.depth)
            B = b_alpha(ff, gg, spec).fn
            lhs = morrey_norm(B.with_values(B.values * ww1.values * ww2.values),
                              cp.s, cp.t, fam_l).value
            fw = ff.with_values(np.abs(ff.values) * maj1.values)
            gw = gg.with_values(np.abs(gg.values) * maj2.values)
            rhs = pair_morrey_sup(fw, gw, cp.p, cp.q1, cp.q2, fam_l).value
            if rhs == 0.0 and lhs > 0.0:
                raise NumericalError(f"zero right side for pair {name}")
            records.append(RatioRecord("fs-dual", "", name, level, lhs, rhs))
    by_level = {}
    for rec in records:
        by_level[rec.level] = max(by_level.get(rec.level, 0.0), rec.ratio)
    return FsDualReport(split_ok, worst, HarnessResult("fs-dual", records, by_level))
