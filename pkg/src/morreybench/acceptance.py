"""Acceptance criteria: the executable exit gate of the workbench.

Each criterion is a callable returning a pass/fail result with a one-line
detail; ``run_selftest`` executes them in order, prints one line per
criterion, and writes the CSV artifacts.  The same functions back the
pytest acceptance module, so `morreybench selftest` and `pytest` agree by
construction.

Criterion 2 is special: its cluster-norm bound asserts the single-cluster
constant 3**(n/p1) for the exact all-aligned Morrey norm of the sharpness
pair.  Cubes that capture every cluster push the exact norm to about
3**(n/q1) > 3**(n/p1), so the check fails for every delta while the norm
remains delta-stable (which is what the blow-up argument actually uses).
The criterion is implemented as stated and reports the counterexample; the
uniform-boundedness property it protects is checked (and passes) alongside.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .decomposition import choose_a, cz_decompose, packing_sum, verify_halving
from .experiments import (ExponentProfile, SharpnessConfig, SteinWeissParams,
                          make_pairs, necessity_check, ratio_harness,
                          run_sharpness, stein_weiss_check)
from .grid import GridFunction, cube_box, unit_root
from .norms import dyadic_family
from .operators import (KernelSpec, b_alpha, b_alpha_dyadic, i_alpha,
                        m_alpha_bilinear)
from .util import fmt, make_rng
from .weights import (CharParams, WeightSystem, char_remark, char_two_weight,
                      power_system, power_weight)

# recorded regression constant for the necessity ratio (measured max 1.7 on
# the seeded systems; factor-two headroom)
NECESSITY_RATIO_BOUND = 4.0

BLOWUP = SharpnessConfig(n=1, alpha=0.3, p1=4, q1=2, p2=4, q2=2, t=5.0)
BOUNDARY = SharpnessConfig(n=1, alpha=0.3, p1=4, q1=2, p2=4, q2=2, t=2.5)

TWO_WEIGHT_CP = CharParams(alpha=0.5, n=1, q1=9 / 8, q2=9 / 8, p=16 / 27,
                           s=0.8, t=0.8 * (9 / 16) / (16 / 27), r=16.0,
                           a=17 / 16, variant="s<1")
TESTING_CP = CharParams(alpha=0.5, n=1, q1=4.0, q2=4.0, p=2.5, s=20 / 3,
                        t=16 / 3, r=4.0, a=2.0, variant="testing")
SW_FINITE = SteinWeissParams(n=1, alpha=0.5, q1=9 / 8, q2=9 / 8, p1=32 / 27,
                             p2=32 / 27, r=16.0, a=17 / 16, beta=0.0225,
                             gamma1=0.02, gamma2=0.02)
SW_DIVERGENT = SteinWeissParams(n=1, alpha=0.5, q1=9 / 8, q2=9 / 8, p1=32 / 27,
                                p2=32 / 27, r=16.0, a=17 / 16, beta=-0.54,
                                gamma1=0.02, gamma2=0.02)


@dataclass
class CriterionResult:
    number: int
    slug: str
    passed: bool
    detail: str
    artifacts: dict = field(default_factory=dict)  # name -> (header, rows)

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion-{self.number:02d} {self.slug}: {status} ({self.detail})"


def _rand_pair(seed, depth, flags="pos"):
    rng = make_rng(seed, 17)
    mk = lambda: GridFunction(1, unit_root(1), depth,
                              np.exp(rng.uniform(-2, 2, size=2 ** depth)), flags)
    return mk(), mk()


def criterion_01(ctx) -> CriterionResult:
    """Closed-form quadrature at depth 8 within half a percent, under 1 s."""
    depth = 8
    f = GridFunction(1, unit_root(1), depth, np.ones(2 ** depth), "nonneg")
    spec = KernelSpec(0.5)
    t0 = time.perf_counter()
    bval = b_alpha(f, f, spec).fn.values[2 ** (depth - 1) - 1]
    ival = i_alpha(f, spec).fn.values[2 ** (depth - 1) - 1]
    elapsed = time.perf_counter() - t0
    target = 2.0 * np.sqrt(2.0)
    rel_b = abs(bval - target) / target
    rel_i = abs(ival - target) / target
    ok = rel_b <= 5e-3 and rel_i <= 5e-3 and elapsed < 1.0
    return CriterionResult(1, "quadrature-closed-form", ok,
                           f"b rel {fmt(rel_b)}, i rel {fmt(rel_i)}, {elapsed:.3f}s")


def _sharpness(ctx):
    if "sharp" not in ctx:
        t0 = time.perf_counter()
        blow = run_sharpness(BLOWUP)
        boundary = run_sharpness(BOUNDARY)
        ctx["sharp"] = (blow, boundary, time.perf_counter() - t0)
    return ctx["sharp"]


def criterion_02(ctx) -> CriterionResult:
    """Cluster norms against 3**(n/p_i) plus the pointwise product floor."""
    blow, _, elapsed = _sharpness(ctx)
    floors = blow.floors_hold()
    norms = blow.norm_bounds_hold()
    # the property the bound protects: delta-uniform boundedness of the norms
    nf = [r.norm_f for r in blow.rows]
    uniform = max(nf) / min(nf) < 1.10
    worst = max(r.norm_f / r.bound_f for r in blow.rows)
    ok = floors and norms and elapsed < 60.0
    if norms:
        norm_msg = "ok"
    else:
        norm_msg = (f"exceeded {fmt(worst)}x: cubes capturing all clusters beat "
                    f"the one-cluster constant (delta-uniform boundedness: {uniform})")
    detail = (f"floors {'ok' if floors else 'FAIL'}; norm bound {norm_msg}; "
              f"{elapsed:.2f}s")
    rows = [{"delta": r.delta, "min_pointwise": r.min_pointwise, "floor": r.floor,
             "norm": r.norm_b, "norm_f": r.norm_f, "bound_f": r.bound_f,
             "norm_g": r.norm_g, "bound_g": r.bound_g} for r in blow.rows]
    header = ["delta", "min_pointwise", "floor", "norm", "norm_f", "bound_f",
              "norm_g", "bound_g"]
    return CriterionResult(2, "sharpness-norm-floor", ok, detail,
                           {"sharpness.csv": (header, rows)})


def criterion_03(ctx) -> CriterionResult:
    """Blow-up slope under the predicted power law; flat on the boundary."""
    blow, boundary, _ = _sharpness(ctx)
    ok_blow = blow.slope <= -0.07
    ok_flat = abs(boundary.slope) <= 0.03
    ok = ok_blow and ok_flat
    return CriterionResult(3, "sharpness-blowup-slope", ok,
                           f"blow-up slope {fmt(blow.slope)} (<= -0.07 "
                           f"{'ok' if ok_blow else 'FAIL'}); boundary slope "
                           f"{fmt(boundary.slope)} (|.| <= 0.03 "
                           f"{'ok' if ok_flat else 'FAIL'})")


def criterion_04(ctx) -> CriterionResult:
    """Two-sided dyadic-model envelope with a level-stable spread."""
    spec = KernelSpec(0.5)
    spreads = {}
    for depth in (4, 5, 6, 7):
        lo, hi = np.inf, 0.0
        for seed in range(20):
            f, g = _rand_pair(seed, 4)
            f, g = f.refine(depth - 4), g.refine(depth - 4)
            num = b_alpha(f, g, spec).fn.values
            den = b_alpha_dyadic(f, g, spec, unit_root(1)).fn.values
            ratios = num / den
            lo = min(lo, float(ratios.min()))
            hi = max(hi, float(ratios.max()))
        spreads[depth] = hi / lo
    vals = list(spreads.values())
    ok = max(vals) / min(vals) < 1.10
    return CriterionResult(4, "dyadic-model-equivalence", ok,
                           "spread by level " + " ".join(
                               f"{d}:{fmt(s)}" for d, s in spreads.items()))


def criterion_05(ctx) -> CriterionResult:
    """Pointwise product bound through conjugate-power potentials."""
    spec = KernelSpec(0.45)
    worst = -np.inf
    for ell in (1.5, 2.0, 3.0):
        ellp = ell / (ell - 1.0)
        for seed in range(20):
            f, g = _rand_pair(seed, 5)
            lhs = b_alpha(f, g, spec).fn.values
            rf = i_alpha(f.with_values(f.values ** ell), spec).fn.values
            rg = i_alpha(g.with_values(g.values ** ellp), spec).fn.values
            worst = max(worst, float(np.max(lhs - rf ** (1 / ell) * rg ** (1 / ellp))))
    ok = worst <= 1e-9
    return CriterionResult(5, "pointwise-holder", ok, f"worst excess {fmt(worst)}")


def criterion_06(ctx) -> CriterionResult:
    """Truncated maximal dominated by the singular integral, stable constant."""
    spec = KernelSpec(0.5)
    consts = {}
    for depth in (4, 5, 6):
        c = 0.0
        fam = dyadic_family(unit_root(1), -depth)
        for seed in range(10):
            f, g = _rand_pair(seed, 4)
            f, g = f.refine(depth - 4), g.refine(depth - 4)
            m = m_alpha_bilinear(f, g, spec.alpha, fam).fn.values
            b = b_alpha(f, g, spec).fn.values
            c = max(c, float(np.max(m / b)))
        consts[depth] = c
    levels = sorted(consts)
    ok = all(consts[b] <= 1.05 * consts[a] for a, b in zip(levels, levels[1:]))
    return CriterionResult(6, "maximal-control", ok,
                           "c by level " + " ".join(f"{d}:{fmt(c)}" for d, c in consts.items()))


def criterion_07(ctx) -> CriterionResult:
    """Stopping-time structure: partition, sandwich, certified halving."""
    t0 = time.perf_counter()
    problems = []
    for seed in range(20):
        f, g = _rand_pair(seed, 6, flags="nonneg")
        a = choose_a(f, g, unit_root(1))
        sf = cz_decompose(f, g, unit_root(1), a)
        total = sf.e0_mask.astype(int).copy()
        for mask in sf.e_masks.values():
            total += mask.astype(int)
        if not np.all(total == 1):
            problems.append(f"seed {seed}: partition broken")
        for k, gen in enumerate(sf.generations, 1):
            cover = np.zeros_like(total)
            for sel in gen:
                if not (a ** k < sel.m_value <= 2 ** 2 * a ** k):
                    problems.append(f"seed {seed}: sandwich broken at k={k}")
                sl = cube_box(f, sel.cube).slices()
                cover[sl] += 1
            if cover.max() > 1:
                problems.append(f"seed {seed}: generation {k} cubes overlap")
        if not verify_halving(sf, f, g).ok:
            problems.append(f"seed {seed}: halving violated at a={a}")
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 60.0
    detail = f"20 seeds clean, {elapsed:.2f}s" if ok else "; ".join(problems[:3])
    return CriterionResult(7, "stopping-decomposition", ok, detail)


def criterion_08(ctx) -> CriterionResult:
    """Packing ratio at most one over the parameter grid and weight shapes."""
    depth = 6
    spike = np.ones(2 ** depth)
    spike[2 ** depth // 3] = 1e6
    weights = {
        "ones": GridFunction(1, unit_root(1), depth, np.ones(2 ** depth), "pos"),
        "spike": GridFunction(1, unit_root(1), depth, spike, "pos"),
        "power": power_weight(0.3, 0.0, unit_root(1), depth),
    }
    worst = 0.0
    for t in (0.3, 0.5, 0.7):
        for alpha in (0.25, 0.5, 0.75):
            for v in weights.values():
                worst = max(worst, packing_sum(unit_root(1), v, t, alpha))
    ok = worst <= 1.0 + 1e-12
    return CriterionResult(8, "packing-bound", ok, f"worst ratio {fmt(worst)}")


def criterion_09(ctx) -> CriterionResult:
    """Weighted bound harness on admissible power weights, plus the
    single-cube majorant chain on every tested system."""
    cp = TWO_WEIGHT_CP
    ws = power_system(SW_FINITE.beta, SW_FINITE.gamma1, SW_FINITE.gamma2,
                      0.0, unit_root(1), 4)
    pairs = make_pairs("step", 6, ctx.get("seed", 20240801), 4)
    res = ratio_harness("two-weight", ExponentProfile(alpha=cp.alpha, n=1),
                        pairs, (4, 5, 6), ws=ws, cp=cp)
    chain_ok = True
    fam = dyadic_family(unit_root(1), -4)
    systems = [ws]
    rng = make_rng(ctx.get("seed", 20240801), 59)
    for _ in range(5):
        mk = lambda: GridFunction(1, unit_root(1), 4,
                                  np.exp(rng.uniform(-2, 2, 16)), "pos")
        systems.append(WeightSystem(mk(), mk(), mk()))
    for system in systems:
        two = char_two_weight(system, cp, fam).value
        single = char_remark(system, cp, fam).value
        if two > single * (1 + 1e-12):
            chain_ok = False
    ok = res.stable and chain_ok
    rows = [{"theorem": r.theorem, "pair_id": r.pair_id, "level": r.level,
             "lhs": r.lhs, "rhs": r.rhs, "ratio": r.ratio} for r in res.records]
    detail = ("max ratio by level "
              + " ".join(f"{k}:{fmt(v)}" for k, v in sorted(res.max_ratio_by_level.items()))
              + f"; majorant chain {'ok' if chain_ok else 'FAIL'}")
    return CriterionResult(9, "weighted-harness", ok, detail,
                           {"two_weight_ratios.csv":
                            (["theorem", "pair_id", "level", "lhs", "rhs", "ratio"], rows)})


def criterion_10(ctx) -> CriterionResult:
    """Power-weight dichotomy over growing roots."""
    fin = stein_weiss_check(SW_FINITE, run_harness=False)
    div = stein_weiss_check(SW_DIVERGENT, run_harness=False)
    fin_vals = list(fin.char_by_level.values())
    ok = (fin.verdict == "FINITE" and max(fin_vals) / min(fin_vals) < 1.10
          and div.verdict == "DIVERGENT" and all(g > 1.10 for g in div.growth))
    return CriterionResult(10, "power-weight-dichotomy", ok,
                           f"balanced: {fin.verdict}, negative-sum: {div.verdict} "
                           f"(growth {fmt(min(div.growth))}x/level)")


def criterion_11(ctx) -> CriterionResult:
    """Testing constant against the empirical operator constant, 10 systems."""
    cp = TESTING_CP
    ratios, floors = [], []
    rows = []
    for seed in range(10):
        rng = make_rng(ctx.get("seed", 20240801), 83, seed)
        mk = lambda: GridFunction(1, unit_root(1), 5,
                                  np.exp(rng.uniform(-2, 2, 32)), "pos")
        ws = WeightSystem(mk(), mk(), mk())
        rep = necessity_check(ws, cp, dyadic_family(unit_root(1), -5), seed=seed)
        ratios.append(rep.ratio)
        floors.append(rep.exact_floor_ok)
        rows.append({"system": seed, "char": rep.char_value,
                     "op_constant": rep.op_constant, "ratio": rep.ratio,
                     "exact_floor": int(rep.exact_floor_ok)})
    c_emp = max(ratios)
    ok = all(floors) and all(np.isfinite(r) for r in ratios) and c_emp <= NECESSITY_RATIO_BOUND
    return CriterionResult(11, "necessity-testing", ok,
                           f"C_emp {fmt(c_emp)} (bound {fmt(NECESSITY_RATIO_BOUND)}); "
                           f"exact indicator floor {'ok' if all(floors) else 'FAIL'}",
                           {"necessity.csv":
                            (["system", "char", "op_constant", "ratio", "exact_floor"], rows)})


def _deterministic_artifacts(seed: int) -> dict:
    """The CSV texts a selftest emits, as strings, for byte comparison."""
    from .cli import _cell
    out = {}
    cfg = SharpnessConfig(n=1, alpha=0.3, p1=4, q1=2, p2=4, q2=2, t=5.0,
                          delta_exps=(4, 5, 6))
    res = run_sharpness(cfg)
    header = ["delta", "min_pointwise", "floor", "norm"]
    lines = [",".join(header)]
    for r in res.rows:
        lines.append(",".join(_cell(v) for v in (r.delta, r.min_pointwise,
                                                 r.floor, r.norm_b)))
    out["sharpness.csv"] = "\n".join(lines) + "\n"

    prof = ExponentProfile(alpha=0.3, n=1, p1=4, q1=2.5, p2=4, q2=2.5,
                           s=5.0, t=3.125)
    pairs = make_pairs("step", 3, seed, 4)
    ratio = ratio_harness("bilinear-ratio", prof, pairs, (4, 5))
    lines = ["pair_id,level,lhs,rhs"]
    for r in ratio.records:
        lines.append(",".join(_cell(v) for v in (r.pair_id, r.level, r.lhs, r.rhs)))
    out["ratios.csv"] = "\n".join(lines) + "\n"

    f, g = _rand_pair(seed, 6, flags="nonneg")
    a = choose_a(f, g, unit_root(1))
    sf = cz_decompose(f, g, unit_root(1), a)
    lines = ["k,cube_level,cube_coords,m3q,e_measure"]
    for k, gen in enumerate(sf.generations, 1):
        for sel in gen:
            lines.append(",".join(_cell(v) for v in (
                k, sel.cube.level, ";".join(map(str, sel.cube.coords)),
                sel.m_value, sel.e_cells * f.cell_volume)))
    out["decomposition.csv"] = "\n".join(lines) + "\n"
    return out


def criterion_12(ctx) -> CriterionResult:
    """Same seed, repeated runs, byte-identical CSV artifacts."""
    seed = ctx.get("seed", 20240801)
    first = _deterministic_artifacts(seed)
    second = _deterministic_artifacts(seed)
    same = {name: first[name] == second[name] for name in first}
    ok = all(same.values())
    bad = [name for name, eq in same.items() if not eq]
    detail = "3 artifact files byte-identical" if ok else f"mismatch in {bad}"
    res = CriterionResult(12, "determinism", ok, detail)
    res.artifacts = {name: ("raw", text) for name, text in first.items()}
    return res


CRITERIA = (criterion_01, criterion_02, criterion_03, criterion_04,
            criterion_05, criterion_06, criterion_07, criterion_08,
            criterion_09, criterion_10, criterion_11, criterion_12)


def run_selftest(seed: int = 20240801, outdir=None, criteria=None):
    """Run the acceptance suite; print one line per criterion.

    Returns the list of results.  CSV artifacts land in ``outdir`` when
    given; file contents depend only on the seed.
    """
    ctx = {"seed": seed}
    wanted = set(criteria) if criteria else None
    results = []
    for idx, fn in enumerate(CRITERIA, 1):
        if wanted is not None and idx not in wanted:
            continue
        res = fn(ctx)
        results.append(res)
        print(res.line)
        if outdir is not None:
            import os
            os.makedirs(outdir, exist_ok=True)
            for name, payload in res.artifacts.items():
                path = os.path.join(outdir, name)
                if payload[0] == "raw":
                    with open(path, "w") as fh:
                        fh.write(payload[1])
                else:
                    from .cli import write_csv
                    header, rows = payload
                    write_csv(path, header, rows)
    return results
