"""Acceptance gate: one test per criterion, at the stated tolerances.

These call the same functions as `morreybench selftest`, so the CLI gate and
the pytest gate cannot drift apart.

Known red: the cluster-norm bound inside criterion 2 asserts the
single-cluster constant 3**(n/p1) for the exact Morrey norm of the
cluster-lattice pair.  The exact norm of the union construction is driven by
cubes that capture every cluster and lands near 3**(n/q1) > 3**(n/p1), so
the assertion fails for every delta even though the norms are delta-uniform
(the property the blow-up argument consumes, asserted separately below).
The check is kept as stated rather than loosened.
"""

import pytest

from morreybench import acceptance


@pytest.fixture(scope="module")
def ctx():
    return {"seed": 20240801}


def _run(fn, ctx):
    res = fn(ctx)
    print(res.line)
    return res


def test_criterion_01_quadrature_closed_form(ctx):
    assert _run(acceptance.criterion_01, ctx).passed


def test_criterion_02_sharpness_norm_floor(ctx):
    res = _run(acceptance.criterion_02, ctx)
    assert res.passed, res.detail


def test_criterion_02_floor_and_uniformity_components(ctx):
    # the two sub-properties that hold: pointwise floor with 5% tolerance and
    # delta-uniform boundedness of the cluster norms
    blow, _, _ = acceptance._sharpness(ctx)
    assert blow.floors_hold()
    nf = [r.norm_f for r in blow.rows]
    assert max(nf) / min(nf) < 1.10


def test_criterion_03_blowup_slope(ctx):
    assert _run(acceptance.criterion_03, ctx).passed


def test_criterion_04_dyadic_model_equivalence(ctx):
    assert _run(acceptance.criterion_04, ctx).passed


def test_criterion_05_pointwise_holder(ctx):
    assert _run(acceptance.criterion_05, ctx).passed


def test_criterion_06_maximal_control(ctx):
    assert _run(acceptance.criterion_06, ctx).passed


def test_criterion_07_stopping_decomposition(ctx):
    assert _run(acceptance.criterion_07, ctx).passed


def test_criterion_08_packing_bound(ctx):
    assert _run(acceptance.criterion_08, ctx).passed


def test_criterion_09_weighted_harness(ctx):
    assert _run(acceptance.criterion_09, ctx).passed


def test_criterion_10_power_weight_dichotomy(ctx):
    assert _run(acceptance.criterion_10, ctx).passed


def test_criterion_11_necessity_testing(ctx):
    assert _run(acceptance.criterion_11, ctx).passed


def test_criterion_12_determinism(ctx):
    assert _run(acceptance.criterion_12, ctx).passed
