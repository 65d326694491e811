from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hausflow import (
    AdjacencySpec,
    AlgebraVector,
    BaseMetricSpec,
    EnvelopeInfiniteError,
    bar_metric,
    finsler_estimate,
    get_group,
    metric_matrix,
    norm_table,
    right_invariance_defect,
    right_invariant_envelope,
    sample_window,
    sup_equals_limsup_check,
    window,
)
from hausflow.checks import check_finsler_bound
from hausflow.finsler import (
    default_sigma_sample,
    default_t_schedule,
    grid_translations,
    is_divergent,
    translation_gap,
)

R1, R2, T1, H3 = (get_group(k) for k in ("R1", "R2", "T1", "H3"))
ONE = AlgebraVector(R1, (1.0,))
TS = default_t_schedule(4.0)
GRID = sample_window(window("R1", [(-2, 2)], 201))
S_GRID = default_sigma_sample(GRID)
S_DENSE = np.linspace(-3, 3, 60001)[:, None]


def spec(kind, group=R1):
    return BaseMetricSpec(kind, group)


def test_schedule_and_sample_defaults(X_line):
    assert TS[0] == 2.0 and TS[-1] == 4.0 * 2.0 ** -14 and len(TS) == 14
    S = default_sigma_sample(GRID, X_line, window("R1", [(-2, 2)], 201), maxlen=8)
    assert len(S) > len(GRID.points)
    with pytest.raises(ValueError):
        default_sigma_sample(GRID, X_line)


def test_bar_metric_examples(oracle):
    assert bar_metric([[0.0]], [[0.3]], spec("euclidean"), S_GRID) == pytest.approx(0.3)
    rows = {r["kind"]: r for r in oracle("bar-metric")["rows"]}
    at = bar_metric([[0.0]], [[0.1]], spec("arctan_pullback"), S_DENSE)
    assert at == pytest.approx(rows["arctan_pullback"]["value"], abs=1e-9)
    assert at == pytest.approx(0.0999167, abs=1e-7)
    assert at == pytest.approx(2 * math.atan(0.05), abs=1e-9)
    cb = bar_metric([[0.0]], [[0.001]], spec("cuberoot_pullback"), S_DENSE)
    assert cb == pytest.approx(rows["cuberoot_pullback"]["value"], abs=1e-9)
    assert cb == pytest.approx(0.1587, abs=1e-4)
    with pytest.raises(ValueError):
        bar_metric([[0.0]], [[0.1]], spec("euclidean"), np.zeros((0, 1)))


def test_estimate_euclidean_exact():
    est = finsler_estimate(R1.element((0.7,)), ONE, spec("euclidean"), TS, S_GRID)
    assert np.allclose(est.trend, 1.0, rtol=0, atol=1e-9)
    assert not est.diverged and est.value == pytest.approx(1.0)


def test_estimate_arctan_matches_oracle(oracle):
    ref = oracle("arctan-finsler")
    ts = [r["t"] for r in ref["rows"]]
    est = finsler_estimate(R1.element((0.0,)), ONE, spec("arctan_pullback"), ts, S_DENSE)
    for got, row in zip(est.trend, ref["rows"]):
        assert got == pytest.approx(row["quotient"], abs=1e-6)
    assert est.value == pytest.approx(1.0, rel=0.02)
    assert not est.diverged


def test_estimate_cuberoot_diverges(oracle):
    ref = oracle("cuberoot-trend")
    est = finsler_estimate(R1.element((0.0,)), ONE, spec("cuberoot_pullback"), TS, S_DENSE)
    assert est.diverged and est.value == math.inf
    closed = np.array([r["closed_form"] for r in ref["rows"]])
    # the sample only approximates the maximizer, so the trend sits just below the closed form
    assert np.all(est.trend <= closed * (1 + 1e-9))
    tail = est.trend[est.tail_start:]
    assert np.all(tail[1:] >= 1.10 * tail[:-1])


def test_is_divergent_rule():
    assert not is_divergent([1, 1, 1, 1, 1])
    assert is_divergent([1, 2, 4, 8, 16, 32, 64, 128, 256])
    assert not is_divergent([1, 2, 4, 8, 16, 32, 64, 80, 81])  # tail growth stalls
    assert not is_divergent([1, 1.2, 1.44, 1.7])  # growing but small
    assert is_divergent([1, 2, np.inf, np.inf])


def test_estimate_validation():
    with pytest.raises(ValueError):
        finsler_estimate(R1.element((0.0,)), AlgebraVector(R1, (0.0,)), spec("euclidean"), TS, S_GRID)
    with pytest.raises(ValueError):
        finsler_estimate(R1.element((0.0,)), ONE, spec("euclidean"), TS[::-1], S_GRID)


def test_sup_equals_limsup():
    assert sup_equals_limsup_check(ONE, spec("euclidean"), TS, S_GRID).ratio == pytest.approx(1.0, abs=1e-12)
    r = sup_equals_limsup_check(ONE, spec("arctan_pullback"), TS, S_GRID)
    assert r.ratio == pytest.approx(1.0, rel=0.02)
    tg = sample_window(window("T1", [(0, 1)], 64))
    r = sup_equals_limsup_check(AlgebraVector(T1, (1.0,)), spec("chart_quotient", T1),
                                default_t_schedule(1.0), tg.points)
    assert r.ratio == pytest.approx(1.0, rel=0.01)


def test_invariance_defect_examples(oracle):
    euc = metric_matrix(GRID, spec("euclidean"))
    sig = grid_translations(GRID, -1, 1)
    d = right_invariance_defect(euc, sig)
    assert d.sup == pytest.approx(0.0, abs=1e-12) and d.floor == 0.0
    padded = sample_window(window("R1", [(-2, 2)], 201, padding_radius=math.sqrt(2)))
    raw = metric_matrix(padded, spec("arctan_pullback"))
    ref = oracle("raw-arctan-defect")
    assert translation_gap(raw, [1.0], [2.0], [1.0]) == pytest.approx(ref["defect"], abs=1e-12)
    assert ref["defect"] == pytest.approx(0.17985, abs=1e-5)
    assert right_invariance_defect(raw, sig, region="grid").sup >= 0.179


def test_envelope_examples():
    grid = sample_window(window("R1", [(-2, 2)], 81))
    euc = metric_matrix(grid, spec("euclidean"))
    env = right_invariant_envelope(spec("euclidean"), grid)
    assert np.allclose(env.values, euc.values, atol=1e-12)
    env = right_invariant_envelope(spec("arctan_pullback"), grid)
    assert np.max(np.abs(env.values - euc.values)) <= 0.05 * euc.values.max()
    assert np.all(env.values >= metric_matrix(grid, spec("arctan_pullback")).values - 1e-12)
    with pytest.raises(EnvelopeInfiniteError):
        right_invariant_envelope(spec("cuberoot_pullback"), grid)
    table = BaseMetricSpec("user_table", R1, {"points": [[0], [1]], "matrix": [[0, 1], [1, 0]]})
    with pytest.raises(ValueError):
        right_invariant_envelope(table, grid)


def test_norm_table_examples():
    R2grid = sample_window(window("R2", [(-1, 1), (-1, 1)], 11))
    dirs = [AlgebraVector(R2, (math.cos(k * math.pi / 4), math.sin(k * math.pi / 4))) for k in range(8)]
    dirs = [d.scaled(1 + k / 4) for k, d in enumerate(dirs)]
    t = norm_table(R2.element((0, 0)), dirs, spec("euclidean", R2), default_t_schedule(2.0), R2grid.points)
    for e, d in zip(t.estimates, dirs):
        assert e.value == pytest.approx(np.linalg.norm(d.array), rel=1e-9)

    at = norm_table(R1.element((0,)), [ONE, -ONE, ONE.scaled(2), ONE.scaled(-2)],
                    spec("arctan_pullback"), TS, S_GRID)
    assert [e.value for e in at.estimates] == pytest.approx([1, 1, 2, 2], rel=0.02)
    assert at.homogeneous and len(at.homogeneity) == 6


def test_norm_table_heisenberg_flags_vertical_direction():
    grid = sample_window(window("H3", [(-1, 1)] * 3, 5))
    basis = [AlgebraVector(H3, tuple(r)) for r in np.eye(3)]
    t = norm_table(H3.element((0, 0, 0)), basis, spec("heisenberg_gauge", H3),
                   default_t_schedule(2.0, 20), grid.points)
    flags = [e.diverged for e in t.estimates]
    assert flags == [False, False, True]
    assert t.estimates[0].value == pytest.approx(1.0, rel=0.02)
    assert t.rows()[2][1] == "diverged"


def test_estimate_to_dict_is_json_ready():
    from hausflow.io import dumps

    est = finsler_estimate(R1.element((0.0,)), ONE, spec("cuberoot_pullback"), TS, S_GRID)
    text = dumps(est.to_dict())
    assert '"inf"' in text and '"diverged": true' in text


# -- properties ------------------------------------------------------------------


@given(st.floats(0.25, 3.0), st.booleans())
@settings(max_examples=25, deadline=None)
def test_homogeneity_and_symmetry(lam, both):
    base = finsler_estimate(R1.element((0.0,)), ONE, spec("arctan_pullback"), TS, S_GRID, both)
    scaled = finsler_estimate(R1.element((0.0,)), ONE.scaled(lam), spec("arctan_pullback"), TS, S_GRID, both)
    neg = finsler_estimate(R1.element((0.0,)), -ONE, spec("arctan_pullback"), TS, S_GRID, both)
    assert scaled.value == pytest.approx(lam * base.value, rel=0.02)
    assert abs(neg.value - base.value) <= 1e-3


@given(st.integers(0, 200))
@settings(max_examples=25, deadline=None)
def test_right_invariant_base_independent_of_point(k):
    g = GRID.points[k]
    a = finsler_estimate(R1.element(tuple(g)), ONE, spec("euclidean"), TS, S_GRID)
    b = finsler_estimate(R1.element((0.0,)), ONE, spec("euclidean"), TS, S_GRID)
    assert np.allclose(a.trend, b.trend, rtol=1e-12, atol=0)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-1, 1))
@settings(max_examples=60, deadline=None)
def test_bar_metric_dominates_and_is_invariant(p, q, s):
    at = spec("arctan_pullback")
    b = bar_metric([[p]], [[q]], at, S_DENSE)
    assert b >= abs(math.atan(p) - math.atan(q)) - 1e-15
    # shifting the pair by s shifts the sample window; stay well inside it
    b_s = bar_metric([[p + s]], [[q + s]], at, S_DENSE)
    assert b_s == pytest.approx(b, abs=2e-4 * abs(p - q) + 1e-12)


def test_finsler_bound_on_converged_limit(arctan_flow):
    limit = arctan_flow.limit
    h = limit.grid.step
    est = finsler_estimate(R1.element((0.0,)), ONE, spec("arctan_pullback"), TS, S_GRID)
    for v in (ONE, -ONE):
        res = check_finsler_bound(limit, v, est.value, [t for t in TS if t >= h], 2 * h)
        assert res.passed, res


def test_envelope_bound_holds_for_stencil_radius_one():
    grid = sample_window(window("R1", [(-2, 2)], 41))
    env = right_invariant_envelope(spec("arctan_pullback"), grid, AdjacencySpec(1))
    assert env.meta["sigma_sample_size"] == len(grid)
