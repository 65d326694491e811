"""End-to-end acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line; the lines are
also collected and repeated in the terminal summary.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from hausflow import (
    AdjacencySpec,
    AlgebraVector,
    BaseMetricSpec,
    GeneratorSet,
    MetricField,
    build_generator_from_basis,
    check_bracket_generating,
    check_isotropy_trivial,
    compare_fields,
    covering_radius,
    finsler_estimate,
    generate_words,
    get_group,
    intrinsicize,
    invert_generators,
    metric_matrix,
    right_invariance_defect,
    right_invariant_envelope,
    run_flow,
    sample_window,
    window,
)
from hausflow.checks import (
    check_extensive,
    check_intrinsic_idempotent,
    check_intrinsic_monotone,
    check_monotone,
    check_upper_bound,
    epsilon_midpoints,
    random_core_pairs,
)
from hausflow.demos import flat_torus_demo
from hausflow.finsler import default_t_schedule, grid_translations, translation_gap
from hausflow.flow import floyd_warshall

from .conftest import line_window

RESULTS: list = []
R1 = get_group("R1")
ONE = AlgebraVector(R1, (1.0,))
S_DENSE = np.linspace(-3, 3, 60001)[:, None]
TS = default_t_schedule(4.0)


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def arctan():
    return BaseMetricSpec("arctan_pullback", R1)


def test_criterion_01_monotone(X_line):
    t0 = time.perf_counter()
    state = run_flow(arctan(), X_line, line_window(R1, X_line, 201), AdjacencySpec(2), tol=1e-4, max_iter=60)
    elapsed = time.perf_counter() - t0
    mono = check_monotone(state.iterates, 1e-9)
    verdict(1, mono.passed and elapsed < 30,
            f"worst decrease {mono.value:.2e} (slack 1e-9), runtime {elapsed:.1f}s (< 30s)")


def test_criterion_02_arctan_limit_is_euclidean(arctan_flow, arctan_flow_401):
    errs = []
    for state in (arctan_flow, arctan_flow_401):
        euc = metric_matrix(state.limit.grid, BaseMetricSpec("euclidean", R1))
        errs.append(compare_fields(state.limit, euc).relative)
    deltas_ok = arctan_flow.converged and arctan_flow.verdict.iterations <= 60 and arctan_flow.deltas[-1] < 1e-4
    ok = deltas_ok and errs[0] < 0.05 and errs[1] < errs[0]
    verdict(2, ok, f"converged in {arctan_flow.verdict.iterations} iterations, "
                   f"relative error {errs[0]:.4f} at 201, {errs[1]:.4f} at 401")


def test_criterion_03_upper_bound(arctan_flow):
    grid = arctan_flow.limit.grid
    env = right_invariant_envelope(arctan(), grid, AdjacencySpec(2))
    res = check_upper_bound(arctan_flow.iterates, env, 2 * grid.step)
    verdict(3, res.passed, f"max(iterate - envelope) {res.value:.2e} <= 2h = {2 * grid.step:.3f}")


def test_criterion_04_cuberoot_diverges(X_line):
    cube = BaseMetricSpec("cuberoot_pullback", R1)
    t0 = time.perf_counter()
    state = run_flow(cube, X_line, line_window(R1, X_line, 201), AdjacencySpec(2), tol=1e-4, max_iter=60)
    elapsed = time.perf_counter() - t0
    est = finsler_estimate(R1.element((0.0,)), ONE, cube, TS, S_DENSE)
    tail = est.trend[est.tail_start:]
    growth = float(np.min(tail[1:] / tail[:-1]))
    ok = state.verdict.kind == "diverged" and est.diverged and growth >= 1.10 and elapsed < 30
    verdict(4, ok, f"flow {state.verdict.kind} after {state.verdict.iterations} steps in {elapsed:.1f}s, "
                   f"estimator diverged={est.diverged}, min tail growth {growth:.3f}")


def test_criterion_05_right_invariance(arctan_flow):
    limit = arctan_flow.limit
    h = limit.grid.step
    sig = grid_translations(limit.grid, -1.0, 1.0)
    defect = right_invariance_defect(limit, sig, rel_tol=0.05)
    raw = metric_matrix(limit.grid, arctan())
    gap = translation_gap(raw, [1.0], [2.0], [1.0])
    ok = defect.excess <= 2 * h and gap > 0.15
    verdict(5, ok, f"limit defect beyond 5% relative {defect.excess:.2e} <= 2h = {2 * h:.3f}; "
                   f"raw arctan gap at (1,2,1) {gap:.5f} > 0.15")


def test_criterion_06_finsler_estimator():
    S = S_DENSE
    e1 = finsler_estimate(R1.element((0.0,)), ONE, arctan(), TS, S)
    em = finsler_estimate(R1.element((0.0,)), -ONE, arctan(), TS, S)
    e2 = finsler_estimate(R1.element((0.0,)), ONE.scaled(2.0), arctan(), TS, S)
    ratio = e2.value / e1.value
    ok = abs(e1.value - 1) <= 0.02 and abs(e1.value - em.value) <= 1e-3 and abs(ratio - 2) <= 0.04
    verdict(6, ok, f"F(1) = {e1.value:.5f}, |F(1) - F(-1)| = {abs(e1.value - em.value):.1e}, "
                   f"F(2)/F(1) = {ratio:.4f}")


def test_criterion_07_intrinsicize():
    T1 = get_group("T1")
    grid = sample_window(window(T1, [(0, 1)], 360))
    chordal = metric_matrix(grid, BaseMetricSpec("chordal_circle", T1))
    anti = intrinsicize(chordal).values[0, 180]
    idem = check_intrinsic_idempotent(chordal, tol=1e-12)

    n = 12
    small_grid = sample_window(window(R1, [(0, 1)], n))
    rng = np.random.default_rng(0)
    bad = 0
    for _ in range(100):
        raw = np.triu(rng.uniform(0.001, 10, (n, n)), 1)
        small = floyd_warshall(raw + raw.T)
        bump = np.triu(rng.uniform(0, 3, (n, n)), 1)
        a = MetricField(small_grid, small)
        b = MetricField(small_grid, small + bump + bump.T)
        radius = AdjacencySpec(int(rng.integers(1, 5)))
        bad += not (check_extensive(a, radius).passed and check_intrinsic_monotone(a, b, radius).passed)
    ok = abs(anti - math.pi) <= 1e-3 and idem.passed and bad == 0
    verdict(7, ok, f"antipodal {anti:.6f} (pi +- 1e-3), idempotence {idem.value:.1e}, "
                   f"{100 - bad}/100 random fields extensive and monotone")


def test_criterion_08_semigroup_density(X_line):
    unit = window(R1, [(0, 1)], 11)
    euc = BaseMetricSpec("euclidean", R1)
    radii = [covering_radius(generate_words(X_line, L, unit), unit, euc) for L in (4, 8, 12)]
    Xi = invert_generators(X_line)
    inv = [covering_radius(generate_words(Xi, L, unit), unit, euc) for L in (4, 8, 12)]
    ok = (abs(radii[0] - 0.2071068) <= 1e-6 and radii[1] < radii[0] and radii[2] < radii[1]
          and inv[1] < inv[0] and inv[2] < inv[1])
    verdict(8, ok, "radii at maxlen 4/8/12: " + ", ".join(f"{r:.7f}" for r in radii)
            + "; inverse: " + ", ".join(f"{r:.7f}" for r in inv))


def test_criterion_09_generator_construction():
    X = build_generator_from_basis([ONE])
    H3 = get_group("H3")
    horiz = [AlgebraVector(H3, (1, 0, 0)), AlgebraVector(H3, (0, 1, 0))]
    gen, dim = check_bracket_generating(horiz)
    HX = build_generator_from_basis(horiz)
    T1 = get_group("T1")
    half = GeneratorSet.from_elements(T1, [[0.0], [0.5]], certify=False)
    pts = sorted(X.elements[:, 0].tolist())
    ok = (pts == [-1.0, 0.0, math.sqrt(2)] and gen and dim == 3 and check_isotropy_trivial(HX)
          and not check_isotropy_trivial(half))
    verdict(9, ok, f"R1 basis gives {pts}, H3 bracket dimension {dim}, "
                   f"T1 {{0, 0.5}} isotropy trivial={check_isotropy_trivial(half)}")


def test_criterion_10_epsilon_midpoints(arctan_flow):
    limit = arctan_flow.limit
    eps = 3 * limit.grid.step
    pairs = random_core_pairs(limit, 200, np.random.default_rng(0))
    res = epsilon_midpoints(limit, pairs, eps)
    verdict(10, res.passed, f"{res.detail} at eps = 3h = {eps:.3f}")


@pytest.fixture(scope="module")
def torus():
    return flat_torus_demo(resolution=32, mesh=1 / 64)


def test_criterion_11_flat_torus(torus):
    ok = torus.strict_decrease > 0 and torus.local_relative_error < 0.10
    verdict(11, ok, f"max(d - d1) = {torus.strict_decrease:.4f} > 0, local error vs max metric "
                    f"{torus.local_relative_error:.4f} < 0.10 ({torus.n_generators} generators)")
