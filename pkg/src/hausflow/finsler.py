"""Right-invariant envelope of a base metric and the limit-norm estimator.

Every supremum over the group is approximated by a maximum over a finite
``sigma_sample``; results are lower bounds and carry the sample with them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EnvelopeInfiniteError
from .flow import AdjacencySpec, shortest_paths
from .groups import AlgebraVector, GroupElement
from .metrics import BaseMetricSpec, MetricField
from .semigroup import basis_vectors, check_bracket_generating, generate_words
from .window import Grid, WindowSpec

DIVERGENCE_FACTOR = 100.0
GROWTH = 1.10
SCHEDULE_LENGTH = 14

_CHUNK = 2_000_000


def _points(group, pts) -> np.ndarray:
    if isinstance(pts, GroupElement):
        pts = [pts]
    if isinstance(pts, np.ndarray):
        return pts.reshape(-1, group.dim).astype(float)
    return np.asarray([getattr(p, "coords", p) for p in pts], float).reshape(-1, group.dim)


def default_t_schedule(scale: float, n: int = SCHEDULE_LENGTH) -> np.ndarray:
    """``scale * 2**-k`` for ``k = 1..n``."""
    return float(scale) * 2.0 ** -np.arange(1, n + 1)


def default_sigma_sample(grid: Grid, X=None, window: WindowSpec | None = None, maxlen: int = 8) -> np.ndarray:
    """Grid nodes, plus the in-window word cloud of ``X`` when given."""
    pts = [grid.points]
    if X is not None:
        if window is None:
            raise ValueError("a word cloud needs the window it is traced on")
        pts.append(generate_words(X, maxlen, window).points)
    return np.unique(np.concatenate(pts), axis=0)


def _bar(spec, a, b, S):
    """``max_s d(a s, b s)`` for row arrays ``a``, ``b`` against all samples."""
    g = spec.group
    out = np.full(len(a), -np.inf)
    rows = max(1, _CHUNK // max(1, len(S)))
    for s in range(0, len(a), rows):
        A = g.mul(a[s : s + rows, None, :], S[None])
        B = g.mul(b[s : s + rows, None, :], S[None])
        out[s : s + rows] = spec.pairwise(A, B).max(axis=1)
    return out


def bar_metric(p, q, spec: BaseMetricSpec, sigma_sample) -> float:
    """``max_sigma d(p sigma, q sigma)`` over the sample; a lower bound for the envelope."""
    g = spec.group
    S = _points(g, sigma_sample)
    if len(S) == 0:
        raise ValueError("sigma_sample is empty")
    return float(_bar(spec, _points(g, p), _points(g, q), S)[0])


@dataclass(frozen=True, eq=False)
class FinslerEstimate:
    base_point: GroupElement
    direction: AlgebraVector
    t_schedule: np.ndarray = field(repr=False)
    sigma_sample: np.ndarray = field(repr=False)
    value: float
    diverged: bool
    trend: np.ndarray = field(repr=False)
    tail_start: int = 0

    def to_dict(self) -> dict:
        return {
            "base_point": list(self.base_point.coords),
            "direction": list(self.direction.components),
            "value": self.value,
            "diverged": self.diverged,
            "t_schedule": [float(t) for t in self.t_schedule],
            "trend": [float(q) for q in self.trend],
            "tail_start": self.tail_start,
            "sigma_sample_size": int(len(self.sigma_sample)),
        }


def _quotients(g_pt, v, spec, ts, S, both_signs):
    grp = spec.group
    base = grp.mul(g_pt[None, :], S)
    out = np.empty(len(ts))
    for k, t in enumerate(ts):
        signs = (1.0, -1.0) if both_signs else (1.0,)
        best = -np.inf
        for sgn in signs:
            moved = grp.mul(grp.exp(v, sgn * t)[None, :], base)
            best = max(best, float(spec.pairwise(moved, base).max()) / t)
        out[k] = best
    return out


def _tail_start(n: int) -> int:
    return n - max(3, math.ceil(n / 3))


def is_divergent(trend, factor: float = DIVERGENCE_FACTOR, growth: float = GROWTH) -> bool:
    """Tail far above the coarsest quotient and still growing by ``growth`` per step."""
    trend = np.asarray(trend, float)
    if len(trend) < 4:
        return False
    if not np.all(np.isfinite(trend)):
        return True
    lip = trend[0]
    tail = trend[_tail_start(len(trend)) :]
    if lip > 0 and tail.max() <= factor * lip:
        return False
    last = trend[-4:]
    return bool(np.all(last[1:] >= growth * last[:-1]))


def finsler_estimate(g, v: AlgebraVector, spec: BaseMetricSpec, t_schedule, sigma_sample,
                     both_signs: bool = False, factor: float = DIVERGENCE_FACTOR,
                     growth: float = GROWTH) -> FinslerEstimate:
    """Estimate ``sup_sigma limsup_t d(exp(t v) g sigma, g sigma) / t``.

    The limsup is the maximum over the last third of the schedule.  Only
    ``t > 0`` is used unless ``both_signs`` is set.
    """
    grp = spec.group
    if isinstance(g, GroupElement):
        g_el = g
    else:
        g_el = grp.element(np.ravel(np.asarray(g, float)))
    ts = np.asarray(t_schedule, float)
    if ts.ndim != 1 or len(ts) < 2 or np.any(ts <= 0) or np.any(np.diff(ts) >= 0):
        raise ValueError("t_schedule must be a strictly decreasing list of positive reals")
    varr = v.array if isinstance(v, AlgebraVector) else np.asarray(v, float)
    if not np.any(varr != 0):
        raise ValueError("direction must be nonzero")
    if not isinstance(v, AlgebraVector):
        v = AlgebraVector(grp, tuple(float(c) for c in varr))
    S = _points(grp, sigma_sample)
    if len(S) == 0:
        raise ValueError("sigma_sample is empty")
    trend = _quotients(g_el.array, varr, spec, ts, S, both_signs)
    start = _tail_start(len(ts))
    diverged = is_divergent(trend, factor, growth)
    value = np.inf if diverged else float(trend[start:].max())
    return FinslerEstimate(g_el, v, ts, S, value, diverged, trend, start)


@dataclass(frozen=True)
class SupLimsupReport:
    sup_all: float
    tail: float
    ratio: float

    def to_dict(self) -> dict:
        return {"sup_all": self.sup_all, "tail": self.tail, "ratio": self.ratio}


def sup_equals_limsup_check(v: AlgebraVector, spec: BaseMetricSpec, t_schedule, sigma_sample) -> SupLimsupReport:
    """Compare the max quotient over all ``(sigma, t)`` with the small-``t`` tail estimate."""
    est = finsler_estimate(spec.group.identity(), v, spec, t_schedule, sigma_sample)
    sup_all = float(np.max(est.trend))
    tail = float(np.max(est.trend[est.tail_start :]))
    return SupLimsupReport(sup_all, tail, sup_all / tail if tail > 0 else np.inf)


# -- right invariance ---------------------------------------------------------------


@dataclass(frozen=True)
class InvarianceDefect:
    sup: float
    argmax: tuple  # (x, y, sigma) chart points
    excess: float
    rel_tol: float
    floor: float
    n_triples: int

    def to_dict(self) -> dict:
        return {
            "sup": self.sup,
            "argmax": [list(map(float, p)) for p in self.argmax] if self.argmax else None,
            "excess": self.excess,
            "rel_tol": self.rel_tol,
            "floor": self.floor,
            "n_triples": self.n_triples,
        }


def grid_translations(grid: Grid, lo: float, hi: float) -> np.ndarray:
    """Core nodes whose every coordinate lies in ``[lo, hi]``."""
    pts = grid.points[grid.core_mask]
    keep = np.all((pts >= lo - 1e-12) & (pts <= hi + 1e-12), axis=1)
    return pts[keep]


def _lipschitz(field_: MetricField) -> float:
    i, j = field_.grid.neighbor_pairs(1)
    lengths = np.linalg.norm(field_.group.chart_delta(field_.grid.points[i], field_.grid.points[j]), axis=-1)
    return float(np.max(field_.values[i, j] / lengths))


def right_invariance_defect(field_: MetricField, sigma_sample, rel_tol: float = 0.0,
                            region: str = "core") -> InvarianceDefect:
    """Max of ``|field(x s, y s) - field(x, y)|`` over core pairs and sampled ``s``.

    Translates are looked up at the nearest node; with ``region="core"``
    they must land in the core, with ``"grid"`` anywhere in the padded grid.
    ``excess`` subtracts ``rel_tol`` times the larger of the two values.
    ``floor`` bounds the error from snapping off-grid translates.
    """
    grid = field_.grid
    g = grid.group
    S = _points(g, sigma_sample)
    core = grid.core_indices
    P = grid.points[core]
    V = field_.values
    allowed = grid.core_mask if region == "core" else np.ones(len(grid), bool)
    best, arg, excess, snap, count = 0.0, None, -np.inf, 0.0, 0
    for s in S:
        moved = g.mul(P, s[None, :])
        idx, ok = grid.nearest_index(moved)
        ok &= allowed[idx]
        if ok.sum() < 2:
            continue
        snap = max(snap, float(np.max(np.linalg.norm(
            g.chart_delta(moved[ok], grid.points[idx[ok]]), axis=-1))))
        src = core[ok]
        dst = idx[ok]
        before = V[np.ix_(src, src)]
        after = V[np.ix_(dst, dst)]
        diff = np.abs(after - before)
        count += diff.size
        k = np.unravel_index(int(np.argmax(diff)), diff.shape)
        if diff[k] > best or arg is None:
            best = float(diff[k])
            arg = (grid.points[src[k[0]]], grid.points[src[k[1]]], s)
        excess = max(excess, float(np.max(diff - rel_tol * np.maximum(before, after))))
    floor = 2.0 * snap * _lipschitz(field_) if snap > 1e-12 else 0.0
    return InvarianceDefect(best, arg, max(excess, 0.0) if count else 0.0, rel_tol, floor, count)


def translation_gap(field_: MetricField, x, y, sigma) -> float:
    """``|field(x sigma, y sigma) - field(x, y)|`` at one triple (interpolated)."""
    g = field_.group
    x, y, s = (_points(g, p)[0] for p in (x, y, sigma))
    return float(abs(field_.pairwise(g.mul(x, s), g.mul(y, s)) - field_.pairwise(x, y)))


def right_invariant_envelope(spec: BaseMetricSpec, grid: Grid, adj: AdjacencySpec = AdjacencySpec(),
                             sigma_sample=None, t_schedule=None, method="auto", threads=1) -> MetricField:
    """Intrinsic metric of the sampled envelope ``max_sigma d(x sigma, y sigma)``.

    Raises :class:`EnvelopeInfiniteError` when the directions along which
    the envelope has finite difference quotients do not bracket-generate the
    algebra: no finite-length path then joins distinct points.
    """
    if spec.kind == "user_table":
        raise ValueError("the envelope needs a closed-form base metric")
    S = grid.points if sigma_sample is None else _points(grid.group, sigma_sample)
    if t_schedule is None:
        t_schedule = default_t_schedule(max(hi - lo for lo, hi in
                                            ((a[0], a[-1]) for a in grid.axes)))
    finite = []
    for e in basis_vectors(grid.group):
        est = finsler_estimate(grid.group.identity(), e, spec, t_schedule, S, both_signs=True)
        if not est.diverged:
            finite.append(e)
    if not finite or not check_bracket_generating(finite)[0]:
        raise EnvelopeInfiniteError(
            "difference quotients of the envelope blow up along the "
            f"{'whole algebra' if not finite else 'complement of a non-generating subspace'}"
        )
    i, j = grid.neighbor_pairs(adj.stencil_radius)
    P = grid.points
    w = _bar(spec, P[i], P[j], S)
    D = shortest_paths(len(grid), i, j, w, method, threads)
    meta = {"base_metric": spec.describe(), "sigma_sample_size": int(len(S))}
    return MetricField(grid, D, "envelope", meta)


# -- norm tables ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NormTable:
    estimates: list
    homogeneity: list  # (i, j, lam, ok)
    rel_tol: float

    @property
    def homogeneous(self) -> bool:
        return all(ok for *_, ok in self.homogeneity)

    def rows(self) -> list:
        return [(e.direction, "diverged" if e.diverged else e.value) for e in self.estimates]

    def to_dict(self) -> dict:
        return {
            "estimates": [e.to_dict() for e in self.estimates],
            "homogeneity": [
                {"i": i, "j": j, "lambda": lam, "ok": ok} for i, j, lam, ok in self.homogeneity
            ],
            "homogeneous": self.homogeneous,
            "rel_tol": self.rel_tol,
        }


def _ratio(u, w):
    """``lam`` with ``w = lam u`` or ``None``."""
    k = int(np.argmax(np.abs(u)))
    lam = w[k] / u[k]
    return float(lam) if np.allclose(w, lam * u, atol=1e-12) else None


def norm_table(g, directions, spec: BaseMetricSpec, t_schedule, sigma_sample,
               rel_tol: float = 0.02, both_signs: bool = False) -> NormTable:
    """Per-direction estimates at ``g`` plus a homogeneity check on finite entries."""
    ests = [finsler_estimate(g, d, spec, t_schedule, sigma_sample, both_signs) for d in directions]
    checks = []
    for i, a in enumerate(ests):
        for j in range(i + 1, len(ests)):
            b = ests[j]
            if a.diverged or b.diverged:
                continue
            lam = _ratio(a.direction.array, b.direction.array)
            if lam is None:
                continue
            want = abs(lam) * a.value
            checks.append((i, j, lam, bool(abs(b.value - want) <= rel_tol * want)))
    return NormTable(ests, checks, rel_tol)
