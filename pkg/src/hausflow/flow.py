"""Intrinsic metrics on grids and the induced-Hausdorff flow.

The flow step maps a metric ``d`` to the intrinsic metric of ``d_X``.  On a
grid the intrinsic metric is the shortest-path metric of the stencil graph
whose edge weights are the field values, so only stencil edges of ``d_X``
are ever evaluated.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .exceptions import MonotonicityError, TruncationError
from .generators import GeneratorSet
from .metrics import (
    BaseMetricSpec,
    InducedMetric,
    MetricField,
    _hausdorff_tensor,
    _require_certified,
    check_same_grid,
    metric_matrix,
)
from .window import Grid, WindowSpec, sample_window

logger = logging.getLogger(__name__)

FW_MAX_NODES = 400
MONOTONE_SLACK = 1e-9
# deltas below this fraction of the core diameter are rounding noise
FIXED_POINT_RTOL = 1e-12


@dataclass(frozen=True)
class AdjacencySpec:
    """Grid nodes within Chebyshev index distance ``stencil_radius`` are neighbors."""

    stencil_radius: int = 2

    def __post_init__(self):
        if int(self.stencil_radius) < 1:
            raise ValueError("stencil_radius must be >= 1")


# -- all-pairs shortest paths ---------------------------------------------------


def floyd_warshall(weights: np.ndarray) -> np.ndarray:
    """Dense Floyd-Warshall on a symmetric weight matrix (``inf`` = no edge)."""
    D = np.array(weights, dtype=float)
    np.fill_diagonal(D, np.minimum(np.diag(D), 0.0))
    n = len(D)
    for k in range(n):
        np.minimum(D, D[:, k, None] + D[None, k, :], out=D)
    return D


def _dijkstra_all(n, i, j, w, threads=1):
    # explicit zero-weight edges would vanish from a sparse matrix
    w = np.where(w == 0, np.finfo(float).tiny, w)
    graph = coo_matrix((w, (i, j)), shape=(n, n)).tocsr()
    if threads <= 1:
        return dijkstra(graph, directed=False)
    blocks = np.array_split(np.arange(n), threads)
    with ThreadPoolExecutor(threads) as ex:
        parts = list(ex.map(lambda idx: dijkstra(graph, directed=False, indices=idx), blocks))
    return np.vstack(parts)


def shortest_paths(n, i, j, w, method="auto", threads=1) -> np.ndarray:
    """All-pairs shortest paths on an undirected graph given as an edge list."""
    i = np.asarray(i)
    j = np.asarray(j)
    w = np.asarray(w, float)
    finite = np.isfinite(w)
    i, j, w = i[finite], j[finite], w[finite]
    if method == "auto":
        method = "floyd_warshall" if n <= FW_MAX_NODES else "dijkstra"
    if method == "floyd_warshall":
        W = np.full((n, n), np.inf)
        np.minimum.at(W, (i, j), w)
        W = np.minimum(W, W.T)
        return floyd_warshall(W)
    if method == "dijkstra":
        D = _dijkstra_all(n, i, j, w, threads)
        # tiny stand-ins for zero weights leave subnormal residue
        D[D < 1e-300] = 0.0
        np.fill_diagonal(D, 0.0)
        return D
    raise ValueError(f"unknown shortest-path method {method!r}")


def intrinsicize(field_: MetricField, adj: AdjacencySpec = AdjacencySpec(), method="auto", threads=1):
    """Shortest-path metric of the stencil graph weighted by ``field_``."""
    i, j = field_.grid.neighbor_pairs(adj.stencil_radius)
    D = shortest_paths(len(field_.grid), i, j, field_.values[i, j], method, threads)
    meta = dict(field_.meta)
    meta["disconnected"] = bool(np.isinf(D).any())
    return MetricField(field_.grid, D, field_.label, meta)


def path_length(poly, metric) -> float:
    """Sum of consecutive distances along a polyline.

    ``poly`` is a sequence of chart points / group elements, or of integer
    node indices when ``metric`` is a :class:`MetricField`.
    """
    pts = list(poly)
    if len(pts) < 2:
        raise ValueError("a polyline needs at least two points")
    if isinstance(metric, MetricField) and all(isinstance(p, (int, np.integer)) for p in pts):
        idx = np.asarray(pts)
        return float(metric.values[idx[:-1], idx[1:]].sum())
    arr = np.asarray([getattr(p, "coords", p) for p in pts], float).reshape(len(pts), -1)
    return float(np.sum(metric.pairwise(arr[:-1], arr[1:])))


# -- the flow step --------------------------------------------------------------


def induced_edge_weights(base, X: GeneratorSet, grid: Grid, i, j, chunk=20_000):
    """``d_X`` on the edges ``(i[e], j[e])`` of ``grid``.

    With a closed-form base every translate is evaluated exactly.  With a
    :class:`MetricField` base, translates of core nodes must stay inside the
    padded window (else :class:`TruncationError`); for edges touching the
    padding ring, generators whose translates leave the window are dropped
    from ``X`` for that edge.
    """
    _require_certified(X)
    g = grid.group
    P = grid.points
    Xe = X.elements
    if isinstance(base, MetricField):
        check = grid.contains(g.mul(P[:, None, :], Xe[None]))
        core_bad = ~check & grid.core_mask[:, None]
        if core_bad.any():
            node, gen = np.argwhere(core_bad)[0]
            raise TruncationError(P[node], Xe[gen])
    if not isinstance(base, MetricField):
        return InducedMetric(base, X).pairwise(P[i], P[j])
    out = np.empty(len(i))
    for s in range(0, len(i), chunk):
        pa = g.mul(P[i[s : s + chunk], None, :], Xe[None])
        pb = g.mul(P[j[s : s + chunk], None, :], Xe[None])
        d, ok = base.interpolate(pa[:, :, None, :], pb[:, None, :, :])
        valid = np.diagonal(ok, axis1=1, axis2=2)
        out[s : s + chunk] = _hausdorff_tensor(d, valid)
    return out


def flow_step(base, X: GeneratorSet, adj: AdjacencySpec = AdjacencySpec(), grid: Grid | None = None,
              method="auto", threads=1) -> MetricField:
    """One step ``d -> intrinsic(d_X)`` on a grid.

    ``base`` is the current iterate (:class:`MetricField`) or a closed-form
    :class:`BaseMetricSpec`, in which case ``grid`` is required.
    """
    if isinstance(base, MetricField):
        grid = base.grid
        level = int(base.meta.get("iteration", 0)) + 1
    elif grid is None:
        raise ValueError("flow_step from a closed-form metric needs a grid")
    else:
        level = 1
    i, j = grid.neighbor_pairs(adj.stencil_radius)
    w = induced_edge_weights(base, X, grid, i, j)
    D = shortest_paths(len(grid), i, j, w, method, threads)
    meta = dict(getattr(base, "meta", {}) or {})
    if isinstance(base, BaseMetricSpec):
        meta["base_metric"] = base.describe()
    meta["iteration"] = level
    meta["disconnected"] = bool(np.isinf(D).any())
    return MetricField(grid, D, f"d^{level}", meta)


# -- iteration --------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    kind: str  # "converged" | "max_iter_reached" | "diverged"
    iterations: int
    tol: float
    threshold: float

    def to_dict(self):
        return {
            "kind": self.kind,
            "iterations": self.iterations,
            "tol": self.tol,
            "threshold": self.threshold,
        }


@dataclass
class FlowState:
    iterates: list
    deltas: list
    verdict: Verdict
    min_increment: list = field(default_factory=list)
    core_diameters: list = field(default_factory=list)

    @property
    def limit(self) -> MetricField:
        return self.iterates[-1]

    @property
    def converged(self) -> bool:
        return self.verdict.kind == "converged"

    def to_report(self) -> dict:
        return {
            "verdict": self.verdict.to_dict(),
            "deltas": [float(d) for d in self.deltas],
            "min_increment": [float(d) for d in self.min_increment],
            "core_diameters": [float(d) for d in self.core_diameters],
            "retained": [f.label for f in self.iterates],
        }


def _core_diameter(values, mask):
    core = values[np.ix_(mask, mask)]
    finite = core[np.isfinite(core)]
    return float(finite.max()) if finite.size else 0.0


def _sup_delta(new, old, mask):
    a = new[np.ix_(mask, mask)]
    b = old[np.ix_(mask, mask)]
    both_inf = np.isinf(a) & np.isinf(b)
    with np.errstate(invalid="ignore"):
        diff = np.where(both_inf, 0.0, a - b)
    return diff


def run_flow(
    base: BaseMetricSpec,
    X: GeneratorSet,
    window: WindowSpec,
    adj: AdjacencySpec = AdjacencySpec(),
    tol: float = 1e-4,
    max_iter: int = 100,
    divergence_factor: float = 10.0,
    patience: int = 3,
    retain: str = "all",
    monotone_slack: float = MONOTONE_SLACK,
    enforce_monotone: bool = True,
    method: str = "auto",
    threads: int = 1,
    callback=None,
) -> FlowState:
    """Iterate the flow from ``base`` until convergence, divergence or budget.

    Stops when the sup-norm change on the core stays below ``tol`` for
    ``patience`` consecutive steps or vanishes up to rounding (converged),
    when a core value exceeds ``divergence_factor`` times the initial core
    diameter (diverged), or after ``max_iter`` steps.
    ``retain`` is ``"all"`` or ``"ends"`` (first and last iterate only).

    A decrease beyond ``monotone_slack`` on the core raises
    :class:`MonotonicityError` unless ``enforce_monotone`` is off, which is
    needed when ``X`` is a dense sample of a compact set whose spacing is
    below the stencil scale.
    """
    if retain not in ("all", "ends"):
        raise ValueError("retain must be 'all' or 'ends'")
    _require_certified(X)
    grid = sample_window(window)
    # every core translate must lie in the padded window
    g = grid.group
    inside = grid.contains(g.mul(grid.points[:, None, :], X.elements[None]))
    bad = ~inside & grid.core_mask[:, None]
    if bad.any():
        node, gen = np.argwhere(bad)[0]
        raise TruncationError(grid.points[node], X.elements[gen])

    mask = grid.core_mask
    current = metric_matrix(grid, base, label="d^0").relabel("d^0", iteration=0)
    diam0 = _core_diameter(current.values, mask)
    threshold = divergence_factor * diam0
    iterates = [current]
    deltas, incs, diams = [], [], [diam0]
    verdict = None
    for it in range(1, max_iter + 1):
        src = base if it == 1 else current
        nxt = flow_step(src, X, adj, grid=grid, method=method, threads=threads)
        diff = _sup_delta(nxt.values, current.values, mask)
        min_inc = float(np.nanmin(diff))
        if enforce_monotone and min_inc < -monotone_slack:
            a, b = np.unravel_index(np.nanargmin(diff), diff.shape)
            core = grid.core_indices
            raise MonotonicityError(
                f"iterate {it} decreased by {-min_inc:.3e} at core pair "
                f"({grid.points[core[a]].tolist()}, {grid.points[core[b]].tolist()})"
            )
        delta = float(np.nanmax(np.abs(diff)))
        diam = _core_diameter(nxt.values, mask)
        deltas.append(delta)
        incs.append(min_inc)
        diams.append(diam)
        if retain == "all":
            iterates.append(nxt)
        current = nxt
        if callback is not None:
            callback(it, nxt, delta)
        logger.debug("iteration %d: delta %.3e diameter %.4f", it, delta, diam)
        if diam > threshold:
            verdict = Verdict("diverged", it, tol, threshold)
            break
        fixed = delta <= FIXED_POINT_RTOL * max(diam, 1.0)
        if fixed or (len(deltas) >= patience and max(deltas[-patience:]) < tol):
            verdict = Verdict("converged", it, tol, threshold)
            break
    if verdict is None:
        verdict = Verdict("max_iter_reached", max_iter, tol, threshold)
    if retain == "ends":
        iterates.append(current)
    return FlowState(iterates, deltas, verdict, incs, diams)


# -- comparisons --------------------------------------------------------------------


@dataclass(frozen=True)
class FieldComparison:
    sup_diff: float
    mean_diff: float
    argmax: tuple
    reference_sup: float

    @property
    def relative(self) -> float:
        """``sup_diff`` divided by the sup of the reference field on the core."""
        if self.reference_sup > 0:
            return self.sup_diff / self.reference_sup
        return 0.0 if self.sup_diff == 0 else np.inf


def compare_fields(a: MetricField, b: MetricField) -> FieldComparison:
    """Differences of ``a`` against the reference ``b``, restricted to the core."""
    check_same_grid(a, b)
    mask = a.grid.core_mask
    diff = np.abs(_sup_delta(a.values, b.values, mask))
    k = np.unravel_index(int(np.nanargmax(diff)), diff.shape)
    core = a.grid.core_indices
    ref = b.core_values
    ref_sup = float(ref[np.isfinite(ref)].max()) if np.isfinite(ref).any() else 0.0
    return FieldComparison(
        float(diff[k]), float(np.nanmean(diff)), (int(core[k[0]]), int(core[k[1]])), ref_sup
    )
