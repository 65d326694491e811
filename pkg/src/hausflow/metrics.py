"""Base metrics, finite Hausdorff distance, induced metrics and metric fields.

Every metric object exposes ``pairwise(a, b)``: an elementwise distance over
broadcast chart arrays of shape ``(..., dim)``.  ``+inf`` is a legal value
and propagates through min/max/sum as usual.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import GridMismatchError, IsotropyError, TruncationError
from .generators import GeneratorSet, point_keys
from .groups import Group, GroupElement, get_group
from .window import Grid

KINDS = (
    "euclidean",
    "chart_quotient",
    "arctan_pullback",
    "cuberoot_pullback",
    "chordal_circle",
    "heisenberg_gauge",
    "user_table",
)

# kinds invariant under left / right translations of their group
_LEFT_INVARIANT = {"euclidean", "chart_quotient", "chordal_circle"}
_RIGHT_INVARIANT = {"euclidean", "chart_quotient", "chordal_circle", "heisenberg_gauge"}

_ALLOWED = {
    "euclidean": lambda g: g.group_id[0] in "RH",
    "chart_quotient": lambda g: g.group_id[0] in "RT",
    "arctan_pullback": lambda g: g.group_id == "R1",
    "cuberoot_pullback": lambda g: g.group_id == "R1",
    "chordal_circle": lambda g: g.group_id == "T1",
    "heisenberg_gauge": lambda g: g.group_id == "H3",
    "user_table": lambda g: True,
}

_CHUNK = 4_000_000


@dataclass(frozen=True, eq=False)
class BaseMetricSpec:
    """A closed-form metric on one of the group models.

    ``heisenberg_gauge`` is the right-invariant Koranyi gauge
    ``N(p q^-1)`` with ``N = ((a^2 + b^2)^2 + 16 c^2)^(1/4)`` in exponential
    coordinates ``(a, b, c)``; its unit directions X, Y are horizontal and Z is not.
    ``user_table`` takes ``params={"points": [...], "matrix": [[...]]}``.
    """

    kind: str
    group: Group
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.group, str):
            object.__setattr__(self, "group", get_group(self.group))
        if self.kind not in KINDS:
            raise ValueError(f"unknown base metric kind {self.kind!r}; choose from {KINDS}")
        if not _ALLOWED[self.kind](self.group):
            raise ValueError(f"{self.kind} is not defined on {self.group.group_id}")
        if self.kind == "user_table":
            pts = np.asarray(self.params["points"], float).reshape(-1, self.group.dim)
            mat = np.asarray(self.params["matrix"], float)
            if mat.shape != (len(pts), len(pts)):
                raise ValueError("user_table matrix must be square and match the point list")
            keys = point_keys(self.group, pts)
            object.__setattr__(self, "_table", (keys, mat))

    @property
    def left_invariant(self) -> bool:
        return self.kind in _LEFT_INVARIANT

    @property
    def right_invariant(self) -> bool:
        return self.kind in _RIGHT_INVARIANT

    def pairwise(self, a, b) -> np.ndarray:
        g = self.group
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        k = self.kind
        if k == "euclidean" or k == "chart_quotient":
            return np.linalg.norm(g.chart_delta(a, b), axis=-1)
        if k == "arctan_pullback":
            return np.abs(np.arctan(a[..., 0]) - np.arctan(b[..., 0]))
        if k == "cuberoot_pullback":
            return np.abs(np.cbrt(a[..., 0]) - np.cbrt(b[..., 0]))
        if k == "chordal_circle":
            delta = np.abs(g.chart_delta(a, b)[..., 0])
            return 2.0 * np.sin(np.pi * delta)
        if k == "heisenberg_gauge":
            # log(a b^-1) written so that a == b gives exact zeros
            dx = a[..., 0] - b[..., 0]
            dy = a[..., 1] - b[..., 1]
            dz = (a[..., 2] - b[..., 2]) - b[..., 1] * dx - 0.5 * dx * dy
            r2 = dx * dx + dy * dy
            return (r2 * r2 + 16.0 * dz * dz) ** 0.25
        return self._lookup(a, b)

    def _lookup(self, a, b):
        keys, mat = self._table
        a, b = np.broadcast_arrays(a, b)

        def index(p):
            pk = point_keys(self.group, p.reshape(-1, self.group.dim))
            hit = np.all(pk[:, None, :] == keys[None, :, :], axis=-1)
            found = hit.any(axis=1)
            if not found.all():
                bad = p.reshape(-1, self.group.dim)[np.flatnonzero(~found)[0]]
                raise KeyError(f"point {tuple(bad)} is not in the user table")
            return hit.argmax(axis=1)

        return mat[index(a), index(b)].reshape(a.shape[:-1])

    def __call__(self, p: GroupElement, q: GroupElement) -> float:
        return eval_base_metric(self, p, q)

    def describe(self) -> dict:
        out = {"kind": self.kind, "group": self.group.group_id}
        if self.kind != "user_table":
            out.update(self.params)
        return out


def eval_base_metric(spec: BaseMetricSpec, p: GroupElement, q: GroupElement) -> float:
    return float(spec.pairwise(p.array, q.array))


def _as_points(group: Group, pts) -> np.ndarray:
    if isinstance(pts, GroupElement):
        pts = [pts]
    arr = [p.coords if isinstance(p, GroupElement) else np.ravel(p) for p in pts]
    return group.reduce(np.asarray(arr, float).reshape(-1, group.dim))


def _kdtree_ok(metric):
    if not isinstance(metric, BaseMetricSpec) or metric.kind not in ("euclidean", "chart_quotient"):
        return False
    per = metric.group.periodic
    return all(per) or not any(per)


def _directed_kdtree(group, A, B):
    box = 1.0 if all(group.periodic) else None
    if box is not None:
        A, B = (np.where(x >= 1.0, 0.0, x) for x in (np.mod(A, 1.0), np.mod(B, 1.0)))
    ab = cKDTree(B, boxsize=box).query(A)[0].max()
    ba = cKDTree(A, boxsize=box).query(B)[0].max()
    return float(ab), float(ba)


def _directed_pair(metric, A, B):
    """Both directed sup-inf distances between finite point arrays, chunked by rows."""
    if len(A) * len(B) > 10_000 and _kdtree_ok(metric):
        return _directed_kdtree(metric.group, A, B)
    rows = max(1, _CHUNK // max(1, len(B)))
    ab = -np.inf
    col_min = np.full(len(B), np.inf)
    for s in range(0, len(A), rows):
        d = metric.pairwise(A[s : s + rows, None, :], B[None, :, :])
        ab = max(ab, float(d.min(axis=1).max()))
        np.minimum(col_min, d.min(axis=0), out=col_min)
    return ab, float(col_min.max())


def hausdorff_distance(A, B, metric) -> float:
    """Exact Hausdorff distance between two nonempty finite sets."""
    group = metric.group
    A = _as_points(group, A)
    B = _as_points(group, B)
    if len(A) == 0 or len(B) == 0:
        raise ValueError("hausdorff_distance needs two nonempty sets")
    ab, ba = _directed_pair(metric, A, B)
    return max(ab, ba)


def _require_certified(X: GeneratorSet):
    if not X.certified:
        raise IsotropyError("generator set has no isotropy certificate; call X.certify()")


def _hausdorff_tensor(d, valid=None):
    """Hausdorff distance from a ``(..., k, k)`` table ``d[i, j] = d(p x_i, q x_j)``."""
    if valid is not None:
        both = valid[..., :, None] & valid[..., None, :]
        d = np.where(both, d, np.inf)
        row = np.where(valid, d.min(axis=-1), -np.inf).max(axis=-1)
        col = np.where(valid, d.min(axis=-2), -np.inf).max(axis=-1)
    else:
        row = d.min(axis=-1).max(axis=-1)
        col = d.min(axis=-2).max(axis=-1)
    return np.maximum(row, col)


class InducedMetric:
    """``d_X(p, q) = d_H(pX, qX)`` for a finite, certified ``X``.

    ``base`` is a :class:`BaseMetricSpec` or a :class:`MetricField`.  For a
    left-invariant closed-form base, ``d_X(p, q)`` only depends on
    ``p^-1 q`` and values are cached per displacement.
    """

    def __init__(self, base, X: GeneratorSet):
        _require_certified(X)
        if base.group != X.group:
            raise ValueError("base metric and generator set live on different groups")
        self.base = base
        self.X = X
        self.group = X.group
        self._cache = {}

    def pairwise(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        lead = a.shape[:-1]
        a = a.reshape(-1, self.group.dim)
        b = b.reshape(-1, self.group.dim)
        if isinstance(self.base, BaseMetricSpec) and self.base.left_invariant:
            out = self._by_displacement(a, b)
        else:
            out = self._direct(a, b)
        return out.reshape(lead)

    def _by_displacement(self, a, b):
        g = self.group
        delta = g.mul(g.inv(a), b)
        keys = point_keys(g, delta, 1e-12)
        uniq, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        vals = np.empty(len(uniq))
        X = self.X.elements
        for u, (key, i) in enumerate(zip(map(tuple, uniq), first)):
            if key not in self._cache:
                self._cache[key] = max(_directed_pair(self.base, X, g.mul(delta[i], X)))
            vals[u] = self._cache[key]
        return vals[np.ravel(inverse)]

    def _direct(self, a, b):
        g = self.group
        X = self.X.elements
        k = len(X)
        out = np.empty(len(a))
        step = max(1, _CHUNK // (k * k * 4))
        for s in range(0, len(a), step):
            pa = g.mul(a[s : s + step, None, :], X[None])
            pb = g.mul(b[s : s + step, None, :], X[None])
            d = self.base.pairwise(pa[:, :, None, :], pb[:, None, :, :])
            out[s : s + step] = _hausdorff_tensor(d)
        return out


class MaxTranslateMetric:
    """``d_M(p, q) = max_j d(p x_j, q x_j)``, translates only, no cross terms."""

    def __init__(self, base, X: GeneratorSet):
        self.base = base
        self.X = X
        self.group = X.group

    def pairwise(self, a, b):
        g = self.group
        a = np.asarray(a, float)[..., None, :]
        b = np.asarray(b, float)[..., None, :]
        return self.base.pairwise(g.mul(a, self.X.elements), g.mul(b, self.X.elements)).max(axis=-1)


def induced_metric(p, q, X: GeneratorSet, spec) -> float:
    _require_certified(X)
    g = X.group
    return hausdorff_distance(g.mul(p.array, X.elements), g.mul(q.array, X.elements), spec)


def max_translate_metric(p, q, X: GeneratorSet, spec) -> float:
    return float(MaxTranslateMetric(spec, X).pairwise(p.array, q.array))


# -- metric fields ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MetricField:
    """Pairwise distances over the nodes of a grid.

    ``values`` is a read-only ``(n, n)`` float array in grid order.  Off-grid
    evaluation uses multilinear interpolation in both arguments.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        n = len(self.grid)
        if v.shape != (n, n):
            raise ValueError(f"values must be ({n}, {n}); got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def group(self) -> Group:
        return self.grid.group

    @property
    def core_values(self) -> np.ndarray:
        m = self.grid.core_mask
        return self.values[np.ix_(m, m)]

    def relabel(self, label: str, **meta) -> "MetricField":
        return MetricField(self.grid, self.values, label, {**self.meta, **meta})

    def interpolate(self, a, b):
        """Interpolated distances and an in-window flag, elementwise."""
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        ca, wa, va = self.grid.locate(a)
        cb, wb, vb = self.grid.locate(b)
        V = self.values
        out = np.zeros(a.shape[:-1])
        for s in range(ca.shape[-1]):
            for t in range(cb.shape[-1]):
                w = wa[..., s] * wb[..., t]
                term = V[ca[..., s], cb[..., t]]
                out += w * np.where(w > 0, term, 0.0)
        same = np.all(np.abs(self.group.chart_delta(a, b)) < 1e-12, axis=-1)
        out = np.where(same, 0.0, out)
        return out, va & vb

    def pairwise(self, a, b):
        vals, ok = self.interpolate(a, b)
        if not np.all(ok):
            a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
            bad = tuple(np.argwhere(~ok)[0])
            pt = b[bad] if self.grid.contains(a[bad][None])[0] else a[bad]
            raise TruncationError(
                pt, self.group.identity(), f"point {tuple(pt)} lies outside the padded window"
            )
        return vals

    def lookup(self, p: GroupElement, q: GroupElement) -> float:
        return float(self.pairwise(p.array, q.array))


def metric_matrix(grid: Grid, metric, label: str = "", chunk: int = 256) -> MetricField:
    """Evaluate ``metric`` on all pairs of grid nodes (upper triangle, mirrored)."""
    pts = grid.points
    n = len(pts)
    vals = np.zeros((n, n))
    for s in range(0, n, chunk):
        rows = pts[s : s + chunk]
        block = metric.pairwise(rows[:, None, :], pts[None, :, :])
        vals[s : s + chunk] = block
    vals = np.triu(vals, 1)
    vals = vals + vals.T
    meta = {}
    if isinstance(metric, BaseMetricSpec):
        meta["base_metric"] = metric.describe()
    return MetricField(grid, vals, label or getattr(metric, "kind", type(metric).__name__), meta)


def check_same_grid(a: MetricField, b: MetricField):
    if not a.grid.same_as(b.grid):
        raise GridMismatchError("metric fields are defined on different grids")
