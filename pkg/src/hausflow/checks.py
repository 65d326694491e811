"""Property checks on metric fields and flow iterates.

Each check returns a :class:`PropertyResult`; a failing result carries the
offending indices so a report can point at them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import AdjacencySpec, intrinsicize
from .metrics import MetricField, check_same_grid


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    value: float
    threshold: float
    witness: tuple | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
            "witness": None if self.witness is None else [int(k) for k in self.witness],
            "detail": self.detail,
        }


def _worst(A):
    k = np.unravel_index(int(np.nanargmax(A)), A.shape)
    return float(A[k]), tuple(int(i) for i in k)


def triangle_violation(D: np.ndarray):
    """``max d(i,j) - d(i,k) - d(k,j)`` and its ``(i, j, k)``."""
    n = len(D)
    best, arg = -np.inf, (0, 0, 0)
    for k in range(n):
        with np.errstate(invalid="ignore"):
            gap = D - (D[:, k, None] + D[None, k, :])
        gap = np.where(np.isnan(gap), -np.inf, gap)
        v, (i, j) = _worst(gap)
        if v > best:
            best, arg = v, (i, j, k)
    return best, arg


def metric_axioms(field_: MetricField, tol: float = 1e-9, core_only: bool = False) -> list:
    """Zero diagonal, nonnegativity, symmetry and the triangle inequality."""
    D = field_.core_values if core_only else field_.values
    out = []
    diag = np.abs(np.diag(D))
    k = int(np.argmax(diag))
    out.append(PropertyResult("zero_diagonal", bool(diag[k] <= tol), float(diag[k]), tol, (k, k)))
    v, w = _worst(-D)
    out.append(PropertyResult("nonnegative", v <= tol, max(v, 0.0), tol, w))
    with np.errstate(invalid="ignore"):
        asym = np.abs(D - D.T)
    asym = np.where(np.isnan(asym), 0.0, asym)
    v, w = _worst(asym)
    out.append(PropertyResult("symmetric", v <= tol, v, tol, w))
    v, w = triangle_violation(D)
    out.append(PropertyResult("triangle", v <= tol, max(v, 0.0), tol, w))
    return out


def check_monotone(iterates, slack: float = 1e-9) -> PropertyResult:
    """Every iterate dominates its predecessor on the core, up to ``slack``."""
    worst, arg = 0.0, None
    for n in range(1, len(iterates)):
        check_same_grid(iterates[n - 1], iterates[n])
        v, w = _worst(iterates[n - 1].core_values - iterates[n].core_values)
        if v > worst or arg is None:
            worst, arg = v, (n,) + w
    return PropertyResult("monotone", worst <= slack, worst, slack, arg)


def check_upper_bound(iterates, envelope: MetricField, slack: float) -> PropertyResult:
    """Every iterate stays below ``envelope + slack`` on the core."""
    worst, arg = -np.inf, None
    for n, it in enumerate(iterates):
        check_same_grid(it, envelope)
        v, w = _worst(it.core_values - envelope.core_values)
        if v > worst:
            worst, arg = v, (n,) + w
    return PropertyResult("upper_bound", worst <= slack, worst, slack, arg)


def has_midpoint(field_: MetricField, i: int, j: int, eps: float) -> bool:
    D = field_.values
    d = D[i, j]
    ok = (np.abs(2 * D[i] - d) <= eps) & (np.abs(2 * D[j] - d) <= eps)
    return bool(ok.any())


def epsilon_midpoints(field_: MetricField, pairs, eps: float) -> PropertyResult:
    """Each pair ``(i, j)`` has a grid node ``z`` with ``|2 d(x,z) - d(x,y)| <= eps`` both ways."""
    pairs = [tuple(int(k) for k in p) for p in pairs]
    missing = [p for p in pairs if not has_midpoint(field_, *p, eps)]
    frac = 1.0 - len(missing) / max(1, len(pairs))
    return PropertyResult(
        "epsilon_midpoints", not missing, frac, 1.0, missing[0] if missing else None,
        f"{len(pairs) - len(missing)}/{len(pairs)} pairs have a midpoint",
    )


def random_core_pairs(field_: MetricField, n: int, rng: np.random.Generator) -> np.ndarray:
    core = field_.grid.core_indices
    pairs = rng.choice(core, size=(n, 2))
    same = pairs[:, 0] == pairs[:, 1]
    while same.any():
        pairs[same, 1] = rng.choice(core, size=int(same.sum()))
        same = pairs[:, 0] == pairs[:, 1]
    return pairs


def check_intrinsic_idempotent(field_: MetricField, adj: AdjacencySpec = AdjacencySpec(),
                               tol: float = 1e-12) -> PropertyResult:
    once = intrinsicize(field_, adj)
    twice = intrinsicize(once, adj)
    with np.errstate(invalid="ignore"):
        diff = np.abs(twice.values - once.values)
    diff = np.where(np.isnan(diff), 0.0, diff)
    v, w = _worst(diff)
    return PropertyResult("intrinsic_idempotent", v <= tol, v, tol, w)


def check_extensive(field_: MetricField, adj: AdjacencySpec = AdjacencySpec(),
                    tol: float = 1e-12) -> PropertyResult:
    """The intrinsic metric dominates the metric it comes from (``field_`` must be a metric)."""
    v, w = _worst(field_.values - intrinsicize(field_, adj).values)
    return PropertyResult("intrinsic_extensive", v <= tol, max(v, 0.0), tol, w)


def check_intrinsic_monotone(small: MetricField, large: MetricField,
                             adj: AdjacencySpec = AdjacencySpec(), tol: float = 1e-12) -> PropertyResult:
    """``small <= large`` entrywise implies the same for their intrinsic metrics."""
    check_same_grid(small, large)
    v, w = _worst(intrinsicize(small, adj).values - intrinsicize(large, adj).values)
    return PropertyResult("intrinsic_monotone", v <= tol, max(v, 0.0), tol, w)


def check_finsler_bound(field_: MetricField, direction, value: float, t_values, tol: float) -> PropertyResult:
    """``field(exp(t v) s, s) <= value * t + tol`` for core nodes ``s`` whose translate stays in the core."""
    g = field_.group
    v = direction.array if hasattr(direction, "array") else np.asarray(direction, float)
    P = field_.grid.points[field_.grid.core_mask]
    worst, arg = -np.inf, None
    for k, t in enumerate(t_values):
        moved = g.mul(g.exp(v, t)[None, :], P)
        inside = field_.grid.contains(moved)
        idx, _ = field_.grid.nearest_index(moved)
        inside &= field_.grid.core_mask[idx]
        if not inside.any():
            continue
        d, _ = field_.interpolate(moved[inside], P[inside])
        gap = d - value * t
        m = int(np.argmax(gap))
        if gap[m] > worst:
            worst, arg = float(gap[m]), (k, int(np.flatnonzero(inside)[m]))
    return PropertyResult("finsler_bound", worst <= tol, worst, tol, arg)
