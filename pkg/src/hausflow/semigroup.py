"""Word enumeration for the semigroup generated by ``X`` and generator construction."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BracketGenerationError, CloudSizeError, WindowError
from .generators import (
    DEDUP_TOL,
    GeneratorSet,
    check_isotropy_trivial,
    invert_generators,
    point_keys,
)
from .groups import AlgebraVector, Group
from .window import WindowSpec, sample_window

__all__ = [
    "WordCloud",
    "generate_words",
    "covering_radius",
    "build_generator_from_basis",
    "check_bracket_generating",
    "check_isotropy_trivial",
    "invert_generators",
]

CLOUD_CAP = 500_000


@dataclass(frozen=True, eq=False)
class WordCloud:
    """Products of at most ``maxlen`` generators, traced near a window.

    ``points`` lie inside the window; ``margin_points`` is the full
    breadth-first closure kept inside the window enlarged by ``margin``.
    """

    group: Group
    points: np.ndarray = field(repr=False)
    margin_points: np.ndarray = field(repr=False)
    maxlen: int
    tol: float
    margin: float

    def __len__(self):
        return len(self.points)


def _in_box(group, window: WindowSpec, pts, margin):
    ok = np.ones(len(pts), bool)
    for a, ((lo, hi), per) in enumerate(zip(window.bounds, group.periodic)):
        if per:
            continue
        ok &= (pts[:, a] >= lo - margin - 1e-12) & (pts[:, a] <= hi + margin + 1e-12)
    return ok


def _lexsorted(pts):
    return pts[np.lexsort(pts.T[::-1])] if len(pts) else pts


def generate_words(X: GeneratorSet, maxlen: int, window: WindowSpec, tol: float = DEDUP_TOL,
                   margin: float | None = None, cap: int = CLOUD_CAP) -> WordCloud:
    """Breadth-first closure of right products by ``X`` from the identity.

    Partial products are pruned to the window plus ``margin`` (default: the
    reach radius of ``X``); duplicates are merged at ``tol`` and every level
    is kept in lexicographic order so the result is deterministic.
    """
    if maxlen < 1:
        raise ValueError("maxlen must be >= 1")
    g = X.group
    if margin is None:
        margin = X.reach_radius
    frontier = g.identity()[None, :]
    seen = {tuple(k) for k in point_keys(g, frontier, tol)}
    levels = [frontier]
    for _ in range(maxlen):
        cand = g.mul(frontier[:, None, :], X.elements[None, :, :]).reshape(-1, g.dim)
        cand = cand[_in_box(g, window, cand, margin)]
        keys = point_keys(g, cand, tol)
        _, first = np.unique(keys, axis=0, return_index=True)
        fresh = [i for i in np.sort(first) if tuple(keys[i]) not in seen]
        if not fresh:
            break
        frontier = _lexsorted(cand[fresh])
        seen.update(tuple(keys[i]) for i in fresh)
        levels.append(frontier)
        if len(seen) > cap:
            raise CloudSizeError(f"word cloud exceeds {cap} points at length <= {maxlen}")
    everything = _lexsorted(np.concatenate(levels))
    inside = everything[_in_box(g, window, everything, 0.0)]
    return WordCloud(g, inside, everything, maxlen, tol, margin)


def _nearest_distance(probes, cloud_pts, metric, chunk=2_000_000):
    rows = max(1, chunk // max(1, len(cloud_pts)))
    out = np.empty(len(probes))
    for s in range(0, len(probes), rows):
        d = metric.pairwise(probes[s : s + rows, None, :], cloud_pts[None, :, :])
        out[s : s + rows] = d.min(axis=1)
    return out


def covering_radius(cloud: WordCloud, window: WindowSpec, metric, probe_factor: int = 10,
                    refine_steps: int = 40, candidates: int = 8) -> float:
    """Largest distance from a point of the window to the nearest cloud point.

    A probe grid ``probe_factor`` times finer than ``window`` locates the
    worst region; the best candidates are then polished by repeated local
    zooming, so the returned value is accurate well below the probe step.
    """
    if len(cloud.points) == 0:
        raise ValueError("empty word cloud")
    res = tuple(max(2, (r - (0 if per else 1)) * probe_factor + (0 if per else 1))
                for r, per in zip(window.resolution, window.group.periodic))
    probe_spec = WindowSpec(window.group, window.bounds, res, 0.0)
    probes = sample_window(probe_spec, max_points=10_000_000).points
    if len(probes) == 0:
        raise WindowError("empty window")
    dist = _nearest_distance(probes, cloud.points, metric)
    best = float(dist.max())
    steps = np.asarray(probe_spec.steps)
    lo = np.array([b[0] for b in window.bounds])
    hi = np.array([b[1] for b in window.bounds])
    per = np.asarray(window.group.periodic)
    offsets = np.stack(
        np.meshgrid(*[np.linspace(-1, 1, 9)] * window.group.dim, indexing="ij"), -1
    ).reshape(-1, window.group.dim)
    for c in np.argsort(-dist, kind="stable")[:candidates]:
        center = probes[c].copy()
        half = steps.copy()
        val = dist[c]
        for _ in range(refine_steps):
            trial = center + offsets * half
            trial = np.where(per, trial, np.clip(trial, lo, hi))
            d = _nearest_distance(trial, cloud.points, metric)
            k = int(np.argmax(d))
            if d[k] >= val:
                val, center = float(d[k]), trial[k]
            half = half / 2.5
        best = max(best, val)
    return best


def _rank(vectors, tol=1e-10):
    if len(vectors) == 0:
        return 0
    return int(np.linalg.matrix_rank(np.asarray(vectors, float), tol=tol))


def check_bracket_generating(V) -> tuple:
    """Whether iterated brackets of ``V`` span the Lie algebra, and the span dimension."""
    V = list(V)
    if not V:
        raise ValueError("need at least one algebra vector")
    group = V[0].group
    vecs = [v.array for v in V]
    dim = _rank(vecs)
    while True:
        new = [group.bracket(a, b) for a, b in itertools.combinations(vecs, 2)]
        grown = _rank(vecs + new)
        if grown == dim:
            break
        vecs = vecs + [w for w in new if np.linalg.norm(w) > 1e-12]
        dim = grown
    return dim == group.dim, dim


def _box_corners(basis, scale=2.0):
    B = np.asarray([v.array for v in basis])
    coeffs = np.asarray(list(itertools.product((-scale, scale), repeat=len(basis))))
    return coeffs @ B


def build_generator_from_basis(basis) -> GeneratorSet:
    """``X = {e} + {exp(-v_i)} + {exp(sqrt(2) v_i)}`` for a bracket-generating basis.

    The box of combinations with coefficients in ``[-2, 2]`` must sit where
    ``exp`` is injective; this is checked numerically.
    """
    basis = list(basis)
    if not basis:
        raise ValueError("empty basis")
    group = basis[0].group
    ok, dim = check_bracket_generating(basis)
    if not ok:
        raise BracketGenerationError(
            f"brackets of the basis span a {dim}-dimensional subalgebra of a {group.dim}-dimensional algebra"
        )
    corners = _box_corners(basis)
    radius = group.exp_injectivity_radius()
    if np.isfinite(radius):
        if np.max(np.abs(corners)) >= radius:
            raise ValueError(f"basis too large: the +-2 box leaves the injectivity radius {radius}")
    elif hasattr(group, "log"):
        if not np.allclose(group.log(group.exp(corners)), corners, atol=1e-12):
            raise ValueError("exp is not injective on the +-2 box of the basis")
    elems = [group.identity()]
    elems += [group.exp(-v.array) for v in basis]
    elems += [group.exp(np.sqrt(2.0) * v.array) for v in basis]
    return GeneratorSet.from_elements(group, elems)


def basis_vectors(group: Group) -> list:
    """The coordinate basis of the Lie algebra."""
    return [AlgebraVector(group, tuple(float(c) for c in np.eye(group.dim)[a])) for a in range(group.dim)]
