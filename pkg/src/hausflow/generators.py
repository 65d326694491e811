"""Finite generator sets ``X`` containing the identity."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import IsotropyError
from .groups import Group, GroupElement, get_group

DEDUP_TOL = 1e-9


def point_keys(group: Group, pts, tol: float = DEDUP_TOL) -> np.ndarray:
    """Integer keys of chart points rounded to ``tol`` (torus axes wrapped).

    Two points share a key iff they agree coordinatewise at the tolerance,
    up to the usual rounding-boundary caveat.
    """
    pts = group.reduce(np.asarray(pts, float))
    k = np.rint(pts / tol).astype(np.int64)
    per = np.asarray(group.periodic)
    if per.any():
        period = int(round(1.0 / tol))
        k = np.where(per, np.mod(k, period), k)
    return k


def unique_rows(keys: np.ndarray) -> np.ndarray:
    """Indices of the first occurrence of each distinct key row, in input order."""
    _, first = np.unique(keys, axis=0, return_index=True)
    return np.sort(first)


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """Finite ``X`` with the identity stored first.

    ``certified`` is set only by :meth:`certify`, after the isotropy check
    passes; induced metrics refuse uncertified sets.
    """

    group: Group
    elements: np.ndarray = field(repr=False)
    certified: bool = False

    @classmethod
    def from_elements(cls, group, elements, tol: float = DEDUP_TOL, certify: bool = True):
        if isinstance(group, str):
            group = get_group(group)
        pts = np.asarray(
            [e.coords if isinstance(e, GroupElement) else np.ravel(e) for e in elements], float
        ).reshape(-1, group.dim)
        pts = group.reduce(pts)
        keys = point_keys(group, pts, tol)
        e_key = point_keys(group, group.identity()[None, :], tol)[0]
        is_e = np.all(keys == e_key, axis=1)
        if is_e.sum() != 1:
            raise ValueError(f"X must contain the identity exactly once (found {int(is_e.sum())})")
        if len(unique_rows(keys)) != len(keys):
            raise ValueError("X contains duplicate elements")
        order = np.concatenate([np.flatnonzero(is_e), np.flatnonzero(~is_e)])
        pts = pts[order]
        pts[0] = group.identity()
        pts.setflags(write=False)
        gs = cls(group, pts)
        return gs.certify(tol) if certify else gs

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.as_elements())

    def as_elements(self) -> list:
        return [GroupElement(self.group, tuple(float(c) for c in x)) for x in self.elements]

    @property
    def reach_radius(self) -> float:
        """Largest chart displacement of an element from the identity."""
        d = self.group.chart_delta(self.group.identity(), self.elements)
        return float(np.max(np.linalg.norm(d, axis=-1)))

    def certify(self, tol: float = DEDUP_TOL) -> "GeneratorSet":
        if self.certified:
            return self
        if not check_isotropy_trivial(self, tol):
            raise IsotropyError("a non-identity element of X permutes X; H_X is not trivial")
        return replace(self, certified=True)

    def inverted(self) -> "GeneratorSet":
        inv = self.group.inv(self.elements)
        inv.setflags(write=False)
        return GeneratorSet(self.group, inv, self.certified)

    def to_list(self) -> list:
        return [[float(c) for c in x] for x in self.elements]


def check_isotropy_trivial(X: GeneratorSet, tol: float = DEDUP_TOL) -> bool:
    """True iff no non-identity ``g`` satisfies ``gX = X``.

    Since ``e`` is in ``X``, any such ``g`` is itself an element of ``X``, so
    only the finitely many candidates ``x_i`` need testing.
    """
    group = X.group
    base = point_keys(group, X.elements, tol)
    order = np.lexsort(base.T[::-1])
    base = base[order]
    for g in X.elements[1:]:
        moved = point_keys(group, group.mul(g, X.elements), tol)
        moved = moved[np.lexsort(moved.T[::-1])]
        if np.array_equal(moved, base):
            return False
    return True


def invert_generators(X: GeneratorSet) -> GeneratorSet:
    return X.inverted()


def lattice_sample(group, mesh: float, exclude_box=None, tol: float = DEDUP_TOL) -> GeneratorSet:
    """Mesh-``mesh`` lattice points of the unit torus outside an open box.

    A finite stand-in for a compact ``X`` with interior, such as the
    complement of a square.  ``exclude_box`` is one ``(lo, hi)`` per axis.
    """
    if isinstance(group, str):
        group = get_group(group)
    if not all(group.periodic):
        raise ValueError("lattice samples are defined on tori only")
    n = int(round(1.0 / mesh))
    if abs(n * mesh - 1.0) > 1e-9:
        raise ValueError("mesh must divide the unit period")
    axis = np.arange(n) / n
    pts = np.stack(np.meshgrid(*[axis] * group.dim, indexing="ij"), -1).reshape(-1, group.dim)
    if exclude_box is not None:
        lo = np.array([b[0] for b in exclude_box], float)
        hi = np.array([b[1] for b in exclude_box], float)
        inside = np.all((pts > lo + tol) & (pts < hi - tol), axis=1)
        pts = pts[~inside]
    return GeneratorSet.from_elements(group, pts, tol)
