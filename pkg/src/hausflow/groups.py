"""Concrete Lie group models in a global chart.

Three families are provided: the additive group ``R^n``, the torus ``T^n``
(represented by ``[0, 1)^n``) and the Heisenberg group ``H3`` in the
coordinates ``(x, y, z)`` of the unipotent matrix

    [[1, x, z],
     [0, 1, y],
     [0, 0, 1]]

All group methods are vectorized over leading axes: they accept arrays of
shape ``(..., dim)`` and broadcast like numpy ufuncs.  ``GroupElement`` and
``AlgebraVector`` are thin immutable wrappers for single points.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import GroupMismatchError


class Group:
    """Base class; subclasses implement the vectorized kernels."""

    group_id: str
    dim: int
    #: per-axis flag, True where the chart axis wraps with period 1
    periodic: tuple
    abelian = True

    def identity(self) -> np.ndarray:
        return np.zeros(self.dim)

    def reduce(self, g):
        return np.asarray(g, dtype=float)

    def mul(self, g, h):
        raise NotImplementedError

    def inv(self, g):
        raise NotImplementedError

    def exp(self, v, t=1.0):
        raise NotImplementedError

    def bracket(self, v, w):
        v, w = np.broadcast_arrays(np.asarray(v, float), np.asarray(w, float))
        return np.zeros_like(v)

    def chart_delta(self, g, h):
        """Per-axis chart difference ``h - g`` (torus axes wrapped to [-1/2, 1/2))."""
        d = np.asarray(h, float) - np.asarray(g, float)
        if any(self.periodic):
            per = np.asarray(self.periodic)
            wrapped = d - np.floor(d + 0.5)
            d = np.where(per, wrapped, d)
        return d

    def exp_injectivity_radius(self):
        """Chart-norm radius of a ball on which ``exp`` is injective (inf if global)."""
        return np.inf

    def element(self, coords) -> "GroupElement":
        return GroupElement(self, tuple(float(c) for c in self.reduce(coords)))

    def algebra_vector(self, components) -> "AlgebraVector":
        comps = tuple(float(c) for c in np.ravel(components))
        if len(comps) != self.dim:
            raise ValueError(f"{self.group_id}: expected {self.dim} components, got {len(comps)}")
        return AlgebraVector(self, comps)

    def __eq__(self, other):
        return isinstance(other, Group) and other.group_id == self.group_id

    def __hash__(self):
        return hash(self.group_id)

    def __repr__(self):
        return f"{type(self).__name__}({self.group_id!r})"


class RealGroup(Group):
    def __init__(self, n: int = 1):
        if n < 1:
            raise ValueError("dimension must be positive")
        self.dim = n
        self.group_id = f"R{n}"
        self.periodic = (False,) * n

    def mul(self, g, h):
        return np.asarray(g, float) + np.asarray(h, float)

    def inv(self, g):
        return -np.asarray(g, float)

    def exp(self, v, t=1.0):
        return _scale(v, t)


def _scale(v, t):
    v = np.asarray(v, float)
    t = np.asarray(t, float)
    return t[..., None] * v if t.ndim else float(t) * v


def _wrap_unit(x):
    r = np.mod(x, 1.0)
    # np.mod(-1e-18, 1.0) == 1.0 in floating point
    return np.where(r >= 1.0, 0.0, r)


class TorusGroup(Group):
    def __init__(self, n: int = 1):
        if n < 1:
            raise ValueError("dimension must be positive")
        self.dim = n
        self.group_id = f"T{n}"
        self.periodic = (True,) * n

    def reduce(self, g):
        return _wrap_unit(np.asarray(g, float))

    def mul(self, g, h):
        return _wrap_unit(np.asarray(g, float) + np.asarray(h, float))

    def inv(self, g):
        return _wrap_unit(-np.asarray(g, float))

    def exp(self, v, t=1.0):
        return _wrap_unit(_scale(v, t))

    def exp_injectivity_radius(self):
        return 0.5


class HeisenbergGroup(Group):
    """Polarized coordinates of the 3x3 upper unipotent matrix group.

    Lie algebra basis: X = E12, Y = E23, Z = E13 with [X, Y] = Z.
    """

    abelian = False

    def __init__(self):
        self.dim = 3
        self.group_id = "H3"
        self.periodic = (False, False, False)

    def mul(self, g, h):
        g = np.asarray(g, float)
        h = np.asarray(h, float)
        g, h = np.broadcast_arrays(g, h)
        out = g + h
        out[..., 2] += g[..., 0] * h[..., 1]
        return out

    def inv(self, g):
        g = np.asarray(g, float)
        out = -g
        out[..., 2] = g[..., 0] * g[..., 1] - g[..., 2]
        return out

    def exp(self, v, t=1.0):
        tv = _scale(v, t)
        out = tv.copy()
        # A^2 has the single entry ab at (1, 3); A^3 = 0
        out[..., 2] += 0.5 * tv[..., 0] * tv[..., 1]
        return out

    def log(self, g):
        g = np.asarray(g, float)
        out = np.array(g, dtype=float, copy=True)
        out[..., 2] -= 0.5 * g[..., 0] * g[..., 1]
        return out

    def bracket(self, v, w):
        v, w = np.broadcast_arrays(np.asarray(v, float), np.asarray(w, float))
        out = np.zeros_like(v)
        out[..., 2] = v[..., 0] * w[..., 1] - v[..., 1] * w[..., 0]
        return out


_GROUP_RE = re.compile(r"^([RT])(\d+)$")


@lru_cache(maxsize=None)
def get_group(group_id: str) -> Group:
    """Return the group model named ``R<n>``, ``T<n>`` or ``H3``."""
    if group_id == "H3":
        return HeisenbergGroup()
    m = _GROUP_RE.match(group_id)
    if not m:
        raise ValueError(f"unknown group {group_id!r}; expected R<n>, T<n> or H3")
    n = int(m.group(2))
    return RealGroup(n) if m.group(1) == "R" else TorusGroup(n)


@dataclass(frozen=True)
class GroupElement:
    group: Group
    coords: tuple

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def inverse(self) -> "GroupElement":
        return inv(self)


@dataclass(frozen=True)
class AlgebraVector:
    group: Group
    components: tuple

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.components, dtype=float)

    def __neg__(self):
        return AlgebraVector(self.group, tuple(-c for c in self.components))

    def scaled(self, lam: float) -> "AlgebraVector":
        return AlgebraVector(self.group, tuple(lam * c for c in self.components))


def _check_same(a, b):
    if a.group != b.group:
        raise GroupMismatchError(f"cannot combine {a.group.group_id} with {b.group.group_id}")


def mul(g: GroupElement, h: GroupElement) -> GroupElement:
    _check_same(g, h)
    return g.group.element(g.group.mul(g.array, h.array))


def inv(g: GroupElement) -> GroupElement:
    return g.group.element(g.group.inv(g.array))


def identity(group: Group) -> GroupElement:
    return group.element(group.identity())


def exp_map(v: AlgebraVector, t: float = 1.0) -> GroupElement:
    return v.group.element(v.group.exp(v.array, t))


def bracket(v: AlgebraVector, w: AlgebraVector) -> AlgebraVector:
    _check_same(v, w)
    return AlgebraVector(v.group, tuple(float(c) for c in v.group.bracket(v.array, w.array)))
