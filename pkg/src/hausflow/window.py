"""Window sampling: structured grids over a chart window of a group.

Grid order is row-major (last axis fastest) over the *padded* window and is
part of the contract: every ``MetricField`` index refers to it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import WindowError
from .groups import Group, GroupElement, get_group

DEFAULT_MAX_POINTS = 20_000
_SNAP = 1e-9


@dataclass(frozen=True)
class WindowSpec:
    """Axis-aligned chart window.

    ``bounds`` is one ``(lo, hi)`` pair per axis, ``resolution`` the number of
    points per axis on the unpadded window, ``padding_radius`` the chart
    distance added on each side of non-periodic axes.
    """

    group: Group
    bounds: tuple
    resolution: tuple
    padding_radius: float = 0.0

    def __post_init__(self):
        dim = self.group.dim
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        res = self.resolution
        if isinstance(res, (int, np.integer)):
            res = (int(res),) * dim
        res = tuple(int(r) for r in res)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "padding_radius", float(self.padding_radius))
        if len(bounds) != dim or len(res) != dim:
            raise WindowError(f"{self.group.group_id} needs {dim} axes of bounds and resolution")
        if any(r < 2 for r in res):
            raise WindowError("resolution must be >= 2 on every axis")
        if self.padding_radius < 0:
            raise WindowError("padding_radius must be >= 0")
        for (lo, hi), per in zip(bounds, self.group.periodic):
            if per:
                if (lo, hi) != (0.0, 1.0):
                    raise WindowError("torus axes must span the full period [0, 1]")
            elif not hi > lo:
                raise WindowError(f"empty window axis [{lo}, {hi}]")
        if all(self.group.periodic) and self.padding_radius != 0:
            raise WindowError("torus windows wrap around; padding_radius must be 0")

    @property
    def steps(self) -> tuple:
        out = []
        for (lo, hi), r, per in zip(self.bounds, self.resolution, self.group.periodic):
            out.append((hi - lo) / r if per else (hi - lo) / (r - 1))
        return tuple(out)

    @property
    def scale(self) -> float:
        """Largest axis extent of the unpadded window."""
        return max(hi - lo for lo, hi in self.bounds)


@dataclass(eq=False, frozen=True)
class Grid:
    group: Group
    axes: tuple
    core_slices: tuple
    steps: tuple
    points: np.ndarray = field(repr=False)
    core_mask: np.ndarray = field(repr=False)
    spec: WindowSpec | None = None

    @property
    def shape(self) -> tuple:
        return tuple(len(a) for a in self.axes)

    @property
    def periodic(self) -> tuple:
        return self.group.periodic

    @property
    def dim(self) -> int:
        return self.group.dim

    def __len__(self):
        return len(self.points)

    @property
    def step(self) -> float:
        """Largest axis step; the discretization scale used in tolerances."""
        return max(self.steps)

    @property
    def core_indices(self) -> np.ndarray:
        return np.flatnonzero(self.core_mask)

    def elements(self) -> list:
        return [GroupElement(self.group, tuple(float(c) for c in p)) for p in self.points]

    def same_as(self, other: "Grid") -> bool:
        return (
            other is self
            or (
                other.group == self.group
                and other.shape == self.shape
                and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))
                and np.array_equal(self.core_mask, other.core_mask)
            )
        )

    # -- point location ---------------------------------------------------

    def _axis_coords(self, x, axis):
        ax = self.axes[axis]
        n = len(ax)
        u = (x - ax[0]) / self.steps[axis]
        if self.periodic[axis]:
            u = np.mod(u, n)
            valid = np.ones(u.shape, bool)
            i0 = np.floor(u).astype(np.int64)
            theta = u - i0
            near1 = theta > 1 - _SNAP
            i0 = np.where(near1, i0 + 1, i0) % n
            theta = np.where(near1 | (theta < _SNAP), 0.0, theta)
            i1 = (i0 + 1) % n
        else:
            valid = (u >= -_SNAP) & (u <= n - 1 + _SNAP)
            u = np.clip(u, 0, n - 1)
            i0 = np.minimum(np.floor(u).astype(np.int64), n - 2)
            theta = u - i0
            theta = np.where(theta < _SNAP, 0.0, np.where(theta > 1 - _SNAP, 1.0, theta))
            i1 = i0 + 1
        return i0, i1, theta, valid

    def locate(self, pts):
        """Multilinear interpolation stencil for chart points.

        Returns ``(corners, weights, valid)`` with ``corners`` and ``weights``
        of shape ``(..., 2**dim)`` and ``valid`` flagging points inside the
        padded window.
        """
        pts = np.asarray(pts, float)
        lead = pts.shape[:-1]
        i0s, i1s, ths = [], [], []
        valid = np.ones(lead, bool)
        for a in range(self.dim):
            i0, i1, th, ok = self._axis_coords(pts[..., a], a)
            i0s.append(i0)
            i1s.append(i1)
            ths.append(th)
            valid &= ok
        corners = []
        weights = []
        for bits in itertools.product((0, 1), repeat=self.dim):
            idx = [i1s[a] if b else i0s[a] for a, b in enumerate(bits)]
            w = np.ones(lead)
            for a, b in enumerate(bits):
                w = w * (ths[a] if b else 1.0 - ths[a])
            corners.append(np.ravel_multi_index(idx, self.shape))
            weights.append(w)
        return np.stack(corners, -1), np.stack(weights, -1), valid

    def nearest_index(self, pts):
        """Flat index of the nearest grid node and an in-window flag."""
        pts = np.asarray(pts, float)
        idx = []
        valid = np.ones(pts.shape[:-1], bool)
        for a in range(self.dim):
            n = len(self.axes[a])
            u = (pts[..., a] - self.axes[a][0]) / self.steps[a]
            k = np.rint(u).astype(np.int64)
            if self.periodic[a]:
                k = k % n
            else:
                valid &= (k >= 0) & (k <= n - 1) & (u >= -0.5 - _SNAP) & (u <= n - 0.5 + _SNAP)
                k = np.clip(k, 0, n - 1)
            idx.append(k)
        return np.ravel_multi_index(idx, self.shape), valid

    def contains(self, pts) -> np.ndarray:
        return self.locate(pts)[2]

    # -- adjacency ----------------------------------------------------------

    def neighbor_pairs(self, stencil_radius: int):
        """Undirected edges ``(i, j)``, ``i < j``, within Chebyshev index radius."""
        if stencil_radius < 1:
            raise ValueError("stencil_radius must be >= 1")
        shape = self.shape
        multi = np.indices(shape).reshape(self.dim, -1)
        src, dst = [], []
        r = stencil_radius
        for off in itertools.product(range(-r, r + 1), repeat=self.dim):
            if off <= (0,) * self.dim:
                continue
            tgt = multi + np.asarray(off)[:, None]
            ok = np.ones(multi.shape[1], bool)
            for a, n in enumerate(shape):
                if self.periodic[a]:
                    tgt[a] %= n
                else:
                    ok &= (tgt[a] >= 0) & (tgt[a] < n)
            i = np.flatnonzero(ok)
            j = np.ravel_multi_index(tgt[:, ok], shape)
            src.append(i)
            dst.append(j)
        i = np.concatenate(src)
        j = np.concatenate(dst)
        keep = i != j
        lo = np.minimum(i[keep], j[keep])
        hi = np.maximum(i[keep], j[keep])
        pairs = np.unique(np.stack([lo, hi], 1), axis=0)
        return pairs[:, 0], pairs[:, 1]


def sample_window(spec: WindowSpec, max_points: int = DEFAULT_MAX_POINTS) -> Grid:
    """Deterministic row-major grid over the padded window plus its core mask."""
    axes = []
    core = []
    for (lo, hi), r, per, h in zip(spec.bounds, spec.resolution, spec.group.periodic, spec.steps):
        if per:
            ax = lo + h * np.arange(r)
            axes.append(ax)
            core.append(slice(0, r))
            continue
        pad = math.ceil(spec.padding_radius / h - 1e-9) if spec.padding_radius > 0 else 0
        k = np.arange(-pad, r + pad)
        ax = lo + h * k
        # land the unpadded endpoints exactly
        ax[pad] = lo
        ax[pad + r - 1] = hi
        axes.append(ax)
        core.append(slice(pad, pad + r))
    shape = tuple(len(a) for a in axes)
    total = math.prod(shape)
    if total > max_points:
        raise WindowError(f"grid of {total} points exceeds the cap of {max_points}")
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    mask = np.zeros(shape, bool)
    mask[tuple(core)] = True
    return Grid(
        group=spec.group,
        axes=tuple(axes),
        core_slices=tuple(core),
        steps=spec.steps,
        points=points,
        core_mask=mask.ravel(),
        spec=spec,
    )


def window(group, bounds, resolution, padding_radius=0.0) -> WindowSpec:
    """Convenience constructor accepting a group id string."""
    if isinstance(group, str):
        group = get_group(group)
    return WindowSpec(group, tuple(bounds), resolution, padding_radius)


def required_padding(group, bounds, elements) -> float:
    """Smallest padding that keeps right translates of the window box inside.

    Evaluated at the box corners, which bounds the displacement for the
    groups modelled here (it is affine in the base point).
    """
    if all(group.periodic):
        return 0.0
    corners = np.asarray(list(itertools.product(*[(float(lo), float(hi)) for lo, hi in bounds])))
    moved = group.mul(corners[:, None, :], np.asarray(elements, float)[None, :, :])
    delta = np.abs(group.chart_delta(corners[:, None, :], moved))
    per = np.asarray(group.periodic)
    return float(np.max(np.where(per, 0.0, delta))) if delta.size else 0.0
