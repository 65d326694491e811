"""The flat-torus example: one flow step for a sampled square-complement ``X``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import AdjacencySpec, flow_step
from .generators import lattice_sample
from .groups import get_group
from .metrics import BaseMetricSpec, MetricField, metric_matrix
from .window import WindowSpec, sample_window


@dataclass(frozen=True, eq=False)
class TorusDemo:
    base: MetricField
    step: MetricField
    chebyshev: MetricField
    n_generators: int
    radius: float

    def local_pairs(self):
        """Core pairs ``i < j`` within chart distance ``radius``."""
        P = self.base.grid.points
        g = self.base.group
        d = np.linalg.norm(g.chart_delta(P[:, None, :], P[None, :, :]), axis=-1)
        i, j = np.nonzero(np.triu((d <= self.radius + 1e-12) & (d > 0), 1))
        return i, j

    @property
    def strict_decrease(self) -> float:
        """Largest ``d - d^1`` over all pairs."""
        return float(np.max(self.base.values - self.step.values))

    @property
    def local_relative_error(self) -> float:
        i, j = self.local_pairs()
        ref = self.chebyshev.values[i, j]
        return float(np.max(np.abs(self.step.values[i, j] - ref) / ref))


def chebyshev_metric(grid) -> MetricField:
    P = grid.points
    d = np.abs(grid.group.chart_delta(P[:, None, :], P[None, :, :])).max(axis=-1)
    return MetricField(grid, d, "chebyshev")


def flat_torus_demo(resolution: int = 32, mesh: float = 1 / 64, hole=((0.25, 0.75), (0.25, 0.75)),
                    stencil_radius: int = 2, radius: float = 0.1, threads: int = 1) -> TorusDemo:
    """``d^1`` for the flat metric on ``T^2`` and ``X`` = lattice points outside the hole."""
    T2 = get_group("T2")
    X = lattice_sample(T2, mesh, exclude_box=hole)
    spec = WindowSpec(T2, ((0.0, 1.0), (0.0, 1.0)), resolution, 0.0)
    grid = sample_window(spec)
    base = BaseMetricSpec("chart_quotient", T2)
    d0 = metric_matrix(grid, base)
    d1 = flow_step(base, X, AdjacencySpec(stencil_radius), grid, threads=threads)
    return TorusDemo(d0, d1, chebyshev_metric(grid), len(X), radius)
