"""scikit-learn style wrappers.

``InducedHausdorffFlow.fit(X)`` takes the generator set as its data and runs
the flow; ``transform(P)`` returns limit distances among the rows of ``P``.
``FinslerNormEstimator.fit(S)`` takes an optional sigma sample and
``predict(V)`` returns one norm estimate per direction row of ``V``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .finsler import default_sigma_sample, default_t_schedule, finsler_estimate
from .flow import AdjacencySpec, run_flow
from .generators import GeneratorSet
from .groups import AlgebraVector, get_group
from .metrics import BaseMetricSpec
from .window import WindowSpec, required_padding, sample_window


def check_points(P, group) -> np.ndarray:
    """2-D float array with one chart point per row."""
    arr = check_array(P, dtype=float, ensure_2d=False, ensure_all_finite=True)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if group.dim == 1 else arr.reshape(1, -1)
    if arr.shape[1] != group.dim:
        raise ValueError(f"expected {group.dim} coordinates per row, got {arr.shape[1]}")
    return arr


def check_directions(V, group) -> np.ndarray:
    arr = check_points(V, group)
    if np.any(np.all(arr == 0, axis=1)):
        raise ValueError("directions must be nonzero")
    return arr


class InducedHausdorffFlow(TransformerMixin, BaseEstimator):
    def __init__(self, group="R1", base_metric="arctan_pullback", base_params=None,
                 bounds=((-2.0, 2.0),), resolution=201, padding_radius="auto",
                 stencil_radius=2, tol=1e-4, max_iter=100, divergence_factor=10.0,
                 patience=3, threads=1):
        self.group = group
        self.base_metric = base_metric
        self.base_params = base_params
        self.bounds = bounds
        self.resolution = resolution
        self.padding_radius = padding_radius
        self.stencil_radius = stencil_radius
        self.tol = tol
        self.max_iter = max_iter
        self.divergence_factor = divergence_factor
        self.patience = patience
        self.threads = threads

    def fit(self, X, y=None):
        grp = get_group(self.group)
        gens = GeneratorSet.from_elements(grp, check_points(X, grp))
        pad = self.padding_radius
        if pad == "auto":
            pad = required_padding(grp, self.bounds, gens.elements)
        self.window_ = WindowSpec(grp, tuple(self.bounds), self.resolution, pad)
        self.base_ = BaseMetricSpec(self.base_metric, grp, dict(self.base_params or {}))
        self.generators_ = gens
        self.state_ = run_flow(
            self.base_, gens, self.window_, AdjacencySpec(self.stencil_radius), tol=self.tol,
            max_iter=self.max_iter, divergence_factor=self.divergence_factor,
            patience=self.patience, retain="ends", threads=self.threads,
        )
        self.limit_ = self.state_.limit
        self.verdict_ = self.state_.verdict.kind
        self.n_iter_ = self.state_.verdict.iterations
        return self

    def transform(self, X):
        """Pairwise limit distances among the rows of ``X`` (interpolated)."""
        check_is_fitted(self, "limit_")
        P = check_points(X, self.window_.group)
        return self.limit_.pairwise(P[:, None, :], P[None, :, :])


class FinslerNormEstimator(BaseEstimator):
    def __init__(self, group="R1", base_metric="arctan_pullback", base_params=None,
                 base_point=None, bounds=((-2.0, 2.0),), resolution=201,
                 schedule_length=14, schedule_scale=None, both_signs=False):
        self.group = group
        self.base_metric = base_metric
        self.base_params = base_params
        self.base_point = base_point
        self.bounds = bounds
        self.resolution = resolution
        self.schedule_length = schedule_length
        self.schedule_scale = schedule_scale
        self.both_signs = both_signs

    def fit(self, X=None, y=None):
        """``X`` is the sigma sample; by default the window grid."""
        grp = get_group(self.group)
        self.base_ = BaseMetricSpec(self.base_metric, grp, dict(self.base_params or {}))
        spec = WindowSpec(grp, tuple(self.bounds), self.resolution, 0.0)
        self.sigma_sample_ = (default_sigma_sample(sample_window(spec)) if X is None
                              else check_points(X, grp))
        scale = self.schedule_scale or spec.scale
        self.t_schedule_ = default_t_schedule(scale, self.schedule_length)
        bp = grp.identity() if self.base_point is None else np.asarray(self.base_point, float)
        self.base_point_ = grp.element(bp)
        return self

    def estimates(self, V) -> list:
        check_is_fitted(self, "sigma_sample_")
        grp = self.base_.group
        return [
            finsler_estimate(self.base_point_, AlgebraVector(grp, tuple(v)), self.base_,
                             self.t_schedule_, self.sigma_sample_, self.both_signs)
            for v in check_directions(V, grp)
        ]

    def predict(self, X):
        """Norm estimate per direction row; ``inf`` where the quotients diverge."""
        return np.array([e.value for e in self.estimates(X)])
