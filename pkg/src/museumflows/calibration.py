"""Goodness of fit and distance-decay calibration.

Model and observed matrices are compared as row-major, label-aligned flat
vectors. Calibration is an exhaustive sweep over a beta grid; the correlation
coefficient is the objective, the root-mean-square error is reported
alongside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegenerateVarianceError,
    InvalidParameterError,
    ShapeError,
)
from .sim import (
    Deterrence,
    FlowMatrix,
    ModelSpec,
    attractiveness_weights,
    demand_weights,
    deterrence_matrix,
    distance_matrix,
    doubly_constrained_flows,
    model_matrix,
)


@dataclass(frozen=True)
class FitMetrics:
    """Correlation and error between two flattened matrices."""

    pearson_r: float
    rms: float


@dataclass(frozen=True)
class BetaGrid:
    """Ascending evenly spaced beta values for the sweep."""

    start: float = 0.01
    step: float = 0.01
    count: int = 200

    def __post_init__(self):
        if not (math.isfinite(self.start) and self.start >= 0):
            raise InvalidParameterError(f"grid start {self.start} must be >= 0")
        if not (math.isfinite(self.step) and self.step > 0):
            raise InvalidParameterError(f"grid step {self.step} must be > 0")
        if self.count < 1:
            raise InvalidParameterError(f"grid count {self.count} must be >= 1")

    def betas(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)


@dataclass(frozen=True)
class SweepResult:
    """One calibration curve: fit at every grid point plus its optimum.

    r is NaN at grid points where the model matrix had no variance; those
    points never win the argmax.
    """

    betas: tuple[float, ...]
    r_values: tuple[float, ...]
    rms_values: tuple[float, ...]
    best_beta: float
    best_r: float
    best_rms: float
    spec: ModelSpec


def spec_name(spec: ModelSpec) -> str:
    """Short label for the weighting combination of a model spec."""
    if spec.use_attractiveness and spec.use_demand:
        return "attract-demand"
    if spec.use_attractiveness:
        return "attract"
    if spec.use_demand:
        return "demand"
    return "baseline"


def pearson_r(x, y) -> float:
    """Sample correlation of two equal-length vectors."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ShapeError(f"correlation needs at least 2 values, got {x.size}")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = math.sqrt(float(xd @ xd))
    sy = math.sqrt(float(yd @ yd))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateVarianceError("correlation undefined for a constant vector")
    # clamp floating drift so the result stays in [-1, 1]
    return max(-1.0, min(1.0, float(xd @ yd) / (sx * sy)))


def rms_error(x, y) -> float:
    """Root mean squared difference of two equal-length vectors."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"length mismatch: {x.size} vs {y.size}")
    if x.size == 0:
        raise ShapeError("rms needs at least 1 value")
    d = x - y
    return math.sqrt(float(d @ d) / d.size)


def fit_at_beta(zones, museums, observed: FlowMatrix, spec: ModelSpec, beta: float) -> FitMetrics:
    """Fit of the model at one beta against the observed matrix."""
    spec = replace(spec, deterrence=Deterrence(spec.deterrence.kind, beta))
    model = model_matrix(zones, museums, spec, observed)
    obs = observed.reindex(model.origin_ids, model.destination_ids)
    return FitMetrics(
        pearson_r=pearson_r(model.flat(), obs.flat()),
        rms=rms_error(model.flat(), obs.flat()),
    )


class _SweepContext:
    """Everything beta-independent, computed once per sweep."""

    def __init__(self, zones, museums, observed: FlowMatrix, spec: ModelSpec):
        self.spec = spec
        self.kind = spec.deterrence.kind
        self.dmat = distance_matrix(zones, museums)
        obs = observed.reindex([z.id for z in zones], [m.id for m in museums])
        self.obs_flat = obs.flat()
        self.w = (
            attractiveness_weights(museums, spec.attractiveness)
            if spec.use_attractiveness
            else np.ones(len(museums))
        )
        if spec.constraint == "unconstrained":
            pop = np.array([z.population for z in zones])
            inc = demand_weights(zones) if spec.use_demand else np.ones(len(zones))
            self.production = inc * pop
        else:
            self.O = obs.row_sums()
            self.D = obs.col_sums()

    def model_values(self, beta: float) -> np.ndarray:
        det = Deterrence(self.kind, beta)
        f = deterrence_matrix(self.dmat, det)
        if self.spec.constraint == "unconstrained":
            return self.production[:, None] * self.w[None, :] * f
        if self.spec.constraint == "origin":
            scores = self.w[None, :] * f
            denom = scores.sum(axis=1)
            share = np.divide(
                scores, denom[:, None], out=np.zeros_like(scores), where=denom[:, None] > 0
            )
            return self.O[:, None] * share
        return doubly_constrained_flows(self.O, self.D, self.dmat, det).values


def sweep_beta(zones, museums, observed: FlowMatrix, spec: ModelSpec, grid=None) -> SweepResult:
    """Evaluate the fit at every grid point and pick the best correlation.

    ``grid`` is a BetaGrid or an explicit sequence of beta values. Grid
    points where the model collapses to a constant matrix get r = NaN and
    are excluded from the argmax; ties go to the smallest beta, so the
    result does not depend on evaluation order.
    """
    if grid is None:
        grid = BetaGrid()
    betas = grid.betas() if isinstance(grid, BetaGrid) else np.asarray(grid, dtype=float)
    if betas.ndim != 1 or betas.size < 1:
        raise InvalidParameterError("beta grid must be a non-empty 1-D sequence")
    ctx = _SweepContext(zones, museums, observed, spec)
    r_values = np.empty(betas.size)
    rms_values = np.empty(betas.size)
    for k, beta in enumerate(betas):
        values = ctx.model_values(float(beta)).ravel()
        rms_values[k] = rms_error(values, ctx.obs_flat)
        try:
            r_values[k] = pearson_r(values, ctx.obs_flat)
        except DegenerateVarianceError:
            r_values[k] = math.nan
    finite = np.isfinite(r_values)
    if not np.any(finite):
        raise DegenerateVarianceError("model matrix constant at every grid point")
    best_r = float(np.max(r_values[finite]))
    candidates = np.nonzero(finite & (r_values == best_r))[0]
    best_idx = int(candidates[np.argmin(betas[candidates])])
    return SweepResult(
        betas=tuple(float(b) for b in betas),
        r_values=tuple(float(r) for r in r_values),
        rms_values=tuple(float(e) for e in rms_values),
        best_beta=float(betas[best_idx]),
        best_r=best_r,
        best_rms=float(rms_values[best_idx]),
        spec=ctx.spec,
    )


def compare_specifications(zones, museums, observed: FlowMatrix, grid=None, base: ModelSpec | None = None):
    """Sweep the three weighting variants in fixed order.

    Returns [plain, +attractiveness, +attractiveness+demand], all sharing
    the deterrence kind and constraint of ``base``.
    """
    if base is None:
        base = ModelSpec()
    variants = (
        replace(base, use_attractiveness=False, use_demand=False),
        replace(base, use_attractiveness=True, use_demand=False),
        replace(base, use_attractiveness=True, use_demand=True),
    )
    return [sweep_beta(zones, museums, observed, v, grid) for v in variants]
