"""Empirical checks of the solvers' quantitative behavior.

Covers the variance bound of the variance-reduced estimator (exact via the
without-replacement identity: the mini-batch second moment equals the b=1
enumeration scaled by (n-b)/((n-1)b)), convergence-rate fitting on traces,
and the O(1/(S+2)^2) gap bound for the non-strongly-convex schedule.
Expectation-level claims are checked through medians over many seeds.

All functions are pure observers; none mutates solver state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ParameterError, WrongCaseError
from .objectives import Objective
from .schedules import minibatch_variance_factor
from .solvers import TraceRecord


@dataclass(frozen=True)
class VarianceBoundCheck:
    lhs: float
    rhs: float
    holds: bool
    slack: float


def check_variance_bound(obj: Objective, x, snapshot, b: int = 1,
                         tol: float = 1e-10) -> VarianceBoundCheck:
    """Exact estimator variance at (x, snapshot) against its smoothness bound.

    lhs is E ||vr_grad - full_grad(x)||^2 over the batch draw, computed by
    exhaustive enumeration at b=1 and scaled exactly for larger b; rhs is
    2 L rho(b) [f(snapshot) - f(x) + <full_grad(x), x - snapshot>].
    """
    if not obj.loss.smooth:
        raise WrongCaseError("the variance bound applies to smooth losses only")
    x = np.asarray(x, dtype=np.float64)
    snapshot = np.asarray(snapshot, dtype=np.float64)
    labels = obj.dataset.labels
    sx = obj.loss.deriv(obj.margins(x), labels)
    st = obj.loss.deriv(obj.margins(snapshot), labels)
    grad_x = obj.full_grad(x)
    grad_t = obj.full_grad(snapshot)
    vbar = grad_x - grad_t
    ds = sx - st
    # (1/n) sum_i ||d_i a_i - vbar||^2 expanded through row norms and dots
    row_dots = obj.margins(vbar)
    base = float(
        np.mean(ds * ds * obj.dataset.row_sq_norms - 2.0 * ds * row_dots)
        + np.dot(vbar, vbar)
    )
    rho = minibatch_variance_factor(obj.n, b)
    lhs = rho * base
    gap_term = obj.f_value(snapshot) - obj.f_value(x) + float(np.dot(grad_x, x - snapshot))
    rhs = 2.0 * obj.L * rho * gap_term
    slack = rhs + tol - lhs
    return VarianceBoundCheck(lhs=lhs, rhs=rhs, holds=slack >= 0.0, slack=rhs - lhs)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    regime: str
    n_points: int
    saturated: bool = False


def _usable_points(trace: Sequence[TraceRecord], burn_in: int):
    pts = []
    saturated = False
    for rec in trace:
        if rec.epoch < burn_in:
            continue
        if rec.gap is None:
            raise ParameterError("trace records need gaps; attach a reference minimum first")
        if rec.gap <= 0.0:
            saturated = True
            continue
        pts.append((rec.epoch, rec.gap))
    return pts, saturated


def _fit_line(xs: np.ndarray, ys: np.ndarray):
    A = np.column_stack([xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return float(coef[0]), float(coef[1]), r2


def _fit_rate(trace, burn_in, regime):
    pts, saturated = _usable_points(trace, burn_in)
    if len(pts) < 5:
        if saturated:
            # gap hit the measurement floor; decay was faster than fittable
            return RateFit(-math.inf, math.nan, 1.0, regime, len(pts), True)
        raise ParameterError("need at least 5 positive-gap records after burn-in")
    epochs = np.array([p[0] for p in pts], dtype=np.float64)
    gaps = np.log(np.array([p[1] for p in pts]))
    xs = epochs if regime == "linear" else np.log(epochs + 2.0)
    slope, intercept, r2 = _fit_line(xs, gaps)
    return RateFit(slope, intercept, r2, regime, len(pts), saturated)


def fit_linear_rate(trace: Sequence[TraceRecord], burn_in: int = 2) -> RateFit:
    """Least-squares fit of log(gap) against the epoch index; exp(slope) is
    the estimated per-epoch contraction factor."""
    return _fit_rate(trace, burn_in, "linear")


def fit_poly_rate(trace: Sequence[TraceRecord], burn_in: int = 2) -> RateFit:
    """Least-squares fit of log(gap) against log(epoch + 2); a slope near -2
    indicates inverse-quadratic decay in the epoch count."""
    return _fit_rate(trace, burn_in, "polynomial")


def nsc_gap_bound(epoch: int, theta1: float, eta: float, m1: int,
                  gap0: float, dist0_sq: float) -> float:
    """The O(1/(S+2)^2) objective-gap bound for the non-strongly-convex
    schedule started at theta1, after `epoch` epochs."""
    if not 0.0 < theta1 <= 1.0:
        raise ParameterError("theta1 must be in (0, 1]")
    if eta <= 0 or m1 < 1:
        raise ParameterError("need eta > 0 and m1 >= 1")
    s2 = (epoch + 2.0) ** 2
    return (4.0 * (1.0 - theta1) / (theta1 * theta1 * s2)) * gap0 + (
        2.0 / eta
    ) / (m1 * s2) * dist0_sq


@dataclass(frozen=True)
class NscBoundCheck:
    epochs: tuple[int, ...]
    gaps: tuple[float, ...]
    bounds: tuple[float, ...]
    satisfied: bool


def check_nsc_bound(trace: Sequence[TraceRecord], theta1: float, eta: float,
                    m1: int, gap0: float, dist0_sq: float) -> NscBoundCheck:
    """Compare measured gaps (epochs >= 1) against the schedule's gap bound.

    Pass a median trace over many seeds when checking the expectation-level
    claim; single trajectories are noisy.
    """
    epochs, gaps, bounds = [], [], []
    for rec in trace:
        if rec.epoch < 1:
            continue
        if rec.gap is None:
            raise ParameterError("trace records need gaps; attach a reference minimum first")
        epochs.append(rec.epoch)
        gaps.append(rec.gap)
        bounds.append(nsc_gap_bound(rec.epoch, theta1, eta, m1, gap0, dist0_sq))
    ok = all(g <= b for g, b in zip(gaps, bounds))
    return NscBoundCheck(tuple(epochs), tuple(gaps), tuple(bounds), ok)


def attach_gaps(trace: Sequence[TraceRecord], reference_minimum: float) -> list[TraceRecord]:
    """Return a copy of the trace with gap = objective - reference_minimum."""
    return [replace(rec, gap=rec.objective - reference_minimum) for rec in trace]


def median_trace(traces: Sequence[Sequence[TraceRecord]]) -> list[TraceRecord]:
    """Epoch-aligned medians of objective (and gap, when present) across seeds."""
    if not traces:
        raise ParameterError("need at least one trace")
    lengths = {len(t) for t in traces}
    if len(lengths) != 1:
        raise ParameterError("traces must have equal length to take medians")
    out = []
    for recs in zip(*traces):
        epochs = {r.epoch for r in recs}
        if len(epochs) != 1:
            raise ParameterError("traces are not epoch-aligned")
        gaps = [r.gap for r in recs]
        gap = None if any(g is None for g in gaps) else float(np.median(gaps))
        out.append(
            TraceRecord(
                epoch=recs[0].epoch,
                effective_passes=float(np.median([r.effective_passes for r in recs])),
                wall_time_s=float(np.median([r.wall_time_s for r in recs])),
                objective=float(np.median([r.objective for r in recs])),
                gap=gap,
            )
        )
    return out
