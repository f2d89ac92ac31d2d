"""Epoch-structured stochastic solvers with variance reduction.

Every solver shares the same outer loop: once per epoch the full
(sub)gradient is computed at the snapshot point, then m_s seeded stochastic
inner steps run, and a new snapshot is formed by (weighted) averaging of the
inner iterates. Effective-pass accounting charges 1 pass for the snapshot
gradient and b/n per inner step; per-example derivative scalars at the
snapshot are cached alongside the full gradient, so the estimator's
correction terms cost no extra gradient evaluations.

Randomness follows a fixed stream discipline: a counter-based Philox
generator keyed by (seed, epoch), so trajectories are reproducible and two
solvers given the same seed consume identical sampling streams.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _kernels
from .errors import (
    DivergenceError,
    ParameterError,
    UnsupportedCombinationError,
    WrongCaseError,
)
from .objectives import Objective
from .schedules import ThetaSchedule, epoch_sizes, minibatch_variance_factor

ALGORITHMS = (
    "fsvrg",
    "fsvrg_nonsmooth",
    "sgd",
    "svrg",
    "prox_svrg",
    "svrg_pp",
    "katyusha",
    "svrsg",
)

# (step-size denominator factor in units of L, default m1 as a function of n,
#  default growth)
_DEFAULTS = {
    "fsvrg": (3.0, lambda n: max(1, -(-n // 2)), 1.6),
    "fsvrg_nonsmooth": (None, lambda n: max(1, -(-n // 2)), 1.6),
    "sgd": (10.0, lambda n: n, 1.0),
    "svrg": (10.0, lambda n: 2 * n, 1.0),
    "prox_svrg": (10.0, lambda n: 2 * n, 1.0),
    "svrg_pp": (7.0, lambda n: max(1, -(-n // 4)), 2.0),
    "katyusha": (3.0, lambda n: 2 * n, 1.0),
    "svrsg": (None, lambda n: 2 * n, 1.0),
}

_SMOOTH_LOSS_ONLY = {"fsvrg", "svrg", "prox_svrg", "svrg_pp", "katyusha"}
_SUBGRAD_ONLY = {"fsvrg_nonsmooth", "svrsg"}
_PROJECTABLE = {"fsvrg_nonsmooth", "svrsg"}


@dataclass(frozen=True)
class SolverConfig:
    """Solver choice plus every knob of the shared epoch loop.

    `step_size`, `m1`, `growth`, `theta` and `sc_restart` default to
    per-algorithm values resolved against the objective (paper-protocol
    defaults: step 1/(3L), 1/(7L), 1/(10L) for the accelerated, doubling and
    plain variance-reduced solvers, epoch sizes n/2 x 1.6^s, n/4 x 2^s and
    a flat 2n respectively).
    """

    algorithm: str
    step_size: float | None = None
    m1: int | None = None
    growth: float | None = None
    epochs: int = 10
    batch_size: int = 1
    seed: int = 0
    theta: float | ThetaSchedule | None = None
    sc_restart: bool | None = None
    projection_radius: float | None = None
    weights: Any = "uniform"
    katyusha_theta1: float | None = None
    katyusha_theta2: float = 0.5


@dataclass
class IterateState:
    """Mutable per-run state: current/auxiliary iterates, the snapshot, the
    cached full (sub)gradient at it, and the running snapshot accumulator."""

    x: np.ndarray
    y: np.ndarray
    snapshot: np.ndarray
    full_grad_cache: np.ndarray | None = None
    running_sum: np.ndarray | None = None
    epoch: int = 0
    inner: int = 0
    z: np.ndarray | None = None


@dataclass(frozen=True)
class TraceRecord:
    """One measurement point: work done and objective value after an epoch."""

    epoch: int
    effective_passes: float
    wall_time_s: float
    objective: float
    gap: float | None = None


@dataclass(frozen=True)
class RunResult:
    x: np.ndarray
    trace: tuple[TraceRecord, ...]
    effective_passes: float
    wall_time_s: float
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class _Plan:
    algorithm: str
    eta: float
    m1: int
    growth: float
    batch_size: int
    theta: ThetaSchedule | None
    sc_restart: bool
    radius: float
    weights: Any
    kat_theta1: float
    kat_theta2: float
    stochastic_only: bool  # no snapshot gradient pass (plain SGD)


def _resolve_theta(obj: Objective, cfg: SolverConfig, eta: float) -> ThetaSchedule:
    if isinstance(cfg.theta, ThetaSchedule):
        return cfg.theta
    if cfg.theta is not None:
        return ThetaSchedule.constant(float(cfg.theta))
    if obj.mu > 0:
        return ThetaSchedule.constant(0.9)
    if obj.loss.smooth:
        rho_b = minibatch_variance_factor(obj.n, cfg.batch_size)
        return ThetaSchedule.nsc_from(obj.L, eta, rho_b)
    return ThetaSchedule.constant(0.9)


def _plan(obj: Objective, cfg: SolverConfig) -> _Plan:
    algo = cfg.algorithm
    if algo not in ALGORITHMS:
        raise ParameterError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")
    if cfg.epochs < 1:
        raise ParameterError("epochs must be >= 1")
    if not 1 <= cfg.batch_size <= obj.n:
        raise ParameterError(f"batch_size must be in [1, {obj.n}]")

    if algo in _SMOOTH_LOSS_ONLY and not obj.loss.smooth:
        raise WrongCaseError(
            f"{algo} needs smooth component losses; use fsvrg_nonsmooth/svrsg/sgd for hinge"
        )
    if algo in _SUBGRAD_ONLY:
        if obj.loss.smooth:
            raise WrongCaseError(f"{algo} is the non-smooth-loss variant; use fsvrg for smooth losses")
        if not obj.reg.smooth:
            raise UnsupportedCombinationError(
                "non-smooth losses with an l1 regularizer have no defined update rule"
            )
    if algo == "svrg" and not obj.reg.smooth:
        raise WrongCaseError("plain svrg needs a smooth regularizer; use prox_svrg")
    if cfg.projection_radius is not None and algo not in _PROJECTABLE:
        raise ParameterError("projection is only supported by the subgradient solvers")
    if cfg.projection_radius is not None and cfg.projection_radius <= 0:
        raise ParameterError("projection_radius must be > 0")

    factor, m1_fn, growth_default = _DEFAULTS[algo]
    eta = cfg.step_size
    if eta is None:
        if factor is not None and obj.L is not None:
            eta = 1.0 / (factor * obj.L)
        else:
            eta = 1.0
    if eta <= 0:
        raise ParameterError("step_size must be > 0")

    m1 = cfg.m1 if cfg.m1 is not None else m1_fn(obj.n)
    growth = cfg.growth if cfg.growth is not None else growth_default
    if m1 < 1:
        raise ParameterError("m1 must be >= 1")
    if growth < 1.0:
        raise ParameterError("growth must be >= 1")

    theta = None
    if algo in ("fsvrg", "fsvrg_nonsmooth"):
        theta = _resolve_theta(obj, cfg, eta)

    sc_restart = cfg.sc_restart
    if sc_restart is None:
        sc_restart = obj.mu > 0

    kat_t2 = cfg.katyusha_theta2
    kat_t1 = cfg.katyusha_theta1
    if algo == "katyusha":
        if not 0.0 <= kat_t2 <= 1.0:
            raise ParameterError("katyusha_theta2 must be in [0, 1]")
        if kat_t1 is None:
            kat_t1 = min(1.0 / (3.0 * eta * obj.L), 1.0 - kat_t2)
        if not 0.0 <= kat_t1 <= 1.0 or kat_t1 + kat_t2 > 1.0 + 1e-12:
            raise ParameterError("need katyusha_theta1, theta2 in [0,1] with sum <= 1")

    return _Plan(
        algorithm=algo,
        eta=float(eta),
        m1=int(m1),
        growth=float(growth),
        batch_size=int(cfg.batch_size),
        theta=theta,
        sc_restart=bool(sc_restart),
        radius=float(cfg.projection_radius or 0.0),
        weights=cfg.weights,
        kat_theta1=float(kat_t1 if kat_t1 is not None else 0.5),
        kat_theta2=float(kat_t2),
        stochastic_only=(algo == "sgd"),
    )


def _epoch_size(plan: _Plan, epoch: int) -> int:
    if plan.growth == 1.0:
        return plan.m1
    return epoch_sizes(plan.m1, plan.growth, epoch)[-1]


def _steps_before(plan: _Plan, epoch: int) -> int:
    if plan.growth == 1.0:
        return (epoch - 1) * plan.m1
    return sum(epoch_sizes(plan.m1, plan.growth, epoch - 1)) if epoch > 1 else 0


def _weights_for(plan: _Plan, m: int) -> np.ndarray:
    if isinstance(plan.weights, str):
        if plan.weights != "uniform":
            raise ParameterError(f"unknown weights option {plan.weights!r}")
        return np.ones(m)
    w = np.asarray(plan.weights, dtype=np.float64)
    if w.shape != (m,):
        raise ParameterError(
            f"weights must have one entry per inner step ({m}), got shape {w.shape}"
        )
    if np.any(w < 0) or w.sum() <= 0:
        raise ParameterError("weights must be nonnegative with positive sum")
    return w


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """Counter-based generator for one (run, epoch) stream."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(epoch)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_indices(rng, n: int, b: int, m: int) -> np.ndarray | None:
    """Per-step index draws: uniform with replacement for b=1, b distinct
    indices without replacement otherwise; b=n consumes no randomness."""
    if b == n:
        return None
    if b == 1:
        return rng.integers(0, n, size=(m, 1), dtype=np.int64)
    return np.stack([rng.choice(n, size=b, replace=False) for _ in range(m)]).astype(np.int64)


def init_state(obj: Objective, x0=None, with_z: bool = False) -> IterateState:
    if x0 is None:
        x0 = np.zeros(obj.dim)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if x0.shape != (obj.dim,):
        raise ParameterError(f"x0 must have shape ({obj.dim},)")
    return IterateState(
        x=x0.copy(),
        y=x0.copy(),
        snapshot=x0.copy(),
        z=x0.copy() if with_z else None,
    )


# ---------------------------------------------------------------------------
# stochastic estimators (reference implementations over the public API)


def vr_gradient(obj: Objective, state: IterateState, batch) -> np.ndarray:
    """(1/b) sum_{i in batch} [grad_i(x) - grad_i(snapshot)] + cached mean grad."""
    if not obj.loss.smooth:
        raise WrongCaseError("vr_gradient needs a smooth loss; use vr_subgradient")
    if state.full_grad_cache is None:
        raise ParameterError("state has no cached full gradient for this epoch")
    batch = np.atleast_1d(np.asarray(batch, dtype=np.int64))
    acc = np.zeros(obj.dim)
    for i in batch:
        acc += obj.component_grad(int(i), state.x)
        acc -= obj.component_grad(int(i), state.snapshot)
    return acc / batch.size + state.full_grad_cache


def vr_subgradient(obj: Objective, state: IterateState, batch) -> np.ndarray:
    """Mini-batch analogue of the variance-reduced subgradient estimator."""
    if obj.loss.smooth:
        raise WrongCaseError("vr_subgradient is for non-smooth losses; use vr_gradient")
    if state.full_grad_cache is None:
        raise ParameterError("state has no cached full subgradient for this epoch")
    batch = np.atleast_1d(np.asarray(batch, dtype=np.int64))
    acc = np.zeros(obj.dim)
    for i in batch:
        acc += obj.component_subgrad(int(i), state.x)
        acc -= obj.component_subgrad(int(i), state.snapshot)
    return acc / batch.size + state.full_grad_cache


# ---------------------------------------------------------------------------
# epoch functions


def _finish_check(status: int, step: int, epoch: int, eta: float, snapshot) -> None:
    if status != 0:
        raise DivergenceError(epoch, step, eta)
    if not np.all(np.isfinite(snapshot)):
        raise DivergenceError(epoch, -1, eta)


def fsvrg_smooth_epoch(obj: Objective, cfg: SolverConfig, state: IterateState, rng) -> IterateState:
    """One epoch of the momentum-accelerated solver for smooth losses.

    Explicit regularizer gradients when g is smooth, the prox step otherwise;
    snapshot restart of the auxiliary iterate in the strongly convex mode,
    carried auxiliary iterate otherwise.
    """
    plan = _plan(obj, cfg)
    s = state.epoch + 1
    m = _epoch_size(plan, s)
    theta = plan.theta.value(s, m)
    sc, mu_t = obj.snapshot_pass(state.snapshot)
    state.full_grad_cache = mu_t
    if plan.sc_restart:
        state.y = state.snapshot.copy()
    indptr, indices, data = obj.dataset.csr
    weights = _weights_for(plan, m)
    xbar = np.empty(obj.dim)
    g_smooth = obj.reg.smooth
    if plan.batch_size == obj.n:
        status, step = _kernels.fsvrg_epoch_fullbatch(
            indptr, indices, data, obj.dataset.labels, obj.loss.code, sc, mu_t,
            state.snapshot, state.y, m, plan.eta, obj.reg.lam1, obj.reg.lam2,
            g_smooth, theta, xbar,
        )
    else:
        idx = _sample_indices(rng, obj.n, plan.batch_size, m)
        status, step = _kernels.fsvrg_epoch(
            indptr, indices, data, obj.dataset.labels, obj.loss.code, sc, mu_t,
            state.snapshot, state.y, idx, plan.eta, obj.reg.lam1, obj.reg.lam2,
            g_smooth, theta, weights, xbar,
        )
    _finish_check(status, step, s, plan.eta, xbar)
    if theta == 1.0:
        state.x = state.y.copy()
    else:
        state.x = state.snapshot + theta * (state.y - state.snapshot)
    state.running_sum = xbar * weights.sum()
    state.snapshot = xbar
    state.epoch = s
    state.inner = m
    return state


def fsvrg_nonsmooth_epoch(obj: Objective, cfg: SolverConfig, state: IterateState, rng) -> IterateState:
    """One epoch of the momentum-accelerated subgradient solver (hinge loss),
    with optional projection onto an l2 ball and weighted snapshot averaging."""
    plan = _plan(obj, cfg)
    s = state.epoch + 1
    m = _epoch_size(plan, s)
    theta = plan.theta.value(s, m)
    sc, xi_t = obj.snapshot_pass(state.snapshot)
    state.full_grad_cache = xi_t
    if plan.sc_restart:
        state.y = state.snapshot.copy()
    indptr, indices, data = obj.dataset.csr
    weights = _weights_for(plan, m)
    xbar = np.empty(obj.dim)
    idx = _sample_indices(rng, obj.n, plan.batch_size, m)
    if idx is None:
        idx = np.tile(np.arange(obj.n, dtype=np.int64), (m, 1))
    status, step = _kernels.subgrad_momentum_epoch(
        indptr, indices, data, obj.dataset.labels, sc, xi_t, state.snapshot,
        state.y, idx, plan.eta, obj.reg.lam1, theta, plan.radius, weights, xbar,
    )
    _finish_check(status, step, s, plan.eta, xbar)
    if theta == 1.0:
        state.x = state.y.copy()
    else:
        state.x = state.snapshot + theta * (state.y - state.snapshot)
    state.running_sum = xbar * weights.sum()
    state.snapshot = xbar
    state.epoch = s
    state.inner = m
    return state


def svrg_epoch(obj: Objective, cfg: SolverConfig, state: IterateState, rng) -> IterateState:
    """One epoch of the plain variance-reduced chain (explicit smooth
    regularizer gradient); snapshot is the epoch average."""
    plan = _plan(obj, cfg)
    return _svrg_like_epoch(obj, plan, state, rng, use_prox=False)


def prox_svrg_epoch(obj: Objective, cfg: SolverConfig, state: IterateState, rng) -> IterateState:
    """Variance-reduced chain with the prox form of the composite step."""
    plan = _plan(obj, cfg)
    return _svrg_like_epoch(obj, plan, state, rng, use_prox=True)


def _svrg_like_epoch(obj, plan, state, rng, use_prox):
    s = state.epoch + 1
    m = _epoch_size(plan, s)
    sc, mu_t = obj.snapshot_pass(state.snapshot)
    state.full_grad_cache = mu_t
    indptr, indices, data = obj.dataset.csr
    xbar = np.empty(obj.dim)
    x = state.snapshot.copy()
    idx = _sample_indices(rng, obj.n, plan.batch_size, m)
    if idx is None:
        idx = np.tile(np.arange(obj.n, dtype=np.int64), (m, 1))
    status, step = _kernels.svrg_epoch(
        indptr, indices, data, obj.dataset.labels, obj.loss.code, sc, mu_t,
        state.snapshot, x, idx, plan.eta, obj.reg.lam1, obj.reg.lam2,
        use_prox, xbar,
    )
    _finish_check(status, step, s, plan.eta, xbar)
    state.x = x
    state.y = x
    state.running_sum = xbar * m
    state.snapshot = xbar
    state.epoch = s
    state.inner = m
    return state


def svrg_pp_epoch(obj: Objective, cfg: SolverConfig, state: IterateState, rng) -> IterateState:
    """One epoch of the standalone doubling-epoch solver: carried chain,
    first gradient of each epoch at the snapshot, plain-average snapshot."""
    plan = _plan(obj, cfg)
    s = state.epoch + 1
    m = _epoch_size(plan, s)
    sc, mu_t = obj.snapshot_pass(state.snapshot)
    state.full_grad_cache = mu_t
    indptr, indices, data = obj.dataset.csr
    xbar = np.empty(obj.dim)
    idx = _sample_indices(rng, obj.n, plan.batch_size, m)
    if idx is None:
        idx = np.tile(np.arange(obj.n, dtype=np.int64), (m, 1))
    status, step = _kernels.svrg_pp_epoch(
        indptr, indices, data, obj.dataset.labels, obj.loss.code, sc, mu_t,
        state.snapshot, state.y, idx, plan.eta, obj.reg.lam1, obj.reg.lam2,
        obj.reg.smooth, xbar,
    )
    _finish_check(status, step, s, plan.eta, xbar)
    state.x = state.y.copy()
    state.running_sum = xbar * m
    state.snapshot = xbar
    state.epoch = s
    state.inner = m
    return state


def katyusha_epoch(obj: Objective, cfg: SolverConfig, state: IterateState, rng) -> IterateState:
    """One epoch of the three-sequence accelerated solver."""
    plan = _plan(obj, cfg)
    s = state.epoch + 1
    m = _epoch_size(plan, s)
    sc, mu_t = obj.snapshot_pass(state.snapshot)
    state.full_grad_cache = mu_t
    if state.z is None:
        state.z = state.snapshot.copy()
    indptr, indices, data = obj.dataset.csr
    xbar = np.empty(obj.dim)
    x = np.empty(obj.dim)
    idx = _sample_indices(rng, obj.n, plan.batch_size, m)
    if idx is None:
        idx = np.tile(np.arange(obj.n, dtype=np.int64), (m, 1))
    status, step = _kernels.katyusha_epoch(
        indptr, indices, data, obj.dataset.labels, obj.loss.code, sc, mu_t,
        state.snapshot, state.y, state.z, x, idx, plan.eta, obj.L,
        plan.kat_theta1, plan.kat_theta2, obj.reg.lam1, obj.reg.lam2, xbar,
    )
    _finish_check(status, step, s, plan.eta, xbar)
    state.x = x
    state.running_sum = xbar * m
    state.snapshot = xbar
    state.epoch = s
    state.inner = m
    return state


def sgd_epoch(obj: Objective, cfg: SolverConfig, state: IterateState, rng) -> IterateState:
    """m_s plain stochastic (sub)gradient steps with epoch-wise 1/k step
    decay; the reported point is the current iterate."""
    plan = _plan(obj, cfg)
    s = state.epoch + 1
    m = _epoch_size(plan, s)
    offset = _steps_before(plan, s)
    indptr, indices, data = obj.dataset.csr
    idx = _sample_indices(rng, obj.n, plan.batch_size, m)
    if idx is None:
        idx = np.tile(np.arange(obj.n, dtype=np.int64), (m, 1))
    status, step = _kernels.sgd_pass(
        indptr, indices, data, obj.dataset.labels, obj.loss.code, state.x,
        idx, plan.eta, offset, obj.n, obj.reg.lam1, obj.reg.lam2,
    )
    _finish_check(status, step, s, plan.eta, state.x)
    state.y = state.x
    state.snapshot = state.x.copy()
    state.epoch = s
    state.inner = m
    return state


def svrsg_epoch(obj: Objective, cfg: SolverConfig, state: IterateState, rng) -> IterateState:
    """One epoch of the variance-reduced subgradient chain (no momentum):
    projected steps from the snapshot, weighted-average snapshot."""
    plan = _plan(obj, cfg)
    s = state.epoch + 1
    m = _epoch_size(plan, s)
    sc, xi_t = obj.snapshot_pass(state.snapshot)
    state.full_grad_cache = xi_t
    indptr, indices, data = obj.dataset.csr
    weights = _weights_for(plan, m)
    xbar = np.empty(obj.dim)
    x = state.snapshot.copy()
    idx = _sample_indices(rng, obj.n, plan.batch_size, m)
    if idx is None:
        idx = np.tile(np.arange(obj.n, dtype=np.int64), (m, 1))
    status, step = _kernels.subgrad_vr_epoch(
        indptr, indices, data, obj.dataset.labels, sc, xi_t, state.snapshot,
        x, idx, plan.eta, obj.reg.lam1, plan.radius, weights, xbar,
    )
    _finish_check(status, step, s, plan.eta, xbar)
    state.x = x
    state.y = x
    state.running_sum = xbar * weights.sum()
    state.snapshot = xbar
    state.epoch = s
    state.inner = m
    return state


_EPOCH_FNS = {
    "fsvrg": fsvrg_smooth_epoch,
    "fsvrg_nonsmooth": fsvrg_nonsmooth_epoch,
    "sgd": sgd_epoch,
    "svrg": svrg_epoch,
    "prox_svrg": prox_svrg_epoch,
    "svrg_pp": svrg_pp_epoch,
    "katyusha": katyusha_epoch,
    "svrsg": svrsg_epoch,
}


def run(obj: Objective, cfg: SolverConfig, x0=None) -> RunResult:
    """Run the configured solver for cfg.epochs epochs and trace progress.

    The trace has epochs+1 records (the initial point included); objective
    values in it are measurement only and do not count as effective passes.
    Bit-reproducible for a fixed config and seed.
    """
    plan = _plan(obj, cfg)
    epoch_fn = _EPOCH_FNS[plan.algorithm]
    state = init_state(obj, x0, with_z=(plan.algorithm == "katyusha"))
    passes = 0.0
    t_start = time.perf_counter()
    trace = [TraceRecord(0, 0.0, 0.0, obj.phi(state.snapshot))]
    for s in range(1, cfg.epochs + 1):
        rng = epoch_rng(cfg.seed, s)
        epoch_fn(obj, cfg, state, rng)
        m = _epoch_size(plan, s)
        if not plan.stochastic_only:
            passes += 1.0
        passes += m * plan.batch_size / obj.n
        trace.append(
            TraceRecord(
                s, passes, time.perf_counter() - t_start, obj.phi(state.snapshot)
            )
        )
    params = {
        "algorithm": plan.algorithm,
        "step_size": plan.eta,
        "m1": plan.m1,
        "growth": plan.growth,
        "epochs": cfg.epochs,
        "batch_size": plan.batch_size,
        "seed": cfg.seed,
        "sc_restart": plan.sc_restart,
    }
    return RunResult(
        x=state.snapshot.copy(),
        trace=tuple(trace),
        effective_passes=passes,
        wall_time_s=time.perf_counter() - t_start,
        params=params,
    )
