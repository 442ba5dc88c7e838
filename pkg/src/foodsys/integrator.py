"""Adaptive Runge-Kutta 4(5) initial-value solver.

Uses the Dormand-Prince embedded pair. Output is produced at exactly the
requested observation times (bitwise: the solver shortens steps to land on
them), not at nearest accepted steps. Model vector fields go through the
compiled kernels in :mod:`foodsys._kernels`; arbitrary Python callables
``f(t, y) -> dy`` use the same algorithm in plain numpy.

State positivity is enforced by step rejection rather than by clamping in
the right-hand side: a step that produces a non-positive component is
retried with half the step size, and integration fails only once the step
falls below ``min_step``. This keeps model blow-ups visible instead of
silently flushing them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import _kernels
from .errors import DomainError, IntegrationError
from .model import (
    DimensionalParams,
    DimensionlessParams,
    Frame,
    SystemState,
    Trajectory,
)

__all__ = ["IntegratorConfig", "ModelField", "EventResult", "integrate", "event_horizon"]


@dataclass(frozen=True)
class IntegratorConfig:
    """Solver tolerances and limits.

    ``initial_step`` of 0 means the default heuristic 0.01*(t1-t0).
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    initial_step: float = 0.0
    max_steps: int = 1_000_000
    min_step: float = 1e-12
    enforce_positive: bool = True

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.max_steps < 1:
            raise DomainError("max_steps must be >= 1")
        if self.min_step < 0 or self.initial_step < 0:
            raise DomainError("steps must be non-negative")


@dataclass(frozen=True)
class ModelField:
    """The food-system vector field in one frame, usable by the fast kernels.

    Also callable as ``field(t, y)`` so it can be passed anywhere a generic
    right-hand side is accepted.
    """

    params: Union[DimensionalParams, DimensionlessParams]

    @property
    def frame(self) -> Frame:
        if isinstance(self.params, DimensionalParams):
            return Frame.DIMENSIONAL
        return Frame.DIMENSIONLESS

    @property
    def rhs_id(self) -> int:
        if isinstance(self.params, DimensionalParams):
            return _kernels.RHS_DIMENSIONAL
        return _kernels.RHS_DIMENSIONLESS

    def params_array(self) -> np.ndarray:
        return self.params.to_array()

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        out = np.empty(4)
        _kernels._eval_rhs(self.rhs_id, np.asarray(y, dtype=np.float64),
                           self.params_array(), out)
        return out


@dataclass(frozen=True)
class EventResult:
    """Outcome of :func:`event_horizon`: where the predicate first held,
    or the state at the time cap when it never did (``crossed`` False)."""

    time: float
    state: np.ndarray
    crossed: bool


def _as_array_y0(y0) -> np.ndarray:
    if isinstance(y0, SystemState):
        return np.array(y0.values, dtype=np.float64)
    arr = np.asarray(y0, dtype=np.float64)
    if arr.ndim != 1:
        raise DomainError("y0 must be a one-dimensional state vector")
    return arr.copy()


def integrate(rhs, y0, t_span: tuple[float, float], obs_times,
              cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Solve dy/dt = rhs(t, y) over ``t_span``, reporting at ``obs_times``.

    ``rhs`` is a :class:`ModelField` (fast path) or any callable
    ``f(t, y) -> dy``. Raises :class:`IntegrationError` with the failure
    time if the step count cap is hit (``reason='max_steps'``) or the step
    size underflows under persistent rejection, e.g. on a singular or
    non-finite right-hand side (``reason='step_underflow'``).
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t0 < t1:
        raise DomainError(f"need t0 < t1, got ({t0}, {t1})")
    obs = np.asarray(obs_times, dtype=np.float64)
    if obs.ndim != 1 or obs.size == 0:
        raise DomainError("obs_times must be a non-empty 1-d sequence")
    if np.any(np.diff(obs) < 0):
        raise DomainError("obs_times must be sorted")
    if obs[0] < t0 or obs[-1] > t1:
        raise DomainError("obs_times must lie within t_span")

    y0_arr = _as_array_y0(y0)
    if not np.all(np.isfinite(y0_arr)):
        raise DomainError("y0 must be finite")

    if isinstance(rhs, ModelField):
        if isinstance(y0, SystemState) and y0.frame is not rhs.frame:
            raise DomainError(
                f"y0 frame {y0.frame.value} does not match the field frame {rhs.frame.value}"
            )
        status, fail_t, _, states = _kernels.rk45_solve(
            rhs.rhs_id, rhs.params_array(), y0_arr, t0, obs,
            cfg.rel_tol, cfg.abs_tol, cfg.initial_step, cfg.min_step,
            cfg.max_steps, cfg.enforce_positive,
        )
        frame = rhs.frame
    else:
        status, fail_t, states = _solve_callable(rhs, y0_arr, t0, obs, cfg)
        frame = None

    if status == _kernels.MAX_STEPS_EXCEEDED:
        raise IntegrationError(f"no convergence within {cfg.max_steps} steps", fail_t)
    if status == _kernels.STEP_UNDERFLOW:
        raise IntegrationError(
            "step size underflow: singular/non-finite derivative or positivity "
            "violation could not be stepped over", fail_t, reason="step_underflow",
        )
    return Trajectory(frame, obs, states)


def event_horizon(rhs, y0, cfg: IntegratorConfig, predicate: Callable[[np.ndarray], bool],
                  t0: float = 0.0, t_cap: float = 1e4) -> EventResult:
    """Integrate until ``predicate(state)`` first holds at an accepted step.

    The predicate must be a pure function of the state. Returns the first
    crossing step's endpoint; hitting ``t_cap`` first is a timeout result
    (``crossed=False``), not an error.
    """
    y = _as_array_y0(y0)
    if predicate(y):
        return EventResult(float(t0), y, True)
    f = rhs if callable(rhs) else ModelField(rhs)
    stepper = _Dopri5(f, float(t0), y, cfg, float(t_cap))
    while stepper.t < t_cap:
        stepper.step()
        if predicate(stepper.y):
            return EventResult(stepper.t, stepper.y.copy(), True)
    return EventResult(stepper.t, stepper.y.copy(), False)


# ---------------------------------------------------------------------------
# Generic-callable path (identical Dormand-Prince scheme, numpy arithmetic)
# ---------------------------------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


class _Dopri5:
    """Single-step driver shared by the callable path and event detection."""

    def __init__(self, f, t0, y0, cfg: IntegratorConfig, t_end: float):
        self.f = f
        self.t = t0
        self.y = y0.copy()
        self.cfg = cfg
        self.t_end = t_end
        self.h = cfg.initial_step if cfg.initial_step > 0 else 0.01 * (t_end - t0)
        self.k1 = np.asarray(f(t0, y0), dtype=np.float64)
        self.n_steps = 0

    def step(self, target: float | None = None) -> bool:
        """Advance one accepted step; land exactly on ``target`` if given.

        Returns True when the step landed on the target. Raises
        IntegrationError on step underflow or step-count exhaustion.
        """
        cfg = self.cfg
        while True:
            if self.n_steps >= cfg.max_steps:
                raise IntegrationError(
                    f"no convergence within {cfg.max_steps} steps", self.t
                )
            self.n_steps += 1
            cap = self.t_end if target is None else target
            landing = self.t + self.h >= cap
            ht = cap - self.t if landing else self.h

            k = np.empty((7, self.y.size))
            k[0] = self.k1
            ok = True
            for i, row in enumerate(_A, start=1):
                ytmp = self.y + ht * (row @ k[:i])
                ki = np.asarray(self.f(self.t + _C[i] * ht, ytmp), dtype=np.float64)
                if not np.all(np.isfinite(ki)):
                    ok = False
                    break
                k[i] = ki
            if ok:
                ynew = self.y + ht * (_B5 @ k)
                sc = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(self.y), np.abs(ynew))
                err_vec = ht * (_E @ k)
                err = float(np.sqrt(np.mean((err_vec / sc) ** 2)))
                ok = np.all(np.isfinite(ynew)) and np.isfinite(err)
            if not ok:
                self.h = 0.5 * ht
                if self.h < cfg.min_step:
                    raise IntegrationError("step size underflow", self.t,
                                           reason="step_underflow")
                continue
            if cfg.enforce_positive and np.any(ynew < 0.0):
                self.h = 0.5 * ht
                if self.h < cfg.min_step:
                    raise IntegrationError("step size underflow", self.t,
                                           reason="step_underflow")
                continue
            if err <= 1.0:
                self.t = cap if landing else self.t + ht
                self.y = ynew
                self.k1 = k[6]
                if not landing:
                    fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                    self.h = ht * fac
                return landing
            fac = max(0.2, 0.9 * err ** -0.2)
            self.h = ht * fac
            if self.h < cfg.min_step:
                raise IntegrationError("step size underflow", self.t,
                                       reason="step_underflow")


def _solve_callable(f, y0, t0, obs, cfg: IntegratorConfig):
    out = np.empty((obs.size, y0.size))
    i_obs = 0
    while i_obs < obs.size and obs[i_obs] <= t0:
        out[i_obs] = y0
        i_obs += 1
    if i_obs >= obs.size:
        return _kernels.OK, t0, out
    stepper = _Dopri5(f, t0, y0, cfg, float(obs[-1]))
    try:
        while i_obs < obs.size:
            landed = stepper.step(target=float(obs[i_obs]))
            if landed:
                while i_obs < obs.size and obs[i_obs] == stepper.t:
                    out[i_obs] = stepper.y
                    i_obs += 1
    except IntegrationError as exc:
        status = (_kernels.STEP_UNDERFLOW if exc.reason == "step_underflow"
                  else _kernels.MAX_STEPS_EXCEEDED)
        return status, exc.time, out
    return _kernels.OK, stepper.t, out
