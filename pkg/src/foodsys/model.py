"""Core state-space model of a national food commodity system.

Four coupled ODEs describe productive capital C (e.g. a breeding herd),
commodity inventory I, consumer demand D and producer price P:

    dC/dt = a*C*(P/b - 1) - e*C
    dI/dt = f*g*C - w*I - I*D/(s*D + I) + k*(h - f*g*C)
    dD/dt = m*(h*q/P - D)
    dP/dt = r*P*(s*D/I - 1)

The same dynamics in rescaled variables v = C/C0, x = I/(h*s), y = D/h,
z = P/q and rescaled time tau = a*t:

    dv/dtau = v*(alpha*z - 1) - beta*v
    dx/dtau = delta*v - omega*x - gamma*x*y/(y + x) + kappa*(gamma - delta*v)
    dy/dtau = mu*(1/z - y)
    dz/dtau = rho*z*(y/x - 1)

This module holds the parameter containers, both right-hand sides, the
maps between the two frames, and the analytic Jacobian of the rescaled
system. Everything here is an immutable value; all functions are pure.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import DomainError, FrameError, SchemaError, SingularityError

__all__ = [
    "Frame",
    "DimensionalParams",
    "DimensionlessParams",
    "InitialState",
    "SystemState",
    "Trajectory",
    "nondimensionalise",
    "redimensionalise",
    "fast_subsystem_equilibrium",
    "rhs_dimensional",
    "rhs_dimensionless",
    "jacobian_dimensionless",
]

# Below this, a vanishing consumption denominator is treated as a removable
# singularity and the consumption term is defined to be zero.
CONSUMPTION_DENOM_FLOOR = 1e-300


class Frame(enum.Enum):
    """Which variable set a state or trajectory is expressed in."""

    DIMENSIONAL = "dimensional"
    DIMENSIONLESS = "dimensionless"


def _check_positive_finite(obj, names) -> None:
    for name in names:
        value = getattr(obj, name)
        if not math.isfinite(value):
            raise DomainError(f"{type(obj).__name__}.{name} must be finite, got {value!r}")
        if value <= 0:
            raise DomainError(f"{type(obj).__name__}.{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class DimensionalParams:
    """The twelve dimensional model parameters.

    Attributes
    ----------
    a : capital growth rate [1/month]
    b : cost of capital production [price per inventory unit]
    e : capital depreciation rate [1/month]
    f : capital production rate [1/month]
    g : capital conversion factor [inventory units per capital unit]
    w : inventory waste rate [1/month]
    s : reference coverage [months of stock processors aim to hold]
    k : trade strength, fraction of the (reference demand - production)
        gap that is imported or exported [dimensionless, 0 <= k < 1]
    h : reference demand [inventory units/month]
    m : demand response rate [1/month]
    q : reference price [price per inventory unit]
    r : price growth rate [1/month]
    """

    a: float
    b: float
    e: float
    f: float
    g: float
    w: float
    s: float
    k: float
    h: float
    m: float
    q: float
    r: float

    def __post_init__(self):
        _check_positive_finite(self, ("a", "b", "e", "f", "g", "w", "s", "h", "m", "q", "r"))
        if not math.isfinite(self.k) or not (0 <= self.k < 1):
            raise DomainError(f"DimensionalParams.k must satisfy 0 <= k < 1, got {self.k!r}")

    def replace(self, **kwargs) -> "DimensionalParams":
        values = self.to_dict()
        values.update(kwargs)
        return DimensionalParams(**values)

    def to_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_array(self) -> np.ndarray:
        """Parameters packed in field order (a, b, e, f, g, w, s, k, h, m, q, r)."""
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "DimensionalParams":
        return cls(**_checked_keys(cls, data))

    @classmethod
    def from_json(cls, text: str) -> "DimensionalParams":
        return cls.from_dict(_parse_json_object(text))


@dataclass(frozen=True)
class DimensionlessParams:
    """The eight rescaled parameter groups.

    Attributes
    ----------
    alpha : reference profitability q/b
    beta  : depreciation ratio e/a
    delta : initial production-demand ratio f*g*C0/(a*h*s)
    omega : waste ratio w/a
    gamma : capital replacement-coverage ratio 1/(a*s)
    kappa : trade strength k (unchanged by the rescaling)
    mu    : demand response ratio m/a
    rho   : price response ratio r/a
    """

    alpha: float
    beta: float
    delta: float
    omega: float
    gamma: float
    kappa: float
    mu: float
    rho: float

    def __post_init__(self):
        _check_positive_finite(self, ("alpha", "beta", "delta", "omega", "gamma", "mu", "rho"))
        if not math.isfinite(self.kappa) or not (0 <= self.kappa < 1):
            raise DomainError(
                f"DimensionlessParams.kappa must satisfy 0 <= kappa < 1, got {self.kappa!r}"
            )

    def replace(self, **kwargs) -> "DimensionlessParams":
        values = self.to_dict()
        values.update(kwargs)
        return DimensionlessParams(**values)

    def to_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_array(self) -> np.ndarray:
        """Packed in field order (alpha, beta, delta, omega, gamma, kappa, mu, rho)."""
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "DimensionlessParams":
        return cls(**_checked_keys(cls, data))

    @classmethod
    def from_json(cls, text: str) -> "DimensionlessParams":
        return cls.from_dict(_parse_json_object(text))


@dataclass(frozen=True)
class InitialState:
    """Initial conditions of the dimensional system.

    All four must be strictly positive: the observation model is lognormal
    and the price/coverage equations divide by I and P.
    """

    C0: float
    I0: float
    D0: float
    P0: float

    def __post_init__(self):
        _check_positive_finite(self, ("C0", "I0", "D0", "P0"))

    def to_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_array(self) -> np.ndarray:
        return np.array([self.C0, self.I0, self.D0, self.P0], dtype=np.float64)

    @classmethod
    def from_dict(cls, data: dict) -> "InitialState":
        return cls(**_checked_keys(cls, data))


def _checked_keys(cls, data: dict) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise SchemaError(f"{cls.__name__}: unknown keys {sorted(unknown)}")
    missing = allowed - set(data)
    if missing:
        raise SchemaError(f"{cls.__name__}: missing keys {sorted(missing)}")
    bad = {key: value for key, value in data.items() if not isinstance(value, (int, float))}
    if bad:
        raise SchemaError(f"{cls.__name__}: non-numeric values for {sorted(bad)}")
    return {key: float(value) for key, value in data.items()}


def _parse_json_object(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("expected a JSON object")
    return data


_DIMENSIONAL_NAMES = ("C", "I", "D", "P")
_DIMENSIONLESS_NAMES = ("v", "x", "y", "z")


@dataclass(frozen=True)
class SystemState:
    """A four-component state tagged by frame.

    Dimensional states are (C, I, D, P); dimensionless states are
    (v, x, y, z). Construction does not enforce positivity -- equilibrium
    records may legitimately contain zeros -- but trajectories do.
    """

    frame: Frame
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (4,):
            raise DomainError(f"SystemState needs exactly 4 components, got shape {arr.shape}")
        object.__setattr__(self, "values", arr)

    @classmethod
    def dimensional(cls, C: float, I: float, D: float, P: float) -> "SystemState":
        return cls(Frame.DIMENSIONAL, np.array([C, I, D, P], dtype=np.float64))

    @classmethod
    def dimensionless(cls, v: float, x: float, y: float, z: float) -> "SystemState":
        return cls(Frame.DIMENSIONLESS, np.array([v, x, y, z], dtype=np.float64))

    def _component(self, name: str) -> float:
        names = _DIMENSIONAL_NAMES if self.frame is Frame.DIMENSIONAL else _DIMENSIONLESS_NAMES
        if name not in names:
            raise FrameError(f"component {name!r} undefined in frame {self.frame.value}")
        return float(self.values[names.index(name)])

    C = property(lambda self: self._component("C"))
    I = property(lambda self: self._component("I"))  # noqa: E743 - domain symbol
    D = property(lambda self: self._component("D"))
    P = property(lambda self: self._component("P"))
    v = property(lambda self: self._component("v"))
    x = property(lambda self: self._component("x"))
    y = property(lambda self: self._component("y"))
    z = property(lambda self: self._component("z"))

    def component_names(self) -> tuple[str, ...]:
        return _DIMENSIONAL_NAMES if self.frame is Frame.DIMENSIONAL else _DIMENSIONLESS_NAMES


@dataclass(frozen=True)
class Trajectory:
    """A time-indexed solution: strictly increasing times and aligned states.

    ``frame`` is None for solutions of arbitrary user-supplied vector fields.
    """

    frame: Frame | None
    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        states = np.asarray(self.states, dtype=np.float64)
        if times.ndim != 1:
            raise DomainError("Trajectory.times must be one-dimensional")
        if states.shape[0] != times.shape[0]:
            raise DomainError(
                f"times ({times.shape[0]}) and states ({states.shape[0]}) differ in length"
            )
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise DomainError("Trajectory.times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return int(self.times.size)

    def state_at(self, index: int) -> SystemState:
        if self.frame is None:
            raise FrameError("trajectory of a generic vector field carries no frame")
        return SystemState(self.frame, self.states[index])

    def final_state(self) -> np.ndarray:
        return self.states[-1]


# ---------------------------------------------------------------------------
# Frame maps
# ---------------------------------------------------------------------------

def nondimensionalise(
    p: DimensionalParams, s0: InitialState
) -> tuple[DimensionlessParams, SystemState]:
    """Rescale parameters and the initial state to the dimensionless frame.

    Returns the eight parameter groups and the initial dimensionless state
    (v=1, x=I0/(h*s), y=D0/h, z=P0/q). Time rescales as tau = a*t, so the
    reported factor between the frames is simply ``p.a``;
    :func:`redimensionalise` applies the inverse maps.
    """
    dp = DimensionlessParams(
        alpha=p.q / p.b,
        beta=p.e / p.a,
        delta=p.f * p.g * s0.C0 / (p.a * p.h * p.s),
        omega=p.w / p.a,
        gamma=1.0 / (p.a * p.s),
        kappa=p.k,
        mu=p.m / p.a,
        rho=p.r / p.a,
    )
    state0 = SystemState.dimensionless(
        1.0, s0.I0 / (p.h * p.s), s0.D0 / p.h, s0.P0 / p.q
    )
    return dp, state0


def redimensionalise(traj: Trajectory, p: DimensionalParams, s0: InitialState) -> Trajectory:
    """Map a dimensionless trajectory back to dimensional variables.

    C = v*C0, I = x*h*s, D = y*h, P = z*q and t = tau/a.
    """
    if traj.frame is not Frame.DIMENSIONLESS:
        raise FrameError(f"expected a dimensionless trajectory, got frame {traj.frame!r}")
    scale = np.array([s0.C0, p.h * p.s, p.h, p.q], dtype=np.float64)
    return Trajectory(Frame.DIMENSIONAL, traj.times / p.a, traj.states * scale)


def dimensionless_state(state: SystemState, p: DimensionalParams, s0: InitialState) -> SystemState:
    """Rescale a single dimensional state to the dimensionless frame."""
    if state.frame is not Frame.DIMENSIONAL:
        raise FrameError(f"expected a dimensional state, got frame {state.frame!r}")
    scale = np.array([s0.C0, p.h * p.s, p.h, p.q], dtype=np.float64)
    return SystemState(Frame.DIMENSIONLESS, state.values / scale)


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def fast_subsystem_equilibrium(p: DimensionalParams, C0: float) -> InitialState:
    """Inventory/demand/price equilibrium conditional on capital C0.

    With capital frozen, demand settles where the inventory balance holds
    at coverage one: D = (f*g*C0*(1-k) + k*h)/(w*s + 1/2), P = h*q/D and
    I = s*D. Useful as a realistic near-steady initial state, since capital
    moves far slower than the other three variables.
    """
    production = p.f * p.g * C0
    D = (production * (1.0 - p.k) + p.k * p.h) / (p.w * p.s + 0.5)
    return InitialState(C0, p.s * D, D, p.h * p.q / D)


def rhs_dimensional(state: SystemState, p: DimensionalParams) -> np.ndarray:
    """Time derivative (dC/dt, dI/dt, dD/dt, dP/dt) of the dimensional system.

    Raises :class:`SingularityError` when I <= 0 or P <= 0, where the
    demand and price equations divide by zero. The consumption term
    I*D/(s*D + I) is defined as 0 when its denominator vanishes (both
    inventory and demand at zero is a removable singularity).
    """
    if state.frame is not Frame.DIMENSIONAL:
        raise FrameError(f"expected a dimensional state, got frame {state.frame!r}")
    C, I, D, P = state.values
    if I <= 0 or P <= 0:
        raise SingularityError(f"inventory and price must be positive, got I={I!r}, P={P!r}")
    denom = p.s * D + I
    consumption = 0.0 if denom < CONSUMPTION_DENOM_FLOOR else I * D / denom
    production = p.f * p.g * C
    return np.array(
        [
            p.a * C * (P / p.b - 1.0) - p.e * C,
            production - p.w * I - consumption + p.k * (p.h - production),
            p.m * (p.h * p.q / P - D),
            p.r * P * (p.s * D / I - 1.0),
        ],
        dtype=np.float64,
    )


def rhs_dimensionless(state: SystemState, p: DimensionlessParams) -> np.ndarray:
    """Time derivative (dv, dx, dy, dz)/dtau of the rescaled system.

    Mirrors :func:`rhs_dimensional` exactly under the frame maps: the
    dimensional derivative mapped through the rescaling equals ``a`` times
    this one. Same singularity rules, with x and z in place of I and P.
    """
    if state.frame is not Frame.DIMENSIONLESS:
        raise FrameError(f"expected a dimensionless state, got frame {state.frame!r}")
    v, x, y, z = state.values
    if x <= 0 or z <= 0:
        raise SingularityError(f"x and z must be positive, got x={x!r}, z={z!r}")
    denom = y + x
    consumption = 0.0 if denom < CONSUMPTION_DENOM_FLOOR else p.gamma * x * y / denom
    return np.array(
        [
            v * (p.alpha * z - 1.0) - p.beta * v,
            p.delta * v - p.omega * x - consumption + p.kappa * (p.gamma - p.delta * v),
            p.mu * (1.0 / z - y),
            p.rho * z * (y / x - 1.0),
        ],
        dtype=np.float64,
    )


def jacobian_dimensionless(state: SystemState, p: DimensionlessParams) -> np.ndarray:
    """Analytic 4x4 Jacobian of :func:`rhs_dimensionless` at ``state``.

    v may be zero; x, z and x+y must not be (the partial derivatives divide
    by them). Row 3 is zero in columns 1 and 2: demand dynamics depend only
    on y and z.
    """
    if state.frame is not Frame.DIMENSIONLESS:
        raise FrameError(f"expected a dimensionless state, got frame {state.frame!r}")
    v, x, y, z = state.values
    if x == 0 or z == 0 or x + y == 0:
        raise SingularityError(
            f"Jacobian undefined at x={x!r}, z={z!r}, x+y={x + y!r}"
        )
    sq = (x + y) ** 2
    return np.array(
        [
            [p.alpha * z - 1.0 - p.beta, 0.0, 0.0, p.alpha * v],
            [
                p.delta * (1.0 - p.kappa),
                -p.omega - p.gamma * y**2 / sq,
                -p.gamma * x**2 / sq,
                0.0,
            ],
            [0.0, 0.0, -p.mu, -p.mu / z**2],
            [0.0, -p.rho * z * y / x**2, p.rho * z / x, p.rho * (y / x - 1.0)],
        ],
        dtype=np.float64,
    )
