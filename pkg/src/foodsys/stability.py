"""Equilibria, linear stability, sustainability ratios and regime maps.

All analysis happens in the dimensionless frame. The central quantity is

    critical ratio = alpha*(omega + gamma/2) / (kappa*gamma*(1 + beta))

Below one, the import-dependent equilibrium (domestic capital at zero) is
locally stable and the domestic industry collapses; above one a positive
domestic equilibrium exists and attracts. The surplus ratio
kappa * critical ratio distinguishes net exporters (> 1) from importers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .integrator import IntegratorConfig, ModelField
from .model import (
    DimensionalParams,
    DimensionlessParams,
    Frame,
    InitialState,
    SystemState,
    jacobian_dimensionless,
    nondimensionalise,
)
from . import _kernels

__all__ = [
    "FixedPointKind",
    "FixedPoint",
    "StabilityReport",
    "RegimeKind",
    "Regime",
    "RegimeGrid",
    "RegimeCell",
    "SENSITIVITY_REFERENCE",
    "critical_ratio",
    "surplus_ratio",
    "critical_trade_strength",
    "unsustainable_leading_eigenvalue",
    "unsustainable_cubic_coefficients",
    "routh_hurwitz_stable_cubic",
    "eigenvalues",
    "fixed_points",
    "fixed_point_jacobian",
    "stability_report",
    "classify_regime",
    "regime_map",
    "sensitivity_curves",
]

# Eigenvalue real parts within this band of zero are treated as
# non-hyperbolic (verdict indeterminate) rather than stable/unstable.
DEFAULT_TOL_ZERO = 1e-9

# Band around ratio = 1 flagged as an analytic regime boundary.
BOUNDARY_BAND = 1e-9


class FixedPointKind(enum.Enum):
    ORIGIN = "origin"
    NO_TRADE_INTERIOR = "no_trade_interior"
    IMPORTS_ONLY_TRIVIAL = "imports_only_trivial"
    UNSUSTAINABLE_DOMESTIC = "unsustainable_domestic"
    SUSTAINABLE_DOMESTIC = "sustainable_domestic"


@dataclass(frozen=True)
class FixedPoint:
    """An equilibrium of the dimensionless system.

    ``exists`` is False when the closed-form state is outside the physical
    region (the positive-capital equilibrium requires critical ratio > 1);
    the state is still recorded for inspection. ``hyperbolic`` is False for
    the imports-only trivial point, which sits on the singular set y = z = 0
    where the linearisation is undefined: its stability can only be probed
    by simulation.
    """

    kind: FixedPointKind
    state: SystemState
    exists: bool = True
    reason: str = ""
    hyperbolic: bool = True


@dataclass(frozen=True)
class StabilityReport:
    """Eigenvalue verdict for one fixed point.

    ``stable`` is None when the point is non-hyperbolic (leading real part
    within ``tol_zero`` of zero, or the linearisation is undefined).
    ``return_time`` = -1/max(Re lambda), the characteristic recovery time
    after a small perturbation, reported only for stable points.
    """

    fixed_point: FixedPoint
    jacobian: np.ndarray | None
    eigenvalues: np.ndarray | None
    stable: bool | None
    return_time: float | None
    tol_zero: float = DEFAULT_TOL_ZERO


class RegimeKind(enum.Enum):
    UNSUSTAINABLE = "unsustainable"
    SUSTAINABLE_NET_IMPORTER = "sustainable_net_importer"
    SUSTAINABLE_NET_EXPORTER = "sustainable_net_exporter"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    critical_ratio: float
    surplus_ratio: float
    boundary: bool = False


# ---------------------------------------------------------------------------
# Ratios
# ---------------------------------------------------------------------------

def critical_ratio(p: DimensionlessParams) -> float:
    """alpha*(omega + gamma/2)/(kappa*gamma*(1 + beta)); needs kappa > 0.

    Below one the import-dependent equilibrium is stable. With no trade
    (kappa = 0) the ratio is undefined and the no-trade analysis applies.
    """
    if p.kappa <= 0:
        raise DomainError("critical ratio is undefined at kappa = 0 (no-trade branch)")
    return p.alpha * (p.omega + p.gamma / 2.0) / (p.kappa * p.gamma * (1.0 + p.beta))


def surplus_ratio(p: DimensionlessParams) -> float:
    """alpha*(omega + gamma/2)/(gamma*(1 + beta)): > 1 means net exports.

    Equals kappa * critical ratio, and also equals the trade strength at
    which the critical ratio crosses one.
    """
    return p.alpha * (p.omega + p.gamma / 2.0) / (p.gamma * (1.0 + p.beta))


def critical_trade_strength(p: DimensionlessParams) -> float:
    """The kappa* at which the critical ratio equals one.

    Values >= 1 mean no admissible trade strength can destabilise domestic
    production (kappa is confined to [0, 1)).
    """
    return surplus_ratio(p)


def unsustainable_leading_eigenvalue(p: DimensionlessParams) -> float:
    """Closed-form capital-direction eigenvalue at the import-dependent
    equilibrium: alpha*(omega + gamma/2)/(kappa*gamma) - 1 - beta."""
    if p.kappa <= 0:
        raise DomainError("the import-dependent equilibrium requires kappa > 0")
    return p.alpha * (p.omega + p.gamma / 2.0) / (p.kappa * p.gamma) - 1.0 - p.beta


def unsustainable_cubic_coefficients(p: DimensionlessParams) -> tuple[float, float, float]:
    """Coefficients (c2, c1, c0) of the monic cubic factor
    lambda^3 + c2 lambda^2 + c1 lambda + c0 of the characteristic polynomial
    at the import-dependent equilibrium (the inventory/demand/price block)."""
    c2 = p.omega + p.gamma / 4.0 + p.mu
    c1 = p.mu * (p.omega + p.rho + p.gamma / 4.0)
    c0 = p.mu * p.rho * (p.omega + p.gamma / 2.0)
    return c2, c1, c0


def routh_hurwitz_stable_cubic(c2: float, c1: float, c0: float) -> bool:
    """True iff every root of lambda^3 + c2 lambda^2 + c1 lambda + c0 has a
    negative real part: c2 > 0, c0 > 0 and c2*c1 > c0."""
    return c2 > 0.0 and c0 > 0.0 and c2 * c1 > c0


# ---------------------------------------------------------------------------
# Eigenvalues
# ---------------------------------------------------------------------------

def eigenvalues(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a real matrix, sorted by descending real part
    (descending imaginary part within ties). Each returned root keeps
    |det(m - lambda I)| below 1e-8 * ||m||_F^4."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix entries must be finite")
    eigs = np.linalg.eigvals(m)
    order = np.lexsort((-eigs.imag, -eigs.real))
    return eigs[order]


# ---------------------------------------------------------------------------
# Fixed points
# ---------------------------------------------------------------------------

def fixed_points(p: DimensionlessParams) -> list[FixedPoint]:
    """All closed-form equilibria for the parameter set.

    kappa = 0: the empty state and the interior no-trade equilibrium.
    kappa > 0: the imports-only trivial point (non-hyperbolic), the
    import-dependent (zero capital) equilibrium, and the positive-capital
    equilibrium, which exists only when the critical ratio exceeds one.
    """
    a, b_, d, w, g, k = p.alpha, p.beta, p.delta, p.omega, p.gamma, p.kappa
    interior_xyz = (a / (1.0 + b_), a / (1.0 + b_), (1.0 + b_) / a)

    if k == 0:
        origin = FixedPoint(
            FixedPointKind.ORIGIN,
            SystemState.dimensionless(0.0, 0.0, 0.0, 0.0),
            hyperbolic=False,
            reason="on the singular set z = 0: the demand term 1/z diverges, so "
                   "the formal eigenvalues understate perturbation growth and no "
                   "stable verdict applies",
        )
        v_hat = a * (2.0 * w + g) / (2.0 * d * (1.0 + b_))
        interior = FixedPoint(
            FixedPointKind.NO_TRADE_INTERIOR,
            SystemState.dimensionless(v_hat, *interior_xyz),
        )
        return [origin, interior]

    trivial = FixedPoint(
        FixedPointKind.IMPORTS_ONLY_TRIVIAL,
        SystemState.dimensionless(0.0, k * g / w, 0.0, 0.0),
        hyperbolic=False,
        reason="lies on the singular set y = z = 0; stability by simulation only",
    )
    x_hat = k * g / (w + g / 2.0)
    unsustainable = FixedPoint(
        FixedPointKind.UNSUSTAINABLE_DOMESTIC,
        SystemState.dimensionless(0.0, x_hat, x_hat, 1.0 / x_hat),
    )
    v_hat = (2.0 * g * k * (-1.0 - b_) + a * (g + 2.0 * w)) / (
        2.0 * d * (1.0 + b_) * (1.0 - k)
    )
    exists = v_hat > 0
    sustainable = FixedPoint(
        FixedPointKind.SUSTAINABLE_DOMESTIC,
        SystemState.dimensionless(v_hat, *interior_xyz),
        exists=exists,
        reason="" if exists else "requires critical ratio > 1 for positive capital",
    )
    return [trivial, unsustainable, sustainable]


def fixed_point_jacobian(fp: FixedPoint, p: DimensionlessParams) -> np.ndarray:
    """Jacobian of the dimensionless system at a fixed point.

    Interior points use the general analytic Jacobian. The empty state sits
    on the singular set of the consumption and demand terms, so its
    linearisation is the limiting lower-triangular form, whose spectrum is
    {-(1+beta), -omega, -mu, -rho}. The imports-only trivial point has no
    defined linearisation.
    """
    if fp.kind is FixedPointKind.IMPORTS_ONLY_TRIVIAL:
        raise DomainError(
            "the imports-only trivial point is non-hyperbolic; no Jacobian applies"
        )
    if fp.kind is FixedPointKind.ORIGIN:
        return np.array(
            [
                [-(1.0 + p.beta), 0.0, 0.0, 0.0],
                [p.delta * (1.0 - p.kappa), -p.omega, 0.0, 0.0],
                [0.0, 0.0, -p.mu, 0.0],
                [0.0, 0.0, 0.0, -p.rho],
            ],
            dtype=np.float64,
        )
    return jacobian_dimensionless(fp.state, p)


def stability_report(
    fp: FixedPoint, p: DimensionlessParams, tol_zero: float = DEFAULT_TOL_ZERO
) -> StabilityReport:
    """Eigenvalue-based stability verdict for an existing fixed point.

    Non-hyperbolic points get no boolean verdict (``stable`` is None): the
    imports-only trivial point has no linearisation at all, and the empty
    state's formal spectrum (all negative) misses the diverging demand
    response 1/z on its singular set, so a "stable" verdict would be wrong.
    """
    if not fp.exists:
        raise DomainError(f"fixed point {fp.kind.value} does not exist: {fp.reason}")
    if fp.kind is FixedPointKind.IMPORTS_ONLY_TRIVIAL:
        return StabilityReport(fp, None, None, None, None, tol_zero)
    jac = fixed_point_jacobian(fp, p)
    eigs = eigenvalues(jac)
    if not fp.hyperbolic:
        return StabilityReport(fp, jac, eigs, None, None, tol_zero)
    max_re = float(eigs[0].real)
    if abs(max_re) < tol_zero:
        return StabilityReport(fp, jac, eigs, None, None, tol_zero)
    stable = max_re < 0.0
    return StabilityReport(fp, jac, eigs, stable, -1.0 / max_re if stable else None, tol_zero)


# ---------------------------------------------------------------------------
# Regime classification and maps
# ---------------------------------------------------------------------------

def classify_regime(p: DimensionlessParams) -> Regime:
    """Analytic regime label for 0 < kappa < 1.

    Unsustainable when the critical ratio is below one; otherwise a net
    exporter when the surplus ratio exceeds one, else a net importer.
    Ratios within ``BOUNDARY_BAND`` of one are flagged as boundary cells.
    """
    if not (0 < p.kappa < 1):
        raise DomainError(f"regimes are defined for 0 < kappa < 1, got {p.kappa!r}")
    crit = critical_ratio(p)
    surp = surplus_ratio(p)
    boundary = abs(crit - 1.0) < BOUNDARY_BAND or abs(surp - 1.0) < BOUNDARY_BAND
    if crit < 1.0:
        kind = RegimeKind.UNSUSTAINABLE
    elif surp > 1.0:
        kind = RegimeKind.SUSTAINABLE_NET_EXPORTER
    else:
        kind = RegimeKind.SUSTAINABLE_NET_IMPORTER
    return Regime(kind, crit, surp, boundary)


def _default_kappas() -> np.ndarray:
    return np.linspace(0.05, 0.95, 20)


def _default_alphas() -> np.ndarray:
    return np.linspace(0.1, 2.0, 20)


@dataclass(frozen=True)
class RegimeGrid:
    """A (kappa, alpha) grid swept per beta panel, other parameters fixed.

    Defaults probe the panel family gamma=26, omega=10, delta=5 with
    moderate demand/price response rates.
    """

    kappa_values: np.ndarray = field(default_factory=_default_kappas)
    alpha_values: np.ndarray = field(default_factory=_default_alphas)
    beta_values: tuple[float, ...] = (0.165, 0.5, 1.0)
    gamma: float = 26.0
    omega: float = 10.0
    delta: float = 5.0
    mu: float = 1.0
    rho: float = 1.0

    def params_at(self, kappa: float, alpha: float, beta: float) -> DimensionlessParams:
        return DimensionlessParams(
            alpha=alpha, beta=beta, delta=self.delta, omega=self.omega,
            gamma=self.gamma, kappa=kappa, mu=self.mu, rho=self.rho,
        )


@dataclass(frozen=True)
class RegimeCell:
    """One grid cell: analytic label plus the optional simulation verdict.

    ``sim_collapsed`` is None when simulation was not requested or could not
    decide within the horizon cap. ``sim_agrees`` compares the simulated
    attractor (capital to zero versus a positive plateau) with the analytic
    label; a decided disagreement is flagged, never overwritten.
    """

    kappa: float
    alpha: float
    beta: float
    regime: Regime
    sim_collapsed: bool | None = None
    sim_agrees: bool | None = None


# Simulation probe settings: canonical perturbed start, capital thresholds
# for "collapsed" and "plateaued", and the horizon-doubling cap.
PROBE_START = (1.0, 1.0, 1.0, 1.0)
_COLLAPSE_LEVEL = 1e-10
_PLATEAU_SLOPE = 1e-6
_PLATEAU_LEVEL = 1e-6
_CHUNK = 50.0


def simulate_collapse(
    p: DimensionlessParams,
    horizon: float = 500.0,
    max_horizon: float = 32000.0,
    cfg: IntegratorConfig | None = None,
) -> bool | None:
    """Probe the attractor from the canonical start (1, 1, 1, 1).

    Returns True when capital decays to zero, False when it plateaus at a
    positive level, None when undecided by ``max_horizon`` (which only
    happens in a thin band around the critical boundary, where the slow
    eigenvalue vanishes and no finite horizon separates the attractors).
    Integration proceeds in chunks so collapse is detected long before
    capital underflows.
    """
    cfg = cfg or IntegratorConfig(rel_tol=1e-8, abs_tol=1e-12)
    p_arr = p.to_array()
    y = np.array(PROBE_START, dtype=np.float64)
    t = 0.0
    v_prev = y[0]
    checkpoint = horizon
    while t < max_horizon:
        t_next = t + _CHUNK
        status, fail_t, _, states = _kernels.rk45_solve(
            _kernels.RHS_DIMENSIONLESS, p_arr, y, t,
            np.array([t_next]), cfg.rel_tol, cfg.abs_tol, 0.0,
            cfg.min_step, cfg.max_steps, True,
        )
        if status != _kernels.OK:
            return None
        y = states[-1].copy()
        v = y[0]
        if v < _COLLAPSE_LEVEL:
            return True
        if t_next >= checkpoint:
            slope = (math.log(v) - math.log(v_prev)) / _CHUNK
            if abs(slope) < _PLATEAU_SLOPE and v > _PLATEAU_LEVEL:
                return False
            checkpoint *= 2.0
        v_prev = v
        t = t_next
    return None


def _evaluate_cell(grid: RegimeGrid, kappa: float, alpha: float, beta: float,
                   verify: bool, horizon: float) -> RegimeCell:
    p = grid.params_at(kappa, alpha, beta)
    regime = classify_regime(p)
    if not verify:
        return RegimeCell(kappa, alpha, beta, regime)
    collapsed = simulate_collapse(p, horizon=horizon)
    agrees = None
    if collapsed is not None:
        agrees = collapsed == (regime.kind is RegimeKind.UNSUSTAINABLE)
    return RegimeCell(kappa, alpha, beta, regime, collapsed, agrees)


def regime_map(
    grid: RegimeGrid = RegimeGrid(),
    verify_by_simulation: bool = False,
    horizon: float = 500.0,
    threads: int = 1,
) -> list[RegimeCell]:
    """Classify every (beta, kappa, alpha) cell; optionally verify each one
    by integrating from the canonical start and checking the attractor.

    Cells are returned in deterministic (beta, kappa, alpha) order whatever
    the worker count.
    """
    jobs = [
        (kappa, alpha, beta)
        for beta in grid.beta_values
        for kappa in grid.kappa_values
        for alpha in grid.alpha_values
    ]
    if threads <= 1:
        return [
            _evaluate_cell(grid, kappa, alpha, beta, verify_by_simulation, horizon)
            for kappa, alpha, beta in jobs
        ]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_evaluate_cell, grid, kappa, alpha, beta,
                        verify_by_simulation, horizon)
            for kappa, alpha, beta in jobs
        ]
        return [f.result() for f in futures]


def regime_map_rows(cells: list[RegimeCell]) -> tuple[list[str], list[list]]:
    """Long-format table of a regime map (for CSV/JSON export)."""
    header = ["kappa", "alpha", "beta", "critical_ratio", "surplus_ratio",
              "regime", "simulated_agreement"]
    rows = []
    for c in cells:
        rows.append([
            c.kappa, c.alpha, c.beta, c.regime.critical_ratio,
            c.regime.surplus_ratio,
            "boundary" if c.regime.boundary else c.regime.kind.value,
            "" if c.sim_agrees is None else c.sim_agrees,
        ])
    return header, rows


# ---------------------------------------------------------------------------
# Sensitivity of the critical ratio to the dimensional parameters
# ---------------------------------------------------------------------------

SENSITIVITY_REFERENCE = DimensionalParams(
    a=0.2, b=140.0, e=0.033, f=1.0, g=80.0, w=0.33, s=1.0, k=0.5,
    h=1e8, m=0.1, q=160.0, r=0.1,
)
_SENSITIVITY_PARAMS = ("q", "b", "e", "a", "w", "s", "k")


def _critical_ratio_dimensional(p: DimensionalParams) -> float:
    # delta, mu, rho do not enter the ratio; any positive initial state works.
    dp, _ = nondimensionalise(p, InitialState(1.0, 1.0, 1.0, 1.0))
    return critical_ratio(dp)


def sensitivity_curves(
    reference: DimensionalParams = SENSITIVITY_REFERENCE,
    multipliers=np.linspace(0.1, 3.0, 30),
    which: str | None = None,
) -> dict[str, list[tuple[float, float]]]:
    """Critical ratio as each of {q, b, e, a, w, s, k} is scaled away from
    its reference value, one parameter at a time.

    Returns {parameter: [(multiplier, critical_ratio), ...]}. ``which``
    restricts the sweep to a single parameter.
    """
    names = _SENSITIVITY_PARAMS if which is None else (which,)
    for name in names:
        if name not in _SENSITIVITY_PARAMS:
            raise DomainError(
                f"sensitivity is defined for {_SENSITIVITY_PARAMS}, got {name!r}"
            )
    multipliers = np.asarray(multipliers, dtype=np.float64)
    if np.any(multipliers <= 0) or not np.all(np.isfinite(multipliers)):
        raise DomainError("multipliers must be positive and finite")
    curves: dict[str, list[tuple[float, float]]] = {}
    for name in names:
        points = []
        for mult in multipliers:
            value = getattr(reference, name) * float(mult)
            if name == "k" and not value < 1:
                continue  # trade strength saturates at 1
            scaled = reference.replace(**{name: value})
            points.append((float(mult), _critical_ratio_dimensional(scaled)))
        curves[name] = points
    return curves


def sensitivity_rows(curves: dict[str, list[tuple[float, float]]]) -> tuple[list[str], list[list]]:
    header = ["parameter", "multiplier", "critical_ratio"]
    rows = [
        [name, mult, ratio]
        for name in curves
        for mult, ratio in curves[name]
    ]
    return header, rows
