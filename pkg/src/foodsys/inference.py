"""Bayesian estimation of the food-system model from monthly series.

Twenty quantities are sampled: ten model parameters (a, e, f, k, h, w, m,
q, r, s), the four initial conditions and six lognormal noise scales. The
capital production cost b and the capital conversion factor g are fixed
constants, known well enough beforehand to exclude from sampling.

Each positive quantity is sampled as log(value/scale) with a fixed
magnitude divisor so everything lives on a comparable scale; the trade
strength k uses a logit transform. All transformed coordinates get
standard normal priors.

Observation model (all lognormal, missing cells ignorable): the herd
series follows capital C, the price series follows P, production follows
f*g*C, imports follow k*h, exports follow k*f*g*C, and the new-supplies
series follows the model's total inventory inflow
f*g*C + k*(h - f*g*C) = production + imports - exports by default
(``supplies_target="state"`` fits inventory I instead).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import _kernels
from .data import Dataset, SERIES_NAMES
from .diagnostics import ess, hdi, rhat
from .errors import DomainError, SchemaError
from .integrator import IntegratorConfig
from .mcmc import ChainRun, run_chains
from .model import DimensionalParams, InitialState

__all__ = [
    "PARAM_NAMES",
    "INIT_NAMES",
    "NOISE_NAMES",
    "SAMPLED_NAMES",
    "DEFAULT_SCALES",
    "FIXED_B",
    "FIXED_G",
    "ParamTransform",
    "TransformSet",
    "ObservationNoise",
    "McmcConfig",
    "ModelPosterior",
    "PosteriorChains",
    "PosteriorSummary",
    "SummaryRow",
    "log_prior",
    "log_likelihood",
    "log_likelihood_parts",
    "sample_posterior",
    "summarize",
    "derived_draws",
    "derived_posteriors",
    "posterior_predictive",
    "PredictiveEnsemble",
    "simulate_dataset",
]

logger = logging.getLogger(__name__)

PARAM_NAMES = ("a", "e", "f", "k", "h", "w", "m", "q", "r", "s")
INIT_NAMES = ("C0", "I0", "D0", "P0")
NOISE_NAMES = ("sigma_herd", "sigma_supplies", "sigma_price",
               "eps_production", "eps_imports", "eps_exports")
SAMPLED_NAMES = PARAM_NAMES + INIT_NAMES + NOISE_NAMES

# Cost of capital production [pence/kg] and capital conversion factor
# [kg/head]: fixed, not sampled.
FIXED_B = 138.3
FIXED_G = 82.4

# Magnitude divisors: value = scale * exp(theta) under a standard normal
# prior on theta, so each divisor is a prior guess of the magnitude.
DEFAULT_SCALES: dict[str, float] = {
    "a": 0.01, "e": 0.001, "f": 1.0, "h": 2e8, "w": 0.25,
    "m": 0.1, "q": 100.0, "r": 0.1, "s": 1.0,
    "C0": 4e5, "I0": 1e8, "D0": 2e8, "P0": 100.0,
    "sigma_herd": 0.1, "sigma_supplies": 0.1, "sigma_price": 0.1,
    "eps_production": 0.1, "eps_imports": 0.1, "eps_exports": 0.1,
}

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ParamTransform:
    """Map between a constrained parameter and its unconstrained coordinate."""

    name: str
    kind: str  # "log" | "logit"
    scale: float = 1.0

    def forward(self, value: float) -> float:
        if self.kind == "log":
            if value <= 0:
                raise DomainError(f"{self.name} must be positive, got {value!r}")
            return math.log(value / self.scale)
        if not 0 < value < 1:
            raise DomainError(f"{self.name} must be in (0, 1), got {value!r}")
        return math.log(value / (1.0 - value))

    def inverse(self, theta: float) -> float:
        if self.kind == "log":
            return self.scale * math.exp(theta)
        return 1.0 / (1.0 + math.exp(-theta))


@dataclass(frozen=True)
class TransformSet:
    """Ordered transforms for the full sampled vector."""

    transforms: tuple[ParamTransform, ...]

    @classmethod
    def default(cls, scale_overrides: dict[str, float] | None = None) -> "TransformSet":
        scales = dict(DEFAULT_SCALES)
        for name, value in (scale_overrides or {}).items():
            if name == "k":
                raise DomainError("k is logit-transformed and takes no scale")
            if name not in scales:
                raise DomainError(f"unknown transform scale {name!r}")
            if value <= 0:
                raise DomainError(f"transform scale {name!r} must be positive")
            scales[name] = float(value)
        return cls(tuple(
            ParamTransform(name, "logit") if name == "k"
            else ParamTransform(name, "log", scales[name])
            for name in SAMPLED_NAMES
        ))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.transforms)

    @property
    def dim(self) -> int:
        return len(self.transforms)

    def scales_dict(self) -> dict[str, float]:
        return {t.name: t.scale for t in self.transforms if t.kind == "log"}

    def forward(self, values: np.ndarray) -> np.ndarray:
        return np.array([t.forward(v) for t, v in zip(self.transforms, values)])

    def inverse(self, theta: np.ndarray) -> np.ndarray:
        return np.array([t.inverse(v) for t, v in zip(self.transforms, theta)])

    def inverse_matrix(self, theta: np.ndarray) -> np.ndarray:
        """Vectorised inverse over the trailing axis. Overflow maps to inf,
        which callers treat as an invalid (rejected) point."""
        out = np.empty_like(theta)
        with np.errstate(over="ignore"):
            for i, t in enumerate(self.transforms):
                col = theta[..., i]
                if t.kind == "log":
                    out[..., i] = t.scale * np.exp(col)
                else:
                    out[..., i] = 1.0 / (1.0 + np.exp(-col))
        return out


@dataclass(frozen=True)
class ObservationNoise:
    """Log-space noise scales, one per fitted series."""

    sigma_herd: float
    sigma_supplies: float
    sigma_price: float
    eps_production: float
    eps_imports: float
    eps_exports: float

    def __post_init__(self):
        for f_ in fields(self):
            value = getattr(self, f_.name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"noise scale {f_.name} must be positive, got {value!r}")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f_.name) for f_ in fields(self)], dtype=np.float64)

    @classmethod
    def uniform(cls, scale: float) -> "ObservationNoise":
        return cls(*([scale] * 6))


@dataclass(frozen=True)
class McmcConfig:
    """Sampler configuration; serialisable to/from JSON for the CLI."""

    n_chains: int = 4
    warmup: int = 2500
    draws: int = 2500
    seed: int = 0
    supplies_target: str = "inflow"  # or "state"
    proposal: str = "hybrid"
    steps_per_iter: int = 6
    fixed_b: float = FIXED_B
    fixed_g: float = FIXED_G
    scales: dict = field(default_factory=dict)
    threads: int = 1
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self):
        if self.supplies_target not in ("inflow", "state"):
            raise DomainError(f"supplies_target must be 'inflow' or 'state', "
                              f"got {self.supplies_target!r}")
        if self.fixed_b <= 0 or self.fixed_g <= 0:
            raise DomainError("fixed constants b and g must be positive")

    def transform_set(self) -> TransformSet:
        return TransformSet.default(self.scales)

    def to_dict(self) -> dict:
        return {
            "n_chains": self.n_chains, "warmup": self.warmup, "draws": self.draws,
            "seed": self.seed, "supplies_target": self.supplies_target,
            "proposal": self.proposal, "steps_per_iter": self.steps_per_iter,
            "fixed_b": self.fixed_b,
            "fixed_g": self.fixed_g,
            "scales": self.transform_set().scales_dict(),
            "threads": self.threads,
            "integrator": {
                "rel_tol": self.integrator.rel_tol,
                "abs_tol": self.integrator.abs_tol,
                "max_steps": self.integrator.max_steps,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "McmcConfig":
        known = {"n_chains", "warmup", "draws", "seed", "supplies_target",
                 "proposal", "steps_per_iter", "fixed_b", "fixed_g", "scales",
                 "threads", "integrator"}
        unknown = set(data) - known
        if unknown:
            raise SchemaError(f"McmcConfig: unknown keys {sorted(unknown)}")
        kwargs = dict(data)
        integ = kwargs.pop("integrator", None)
        if integ is not None:
            kwargs["integrator"] = IntegratorConfig(**integ)
        scales = kwargs.get("scales") or {}
        default_scales = dict(DEFAULT_SCALES)
        kwargs["scales"] = {k: v for k, v in scales.items()
                            if k not in default_scales or default_scales[k] != v}
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "McmcConfig":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise SchemaError("MCMC config must be a JSON object")
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------

def log_prior(theta: np.ndarray) -> float:
    """Standard normal log-density summed over all transformed coordinates."""
    theta = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(theta)):
        raise DomainError("theta must be finite")
    return float(-0.5 * np.dot(theta, theta) - 0.5 * theta.size * _LOG_2PI)


def _pack_p12(values: np.ndarray, b: float, g: float) -> np.ndarray:
    a, e, f, k, h, w, m, q, r, s = values[:10]
    return np.array([a, b, e, f, g, w, s, k, h, m, q, r], dtype=np.float64)


def log_likelihood_parts(
    params: DimensionalParams,
    init: InitialState,
    noise: ObservationNoise,
    data: Dataset,
    cfg: IntegratorConfig = IntegratorConfig(),
    supplies_target: str = "inflow",
) -> dict[str, float]:
    """Per-series log-likelihood contributions (series with no observations
    contribute 0.0). Integration failure yields -inf everywhere, logged."""
    if data.total_observed() == 0:
        raise DomainError("dataset has no observed values in any series")
    t_obs = data.t_obs()
    status, fail_t, M = _kernels.model_observables(
        params.to_array(), init.to_array(), t_obs,
        cfg.rel_tol, cfg.abs_tol, cfg.initial_step, cfg.min_step, cfg.max_steps,
    )
    if status != _kernels.OK:
        logger.debug("integration failed at t=%s; likelihood is -inf", fail_t)
        return {name: float("-inf") for name in SERIES_NAMES}
    full = data.data_matrix()
    scales = noise.to_array()
    is_state = supplies_target == "state"
    parts = {}
    for i, name in enumerate(SERIES_NAMES):
        masked = np.full_like(full, np.nan)
        masked[i] = full[i]
        parts[name] = float(_kernels.obs_loglik(M, masked, scales, is_state))
    return parts


def log_likelihood(
    params: DimensionalParams,
    init: InitialState,
    noise: ObservationNoise,
    data: Dataset,
    cfg: IntegratorConfig = IntegratorConfig(),
    supplies_target: str = "inflow",
) -> float:
    """Total lognormal log-likelihood of the observed cells (sum of the
    per-series contributions)."""
    return float(sum(log_likelihood_parts(
        params, init, noise, data, cfg, supplies_target).values()))


class ModelPosterior:
    """Picklable log-posterior on sampler coordinates.

    The sampler works in sheared coordinates: the reference price
    coordinate is shifted by log(w*s + 1/2), the model's own
    inventory-balance factor. At the fast-subsystem equilibrium the
    price level satisfies P ~ q*(w*s + 1/2), so the posterior
    concentrates on a ridge where q*(w*s + 1/2) is nearly constant;
    the shear maps that curved ridge to a straight coordinate. The map
    is volume-preserving (unit triangular Jacobian), so the density in
    sheared coordinates is the plain pushforward and symmetric
    random-walk acceptance ratios need no correction.

    Caches the last ODE solution keyed by the non-noise coordinates, so
    proposals that only move noise scales skip the integration.
    """

    _Q = SAMPLED_NAMES.index("q")
    _W = SAMPLED_NAMES.index("w")
    _S = SAMPLED_NAMES.index("s")

    def __init__(self, data: Dataset, config: McmcConfig):
        if data.total_observed() == 0:
            raise DomainError("dataset has no observed values in any series")
        self.tset = config.transform_set()
        self.t_obs = data.t_obs()
        self.data6 = data.data_matrix()
        self.supplies_is_state = config.supplies_target == "state"
        self.fixed_b = config.fixed_b
        self.fixed_g = config.fixed_g
        self.integ = config.integrator
        scales = self.tset.scales_dict()
        self._ws_scale = scales["w"] * scales["s"]
        self._cache_key: bytes | None = None
        self._cache_M: np.ndarray | None = None

    def _coverage_shift(self, phi: np.ndarray) -> np.ndarray:
        """log(w*s + 1/2) for (..., dim) sampler coordinates. Overflow maps
        to inf and is rejected downstream."""
        with np.errstate(over="ignore"):
            ws = self._ws_scale * np.exp(phi[..., self._W] + phi[..., self._S])
            return np.log(ws + 0.5)

    def to_theta(self, phi: np.ndarray) -> np.ndarray:
        """Sheared sampler coordinates -> transformed coordinates."""
        theta = np.array(phi, dtype=np.float64, copy=True)
        theta[..., self._Q] = phi[..., self._Q] - self._coverage_shift(phi)
        return theta

    def from_theta(self, theta: np.ndarray) -> np.ndarray:
        phi = np.array(theta, dtype=np.float64, copy=True)
        phi[..., self._Q] = theta[..., self._Q] + self._coverage_shift(theta)
        return phi

    def decode(self, phi: np.ndarray) -> np.ndarray:
        return self.tset.inverse(self.to_theta(np.asarray(phi, dtype=np.float64)))

    def decode_matrix(self, phi: np.ndarray) -> np.ndarray:
        return self.tset.inverse_matrix(self.to_theta(np.asarray(phi, dtype=np.float64)))

    def __call__(self, phi: np.ndarray) -> float:
        theta = self.to_theta(np.asarray(phi, dtype=np.float64))
        lp = -0.5 * float(np.dot(theta, theta)) - 0.5 * theta.size * _LOG_2PI
        values = self.tset.inverse_matrix(theta)
        if not np.all(np.isfinite(values)) or np.any(values[:14] <= 0.0):
            return float("-inf")
        k = values[3]
        if not 0.0 < k < 1.0:
            return float("-inf")

        key = theta[:14].tobytes()
        if key == self._cache_key:
            M = self._cache_M
        else:
            cfg = self.integ
            status, _, M = _kernels.model_observables(
                _pack_p12(values, self.fixed_b, self.fixed_g), values[10:14],
                self.t_obs, cfg.rel_tol, cfg.abs_tol, cfg.initial_step,
                cfg.min_step, cfg.max_steps,
            )
            if status != _kernels.OK:
                return float("-inf")
            self._cache_key = key
            self._cache_M = M
        ll = _kernels.obs_loglik(M, self.data6, values[14:20], self.supplies_is_state)
        if not np.isfinite(ll):
            return float("-inf")
        return lp + ll


# ---------------------------------------------------------------------------
# Posterior containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PosteriorChains:
    """Multi-chain draws on the natural (back-transformed) scale.

    ``natural`` has shape (n_chains, n_draws, len(names)). The fixed
    constants b and g are carried alongside and are identical for every
    draw by construction.
    """

    names: tuple[str, ...]
    natural: np.ndarray
    log_post: np.ndarray
    fixed_b: float
    fixed_g: float
    seed: int
    acceptance: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    theta: np.ndarray | None = None

    @property
    def n_chains(self) -> int:
        return self.natural.shape[0]

    @property
    def n_draws(self) -> int:
        return self.natural.shape[1]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def per_chain(self, name: str) -> np.ndarray:
        return self.natural[:, :, self.index(name)]

    def pooled(self, name: str) -> np.ndarray:
        return self.per_chain(name).reshape(-1)

    def natural_row(self, chain: int, draw: int) -> np.ndarray:
        return self.natural[chain, draw]


@dataclass(frozen=True)
class SummaryRow:
    mean: float
    hdi_low: float
    hdi_high: float
    ess: float
    rhat: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "hdi_low": self.hdi_low,
                "hdi_high": self.hdi_high, "ess": self.ess, "rhat": self.rhat}


@dataclass(frozen=True)
class PosteriorSummary:
    rows: dict[str, SummaryRow]
    mass: float = 0.95

    def __getitem__(self, name: str) -> SummaryRow:
        return self.rows[name]

    def to_dict(self) -> dict:
        return {"mass": self.mass,
                "quantities": {name: row.to_dict() for name, row in self.rows.items()}}


def _summary_row(per_chain: np.ndarray, mass: float) -> SummaryRow:
    pooled = per_chain.reshape(-1)
    low, high = hdi(pooled, mass)
    return SummaryRow(float(pooled.mean()), low, high,
                      ess(per_chain), rhat(per_chain))


def summarize(chains: PosteriorChains, mass: float = 0.95) -> PosteriorSummary:
    """Mean, HDI, ESS and split R-hat per sampled quantity."""
    rows = {name: _summary_row(chains.per_chain(name), mass)
            for name in chains.names}
    return PosteriorSummary(rows, mass)


def sample_posterior(data: Dataset, config: McmcConfig = McmcConfig()) -> PosteriorChains:
    """Fit the model to ``data`` with independent adaptive Metropolis chains.

    Deterministic for a fixed seed; chains run in separate processes when
    ``config.threads`` exceeds one, without affecting the draws.
    """
    posterior = ModelPosterior(data, config)
    run: ChainRun = run_chains(
        posterior, posterior.tset.dim,
        n_chains=config.n_chains, warmup=config.warmup, draws=config.draws,
        seed=config.seed, proposal=config.proposal, processes=config.threads,
        steps_per_iter=config.steps_per_iter,
    )
    natural = posterior.decode_matrix(run.draws)
    return PosteriorChains(
        names=SAMPLED_NAMES,
        natural=natural,
        log_post=run.log_density,
        fixed_b=config.fixed_b,
        fixed_g=config.fixed_g,
        seed=config.seed,
        acceptance={
            "global": run.accept_global.tolist(),
            "site": run.accept_site.tolist(),
            "diff": run.accept_diff.tolist(),
        },
        meta=config.to_dict(),
        theta=run.draws,
    )


# ---------------------------------------------------------------------------
# Derived posterior quantities
# ---------------------------------------------------------------------------

DERIVED_NAMES = ("critical_ratio", "surplus_ratio", "critical_kappa",
                 "alpha_minus_surplus", "surplus_minus_one")


def derived_draws(chains: PosteriorChains) -> dict[str, np.ndarray]:
    """Sustainability quantities evaluated per draw (never at posterior
    means), shaped like the chains."""
    a = chains.per_chain("a")
    e = chains.per_chain("e")
    k = chains.per_chain("k")
    w = chains.per_chain("w")
    q = chains.per_chain("q")
    s = chains.per_chain("s")
    alpha = q / chains.fixed_b
    beta = e / a
    omega = w / a
    gamma = 1.0 / (a * s)
    critical = alpha * (omega + gamma / 2.0) / (k * gamma * (1.0 + beta))
    surplus = k * critical
    return {
        "critical_ratio": critical,
        "surplus_ratio": surplus,
        "critical_kappa": surplus,
        "alpha_minus_surplus": alpha - surplus,
        "surplus_minus_one": surplus - 1.0,
    }


def derived_posteriors(chains: PosteriorChains, mass: float = 0.95) -> PosteriorSummary:
    """Summaries of the derived sustainability quantities."""
    rows = {name: _summary_row(draws, mass)
            for name, draws in derived_draws(chains).items()}
    return PosteriorSummary(rows, mass)


# ---------------------------------------------------------------------------
# Posterior predictive and synthetic data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PredictiveEnsemble:
    """Noise-perturbed pseudo-observations at each series' observed months.

    ``draws[name]`` has shape (n_kept, n_observed_months(name));
    ``model[name]`` holds the matching noiseless model observables.
    """

    obs_indices: dict[str, np.ndarray]
    draws: dict[str, np.ndarray]
    model: dict[str, np.ndarray]
    n_requested: int
    n_skipped: int

    @property
    def n_kept(self) -> int:
        return self.n_requested - self.n_skipped

    def bands(self, quantiles=(2.5, 50.0, 97.5)) -> dict[str, np.ndarray]:
        return {name: np.percentile(self.draws[name], quantiles, axis=0)
                for name in self.draws if self.draws[name].size}


_SERIES_TO_ROW = {"herd": 0, "price": 2, "production": 3, "imports": 4, "exports": 5}


def _series_rows(supplies_is_state: bool) -> dict[str, int]:
    rows = dict(_SERIES_TO_ROW)
    rows["new_supplies"] = 1 if supplies_is_state else 6
    return rows


def posterior_predictive(
    chains: PosteriorChains,
    data: Dataset,
    n_draws: int,
    seed: int = 0,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> PredictiveEnsemble:
    """Simulate pseudo-data from ``n_draws`` random posterior draws.

    Draws whose integration fails are skipped and counted. Deterministic
    for a fixed seed.
    """
    if n_draws < 1:
        raise DomainError("n_draws must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    chain_idx = rng.integers(0, chains.n_chains, size=n_draws)
    draw_idx = rng.integers(0, chains.n_draws, size=n_draws)

    supplies_is_state = chains.meta.get("supplies_target", "inflow") == "state"
    rows = _series_rows(supplies_is_state)
    t_obs = data.t_obs()
    obs_indices = {name: np.flatnonzero(~np.isnan(data.series(name)))
                   for name in SERIES_NAMES}
    noise_cols = {name: 14 + i for i, name in enumerate(SERIES_NAMES)}

    kept_draws: dict[str, list[np.ndarray]] = {name: [] for name in SERIES_NAMES}
    kept_model: dict[str, list[np.ndarray]] = {name: [] for name in SERIES_NAMES}
    n_skipped = 0
    for c, d in zip(chain_idx, draw_idx):
        values = chains.natural_row(int(c), int(d))
        status, _, M = _kernels.model_observables(
            _pack_p12(values, chains.fixed_b, chains.fixed_g), values[10:14],
            t_obs, cfg.rel_tol, cfg.abs_tol, cfg.initial_step,
            cfg.min_step, cfg.max_steps,
        )
        if status != _kernels.OK:
            n_skipped += 1
            continue
        for name in SERIES_NAMES:
            idx = obs_indices[name]
            if idx.size == 0:
                continue
            z = M[rows[name], idx]
            scale = values[noise_cols[name]]
            noise = rng.standard_normal(idx.size)
            kept_draws[name].append(np.exp(np.log(z) + scale * noise))
            kept_model[name].append(z)

    draws = {name: (np.vstack(v) if v else np.empty((0, obs_indices[name].size)))
             for name, v in kept_draws.items()}
    model = {name: (np.vstack(v) if v else np.empty((0, obs_indices[name].size)))
             for name, v in kept_model.items()}
    return PredictiveEnsemble(obs_indices, draws, model, n_draws, n_skipped)


def simulate_dataset(
    params: DimensionalParams,
    init: InitialState,
    noise: ObservationNoise,
    n_months: int = 60,
    anchor: str = "2015-01",
    seed: int = 0,
    herd_indices: np.ndarray | None = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    supplies_target: str = "inflow",
) -> Dataset:
    """Generate a synthetic monthly dataset from known parameters.

    All series are fully observed except the herd, which is reported only
    at survey months (June/December by default, matching the bundled
    snapshot's cadence).
    """
    from .data import june_december_indices

    t_obs = np.arange(n_months, dtype=np.float64)
    status, fail_t, M = _kernels.model_observables(
        params.to_array(), init.to_array(), t_obs,
        cfg.rel_tol, cfg.abs_tol, cfg.initial_step, cfg.min_step, cfg.max_steps,
    )
    if status != _kernels.OK:
        raise DomainError(f"model integration failed at t={fail_t}; "
                          "cannot generate data from these parameters")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    rows = _series_rows(supplies_target == "state")
    scales = noise.to_array()
    series = {}
    for i, name in enumerate(SERIES_NAMES):
        z = M[rows[name]]
        series[name] = np.exp(np.log(z) + scales[i] * rng.standard_normal(n_months))
    if herd_indices is None:
        herd_indices = june_december_indices(anchor, n_months)
    herd = np.full(n_months, np.nan)
    herd[herd_indices] = series["herd"][herd_indices]
    return Dataset(anchor, herd, series["new_supplies"], series["price"],
                   series["production"], series["imports"], series["exports"])
