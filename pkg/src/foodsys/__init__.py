"""foodsys: stylised national food-system dynamics.

Simulation, equilibrium/stability analysis and Bayesian parameter
estimation for a four-state commodity model (capital, inventory, demand,
price) with international trade. Hot numerical kernels are JIT-compiled
with numba; set FOODSYS_NO_NUMBA=1 to select the pure-numpy fallback.
"""

from .errors import (
    DataError,
    DomainError,
    FoodsysError,
    FrameError,
    IntegrationError,
    SamplerError,
    SchemaError,
    SingularityError,
)
from .model import (
    DimensionalParams,
    DimensionlessParams,
    Frame,
    InitialState,
    SystemState,
    Trajectory,
    fast_subsystem_equilibrium,
    jacobian_dimensionless,
    nondimensionalise,
    redimensionalise,
    rhs_dimensional,
    rhs_dimensionless,
)
from .integrator import (
    EventResult,
    IntegratorConfig,
    ModelField,
    event_horizon,
    integrate,
)
from .stability import (
    FixedPoint,
    FixedPointKind,
    Regime,
    RegimeGrid,
    RegimeKind,
    StabilityReport,
    classify_regime,
    critical_ratio,
    critical_trade_strength,
    eigenvalues,
    fixed_points,
    regime_map,
    routh_hurwitz_stable_cubic,
    sensitivity_curves,
    stability_report,
    surplus_ratio,
)
from .diagnostics import ess, hdi, rhat
from .data import (
    Dataset,
    UK_CALIBRATION,
    ValidationReport,
    load_bundled_uk_pork,
    load_csv,
    save_csv,
    validate,
)
from .inference import (
    McmcConfig,
    ObservationNoise,
    PosteriorChains,
    PosteriorSummary,
    TransformSet,
    derived_posteriors,
    log_likelihood,
    log_prior,
    posterior_predictive,
    sample_posterior,
    simulate_dataset,
    summarize,
)

__version__ = "0.1.0"
