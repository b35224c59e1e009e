"""Matrix-analytic solver and exact-law simulator for RAP-modulated fluid queues.

Modules
-------
linalg      matrix exponential, Sylvester solves, spectra, null vectors
model       model representation, checks, constructors, zero-regime censoring
passage     first-return matrix ``Psi`` and passage / crossing operators
stationary  stationary law of the queue regulated at zero
sim         orbit / level simulation and Monte Carlo estimators
cli         ``rapflow`` command-line front end
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .linalg import expm, left_null_vector, spectral_abscissa, sylvester_solve
from .model import (
    MINUS,
    PLUS,
    ZERO,
    BlockStructure,
    CensoredModel,
    RapFluidModel,
    Regime,
    ValidationReport,
    censor_zero,
    from_markov_jump,
    from_markov_renewal_me,
    from_me_renewal,
    validate,
)
from .passage import (
    PsiSolution,
    RecordGenerators,
    confined_mean,
    crossing_expectations,
    downward_record,
    exit_law,
    first_return,
    level_hitting_prob,
    psi_quadrature_oracle,
    psi_solve,
    solve_passage,
)
from .stationary import (
    StabilityReport,
    StationarySolution,
    bin_mass,
    density_eval,
    stability_check,
    stationary_solve,
)
from .sim import (
    OrbitState,
    PathRecord,
    SimEstimate,
    estimate_first_return,
    estimate_hitting,
    estimate_stationary,
    flow_step,
    sample_holding_time,
    sample_jump,
    simulate_path,
)
