"""Spectral-Galerkin simulation and threshold analysis for a stochastic
predator-prey reaction-diffusion system with Beddington-DeAngelis response."""

from .errors import (BDSPDEError, BlowUpError, ConfigError, DimensionError, DomainError,
                     FitError, GridError, OracleError, PositivityError, PreconditionError)
from .model import CoefficientSet, StatePair, eval_reaction, eval_truncated_reaction
from .noise import NoiseSpec, NoiseStream, basis_bound, sample_increment, trace
from .oracle import PointState, integrate_ode
from .solver import (SolverConfig, TrajectoryRecord, apply_positivity, simulate_ensemble,
                     simulate_galerkin_pair, simulate_trajectory, step)
from .spectral import (Grid, apply_semigroup, build_grid, from_spectral, integrate,
                       to_spectral)
from .thresholds import (EnsembleStats, ThresholdReport, classify, compute_H0, compute_R0,
                         ensemble_reduce, extinction_margin, find_delta, fit_decay_rate,
                         inf_norm, lp_norm, sup_norm)

__version__ = "0.1.0"
