"""Simulation and analysis of incrementally similar stationary processes."""

from .analysis import (AnalysisConfig, CollapseDistance, DensityEstimate, ISReport, LagTable, MatchResult,
                       collapse_distance, decorrelation_block, density_log, increments, is_report, match_lags,
                       standardize, variance_by_lag)
from .bssprime import (AbsGaussRoot, BssPrimeSpec, LogTrawl, VariogramTable, bssprime_variogram_formula,
                       bssprime_variogram_mc, lag_identify, simulate_bssprime, variogram_first_principles,
                       vol_moments)
from .distributions import (GaussianSeed, NIGParams, NIGSeed, StableParams, StableSeed, nig_fit, nig_logpdf,
                            nig_moment_estimate, nig_pdf, nig_sample, stable_sample)
from .errors import *  # noqa: F401,F403
from .gaussian_process import (Exponential, PowerDecay, StretchedExponential, TimeSeries, corr_eval,
                               corr_invert, simulate_gaussian)
from .lss import ExpKernel, PowerKernel, g_hat, i_alpha, match_lag_stable, simulate_lss
from .trawl import (CorrelationTrawl, ExponentialTrawl, PowerTrawl, TrawlProcessSpec, autodependence,
                    simulate_trawl, trawl_area)

__version__ = "0.1.0"
