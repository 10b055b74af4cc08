"""Secure HARQ-IR over terahertz links: outage analysis, throughput, and
rate optimization with a Monte Carlo cross-validation path."""

from .thz_channel import (AbsorptionConstants, Environment, LinkConfig,
                          PointingFadingParams, absorption_coefficient,
                          path_gain, pf_cdf, pf_density,
                          pointing_fading_params, sample_channel_gain,
                          saturated_vapor_pressure)
from .specfun import (ContourConfig, ContourSeparationError,
                      ConvergenceError, FoxHSpec, SpecfunError,
                      bromwich_inverse, fox_h, meijer_g_0M_MM,
                      upper_incomplete_gamma)
from .outage_analytic import (HarqConfig, LargeDeviationContext,
                              OutageReport, connection_outage,
                              large_deviation_context, log_mgf, ltat,
                              mi_cdf, mi_cdf_asymptotic, outage_report,
                              rate_function, secrecy_outage, tx_count_pmf)
from .montecarlo import (EpisodeOutcome, EstimateWithCI, MonteCarloReport,
                         estimate_metrics, run_episode, validate_sampler)
from .rate_optimizer import (OptimizationResult, RateConstraints, SearchGrid,
                             check_feasibility, optimize_rates)

__version__ = "0.1.0"
