"""Two-component interval-Gaussian mixtures: estimation and hard instances."""

__version__ = "0.1.0"

from .errors import (DegenerateComponent, DimensionMismatch, EmptySample,
                     HermixError, InsufficientSamples, InvalidBalance,
                     NoValidPartition, NonFiniteDensity, OrderTooLarge,
                     OverlappingIntervals, PrecisionExhausted, SingularMatrix)
from .estimator import (ComponentEstimate, GramSystem, build_gram, choose_ell,
                        error_split, estimate, project_empirical,
                        project_via_kde, solve_components)
from .hermite import (HermiteBasis, gaussian_overlap, hermite_fn,
                      inner_shifted, inner_with_gaussian)
from .intervals import IntervalPair, IntervalSearchConfig, cluster_grid, find_intervals
from .lowerbound import (GridProjection, HardInstance, RateRow, beta,
                         build_hard_instance, distinguish_demo, gs_inner,
                         project_gaussian, projection_coeffs_closed, rate_table)
from .mixture import (IntervalGaussian, MixingDensity, SampleSet,
                      TwoComponentMixture, distance, pdf_eval, sample)
from .numerics import (BigReal, DenseMatrix, required_precision, solve_linear)

__all__ = [name for name in dir() if not name.startswith("_")]
