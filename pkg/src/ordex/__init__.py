"""Order-dependent feature contributions and the L-score for redundancy/synergy discovery."""

__version__ = "0.1.0"

from .errors import ArgumentError, CapacityError, InsufficientData, NumericalError, OrdexError
from .synthgen import Dataset, gen_independent, gen_redundancy, gen_synergy, gen_triple
from .model import ModelSpec, SplitSpec, SubsetMseCache, marginal_reduction, subset_mse
from .ordering import (PairCloud, TrialRecord, TrialSet, build_pair_clouds, export_triad_cloud,
                       run_exhaustive, run_sampled)
from .geometry import (CloudGeometry, PairScore, ScoreMatrix, cloud_geometry, cloud_pca,
                       detect_higher_order, dominance, horizontalness, l_score, pair_score,
                       score_matrix, skinniness)
from .baselines import (MetricMatrix, mutual_information_matrix, pearson_matrix,
                        shapley_interaction_matrix, shapley_values)
