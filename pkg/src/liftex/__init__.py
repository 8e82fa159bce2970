"""Lifted inference in Markov logic through exchangeable decompositions."""
from .detectors import (ConditionalStructure, Fragment, FragmentClass, classify, monadic_decomposition,
                        two_var_structure)
from .exchange import (CompletionMatrix, Decomposition, EvidenceProfile, enumerate_completion_matrices,
                       enumerate_statistics, evidence_profile, gamma_size, orbit_size, representative,
                       statistic_of, suborbit_size)
from .inference import (QueryResult, bounded_binary_query, conditional_marginal, conditional_mpe,
                        lifted_marginal, lifted_mpe, pair_factor_sum)
from .logic import GroundModel, MLNModel, eval_formula, format_model, ground, parse_model
from .oracle import brute_marginal, brute_mpe, brute_suborbit
from .world import compatible, log_weight, parse_evidence

__version__ = "0.1.0"
