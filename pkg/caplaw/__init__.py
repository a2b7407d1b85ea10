from ._errors import (CaplawError, DomainError, BracketError, ResourceLimitError, InvariantViolation,
                      EstimationError, ConjugateTruncationWarning, DegenerateInfimumWarning)
from ._nfunc import (NFunctionSpec, ConjugateQuery, ConjugateResult, phi_p_eval, phi_p_derivative,
                     phi_p_dual_index, analytic_conjugate, numeric_conjugate, scaled_conjugate,
                     verify_quadratic_nfunction, verify_conjugate_is_quadratic)
from ._expectation import (DiscreteModelFamily, GaussianMeanFamily, DiscreteRandomVariable, EventSet, McEstimate,
                           MeanBand, family_from_dict, family_to_dict, upper_expectation_exact,
                           lower_expectation_exact, upper_probability_exact, lower_capacity_exact,
                           mean_uncertainty, is_quasi_sure, gaussian_log_exp_moment,
                           gaussian_family_log_upper_exp_moment, gaussian_family_argmax_mean,
                           gaussian_expectation_band, gaussian_upper_probability, gaussian_lower_capacity,
                           mc_upper_expectation, verify_sublinear_axioms, verify_capacity_axioms,
                           verify_sigma_subadditivity, verify_independence_factorization)
from ._subgauss import (SubGaussianParams, LogMgfOracle, SubGaussianCheck, TailBoundResult, SubGaussianCertificate,
                        default_lambda_grid, check_phi_subgaussian, check_classical_subgaussian, tau_phi,
                        gaussian_tau_closed_form, chernoff_exponent, tail_bound, empirical_tail_capacity,
                        subgaussian_certificate)
from ._slln import (TheoremConstants, SllnConfig, CapacityEstimate, CheckpointRate, SllnReport, theorem_constants,
                    lemma_bound_at_n, gamma_fn, integral_bound, series_partial_sum, series_table, lemma_curve,
                    simulate_running_means, slln_report)
from ._report import PropertyCheck, PropertyReport, emit_outputs, write_csv, write_json
from ._utility import ensure_directory_exists, spawn_generator, _update_configuration
from ._pipeline import Pipeline

__all__ = [
    'CaplawError',
    'DomainError',
    'BracketError',
    'ResourceLimitError',
    'InvariantViolation',
    'EstimationError',
    'ConjugateTruncationWarning',
    'DegenerateInfimumWarning',
    'NFunctionSpec',
    'ConjugateQuery',
    'ConjugateResult',
    'phi_p_eval',
    'phi_p_derivative',
    'phi_p_dual_index',
    'analytic_conjugate',
    'numeric_conjugate',
    'scaled_conjugate',
    'verify_quadratic_nfunction',
    'verify_conjugate_is_quadratic',
    'DiscreteModelFamily',
    'GaussianMeanFamily',
    'DiscreteRandomVariable',
    'EventSet',
    'McEstimate',
    'MeanBand',
    'family_from_dict',
    'family_to_dict',
    'upper_expectation_exact',
    'lower_expectation_exact',
    'upper_probability_exact',
    'lower_capacity_exact',
    'mean_uncertainty',
    'is_quasi_sure',
    'gaussian_log_exp_moment',
    'gaussian_family_log_upper_exp_moment',
    'gaussian_family_argmax_mean',
    'gaussian_expectation_band',
    'gaussian_upper_probability',
    'gaussian_lower_capacity',
    'mc_upper_expectation',
    'verify_sublinear_axioms',
    'verify_capacity_axioms',
    'verify_sigma_subadditivity',
    'verify_independence_factorization',
    'SubGaussianParams',
    'LogMgfOracle',
    'SubGaussianCheck',
    'TailBoundResult',
    'SubGaussianCertificate',
    'default_lambda_grid',
    'check_phi_subgaussian',
    'check_classical_subgaussian',
    'tau_phi',
    'gaussian_tau_closed_form',
    'chernoff_exponent',
    'tail_bound',
    'empirical_tail_capacity',
    'subgaussian_certificate',
    'TheoremConstants',
    'SllnConfig',
    'CapacityEstimate',
    'CheckpointRate',
    'SllnReport',
    'theorem_constants',
    'lemma_bound_at_n',
    'gamma_fn',
    'integral_bound',
    'series_partial_sum',
    'series_table',
    'lemma_curve',
    'simulate_running_means',
    'slln_report',
    'PropertyCheck',
    'PropertyReport',
    'emit_outputs',
    'write_csv',
    'write_json',
    'ensure_directory_exists',
    'spawn_generator',
    '_update_configuration',
    'Pipeline',
]

__version__ = "0.1.0"
