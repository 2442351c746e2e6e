"""Simulation laboratory for the local Marchenko-Pastur law of sparse
sample covariance matrices: ensemble sampling, closed-form law analytics,
SVD-based resolvents, self-consistency audits, configuration admissibility,
and the bilinear-form concentration inequality."""

from .concentration import (ConcentrationInput, ConcentrationReport,
                            bilinear_moment_exact, bilinear_moment_mc,
                            evaluate as concentration_evaluate, lemma_rhs)
from .configuration import (ConfigurationMatrix, ConfigurationReport,
                            build_configuration, classify, classify_sample,
                            inadmissibility_probability)
from .errors import (DegenerateConditioningError, DivergentMomentError,
                     ExactEnumerationError, IdentityFailureError,
                     NumericalError, ParameterError, QuadratureError)
from .locallaw import (AuditResult, CorrectionReport, CORRECTION_SIGNS,
                       LocalLawReport, MultiscaleLadder, TnMomentResult,
                       correction_terms, error_term_tn, lambda_n,
                       locallaw_scan, multiscale_ladder,
                       self_consistency_audit, tn_moment_study)
from .mc import MCEstimate
from .model import (EntryDistribution, ModelParams, SampledMatrix, check_c0,
                    moment_4_delta, sample_matrix)
from .mplaw import (BoundSpec, ComplexPoint, DomainSpec, MPLawEval,
                    b_function, bound_eval, d_function, d_n_function,
                    domain_grid, gamma_n, gamma_n_theorem1, mp_cdf,
                    mp_density, mp_edges, mp_eval, prior_bound_tn,
                    stieltjes_mp)
from .spectral import (ResolventEval, SpectrumResult, esd, max_entry,
                       resolvent, resolvent_from_spectrum, resolvent_max_abs,
                       resolvent_minor, singular_values, stieltjes_esd)

__version__ = "0.1.0"

__all__ = [
    "AuditResult", "BoundSpec", "ComplexPoint", "ConcentrationInput",
    "ConcentrationReport", "ConfigurationMatrix", "ConfigurationReport",
    "CorrectionReport", "CORRECTION_SIGNS", "DegenerateConditioningError",
    "DivergentMomentError", "DomainSpec", "EntryDistribution",
    "ExactEnumerationError", "IdentityFailureError", "LocalLawReport",
    "MCEstimate", "MPLawEval", "ModelParams", "MultiscaleLadder",
    "NumericalError", "ParameterError", "QuadratureError", "ResolventEval",
    "SampledMatrix", "SpectrumResult", "TnMomentResult", "b_function",
    "bilinear_moment_exact", "bilinear_moment_mc", "bound_eval", "check_c0",
    "classify", "classify_sample", "concentration_evaluate",
    "build_configuration", "correction_terms", "d_function", "d_n_function",
    "domain_grid", "error_term_tn", "esd", "gamma_n", "gamma_n_theorem1",
    "inadmissibility_probability", "lambda_n", "lemma_rhs", "locallaw_scan",
    "max_entry", "moment_4_delta", "mp_cdf", "mp_density", "mp_edges",
    "mp_eval", "multiscale_ladder", "prior_bound_tn", "resolvent",
    "resolvent_from_spectrum", "resolvent_max_abs", "resolvent_minor",
    "sample_matrix", "self_consistency_audit", "singular_values",
    "stieltjes_esd", "stieltjes_mp", "tn_moment_study",
]
