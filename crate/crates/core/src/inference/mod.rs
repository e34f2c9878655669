//! Posterior and empirical functionals.

mod cramer;
mod loglinear;
pub(crate) use loglinear::canonical_masks;
mod replicate;
mod summary;

pub use cramer::{
    cramers_v_empirical, cramers_v_empirical_matrix, cramers_v_from_table, cramers_v_model,
    cramers_v_model_matrix, CramersVMatrix,
};
pub use loglinear::{
    loglinear_for_subset, loglinear_from_tensor, loglinear_from_tensor_for, tensor_from_loglinear,
    tensor_from_loglinear_dense, LogLinearCoeffs,
};
pub use replicate::{replicate_aggregate, AggregateRow, IntervalOutcome};
pub use summary::{
    posterior_functional_summary, quantile_sorted, significance_decision, summarize, Functional,
    Histogram, Significance, SummaryReport, DEFAULT_BINS,
};
