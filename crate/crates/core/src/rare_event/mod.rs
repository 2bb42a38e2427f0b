//! Estimation of rare-event probabilities for the scaled process and the
//! checks of the extended LDP bounds built on them.

mod concentration;
mod estimate;
mod event;
mod exact;
mod ldp;
mod one_big_jump;
mod truncated;

pub use concentration::{bernstein_bound, bernstein_oracle, etemadi_oracle, OracleOutcome};
pub use estimate::{
    arrivals_given_last, count_hits, estimate_big_jump_conditioned, estimate_plain, plain_result, results_to_csv,
    sample_erlang_above, sample_erlang_below, EstimateResult, Estimator, McSettings, COMPLEMENT_SHARE, CONFIDENCE,
    MIN_TRIALS,
};
pub use event::{EventKind, EventSpec, Interval, CONDITIONING_MARGIN};
pub use exact::{exact_jump_vector_prob, ln_exact_jump_vector_prob};
pub use ldp::{
    ldp_slope_check, product_ldp_check, LdpReport, Method, SlopeSettings, Verdict, DEFAULT_APPROACH_SLACK,
    DEFAULT_TOLERANCE,
};
pub use one_big_jump::{
    centered_tail_bounds, centered_tail_quantile, one_big_jump_check, one_big_jump_exact, panjer, sample_centered_x,
    sd_x, ExactRatioPoint, LatticeLaw, OneBigJumpPoint, OneBigJumpReport, REGIME_SDS,
};
pub use truncated::{
    decay_rate, tail_partial_moment, truncated_sum_tail_check, TruncatedPoint, TruncatedReport, TruncatedSettings,
};
