//! Càdlàg step paths on `[0, 1]`, their distances and the rate functions.

mod m1prime;
mod metrics;
mod path;
mod rates;

pub use m1prime::{
    completed_graph, graph_segments, m1prime_bounds, m1prime_lower_flatjump, m1prime_lower_pointgap,
    m1prime_upper, GraphPoint, M1Bounds, Segment, DEFAULT_DENSITY,
};
pub use metrics::{fattening_distance, j1_distance, uniform_distance, Metric, DEFAULT_J1_TOL};
pub use path::{AsStep, DriftStepPath, GridPath, Jump, StepPath};
pub use rates::{
    classify, phi, rate_j1, rate_k_vector, rate_m1prime, rate_multi, rate_phi, rate_rw, Classification,
    ProcessKind, RateInput, RateValue,
};
