//! Entropy and optimal-transport estimators over rank sample sets.

mod entropy;
mod special;
mod transport;

pub use entropy::{
    entropy_binning, entropy_nsb, nsb_entropy_from_counts, plug_in_entropy, rank_count_upper_bound, EntropyEstimate,
    EntropyEstimator, RankCountBound,
};
pub use special::trigamma;
pub use transport::{transport_cost, wasserstein_tv};
