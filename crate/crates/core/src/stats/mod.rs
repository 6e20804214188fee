//! Descriptive statistics and Kolmogorov-Smirnov tests used by the verifiers.

mod ks;
mod summary;

pub use ks::{kolmogorov_sf, ks_one_sample, ks_two_sample, two_sample_exact_sf, KsResult};
pub use summary::{iqr, median, normal_cdf, quantile, skewness, Summary};
