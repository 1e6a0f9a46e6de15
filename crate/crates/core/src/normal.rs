//! Standard normal helpers.

use statrs::distribution::{ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::standard()
}

/// `z_{alpha/2}` for a two-sided interval at `level = 1 - alpha`.
pub fn z_for_level(level: f64) -> f64 {
    std_normal().inverse_cdf(0.5 + level / 2.0)
}

/// Two-sided tail probability `2 * Phi(-z)`.
pub fn two_sided_alpha(z: f64) -> f64 {
    2.0 * std_normal().cdf(-z.abs())
}

pub fn cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}
