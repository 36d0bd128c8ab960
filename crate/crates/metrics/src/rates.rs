//! Collision probability and motion loss rate: exact rational quotients.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RateError {
    #[error("cs_total must be positive")]
    ZeroCsTotal,
    #[error("collisions ({collisions}) exceed cs_total ({cs_total})")]
    CollisionsExceedTotal { collisions: u64, cs_total: u64 },
    #[error("n_s must be positive")]
    ZeroSent,
    #[error("n_a ({n_a}) exceeds n_s ({n_s}); peak counting is defective")]
    ExecutedExceedsSent { n_s: u64, n_a: u64 },
}

/// collisions / cs_total.
pub fn p_collision(collisions: u64, cs_total: u64) -> Result<f64, RateError> {
    if cs_total == 0 {
        return Err(RateError::ZeroCsTotal);
    }
    if collisions > cs_total {
        return Err(RateError::CollisionsExceedTotal { collisions, cs_total });
    }
    Ok(collisions as f64 / cs_total as f64)
}

/// Motion loss rate (n_s - n_a) / n_s.
pub fn mlr(n_s: u64, n_a: u64) -> Result<f64, RateError> {
    if n_s == 0 {
        return Err(RateError::ZeroSent);
    }
    if n_a > n_s {
        return Err(RateError::ExecutedExceedsSent { n_s, n_a });
    }
    Ok((n_s - n_a) as f64 / n_s as f64)
}

/// p_collision scaled by 10^3 and fixed to 6 decimals, the table format used
/// in reports.
pub fn format_p_collision_millis(p: f64) -> String {
    format!("{:.6}", p * 1e3)
}
