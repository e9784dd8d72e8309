//! Process-wide residual tolerance.
//!
//! Membership checks (group, algebra) compare residuals against
//! `membership() * max(1, ‖M‖)`. The value can be overridden once at start-up,
//! e.g. from a command-line flag.

use std::sync::atomic::{AtomicU64, Ordering};

pub const DEFAULT_MEMBERSHIP: f64 = 1e-10;

/// Relative threshold for numeric rank: singular values below
/// `RANK_RELATIVE * σ_max` count as zero.
pub const RANK_RELATIVE: f64 = 1e-8;

static MEMBERSHIP: AtomicU64 = AtomicU64::new(0x3DDB_7CDF_D9D7_BDBB); // 1e-10

pub fn membership() -> f64 {
    f64::from_bits(MEMBERSHIP.load(Ordering::Relaxed))
}

/// Overrides the membership tolerance. Non-positive or non-finite values are ignored.
pub fn set_membership(tol: f64) {
    if tol.is_finite() && tol > 0.0 {
        MEMBERSHIP.store(tol.to_bits(), Ordering::Relaxed);
    }
}

pub(crate) fn scaled(norm: f64) -> f64 {
    membership() * norm.max(1.0)
}
