use std::sync::atomic::{AtomicU64, Ordering};

/// Comparison tolerance used when nothing else has been configured.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

static TOLERANCE_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695);

/// Process-wide comparison tolerance for ties, open-interval boundaries and
/// strict positivity checks.
pub fn tolerance() -> f64 {
    f64::from_bits(TOLERANCE_BITS.load(Ordering::Relaxed))
}

/// Overrides the comparison tolerance. Meant to be called once at start-up;
/// non-positive or non-finite values are ignored.
pub fn set_tolerance(eps: f64) {
    if eps.is_finite() && eps > 0.0 {
        TOLERANCE_BITS.store(eps.to_bits(), Ordering::Relaxed);
    }
}
