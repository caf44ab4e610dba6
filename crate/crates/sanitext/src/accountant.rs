//! Privacy accountant for the clipped-sampling decoder.
//!
//! Each generated token is an exponential-mechanism selection whose privacy
//! loss is bounded by twice the clipped logit range divided by the sampling
//! temperature; sequential composition over the token budget gives the
//! document-level guarantee
//!
//! ```text
//! epsilon = 2 * n_tokens * width / temperature
//! ```
//!
//! where `width` is the widest per-coordinate clipping interval. The budget
//! is always charged for the full token allowance: stopping early on an
//! end-of-sequence token is data-dependent, so refunding unused steps would
//! break the composition argument.

use crate::error::{Error, Result};
use crate::logits::ClipBounds;

/// Document-level privacy parameter for a clipped, temperature-scaled
/// sampling run of up to `n_tokens` tokens.
pub fn epsilon_for(bounds: &ClipBounds, temperature: f64, n_tokens: usize) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    if n_tokens == 0 {
        return Err(Error::InvalidParameter(
            "n_tokens must be at least 1".into(),
        ));
    }
    Ok(2.0 * n_tokens as f64 * bounds.width() / temperature)
}
