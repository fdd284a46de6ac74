use crate::{Error, Result};

/// Below this argument the closed form loses digits to cancellation and the
/// Taylor series is used instead.
pub const BOYS_SWITCHOVER: f64 = 1e-7;

const TAYLOR_TERMS: usize = 6;

/// Zeroth-order Boys function `F0(t) = integral_0^1 exp(-t x^2) dx`.
pub fn boys_f0(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("boys_f0 requires t >= 0, got {t}")));
    }
    if t <= BOYS_SWITCHOVER {
        // sum_k (-t)^k / (k! (2k + 1))
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 0..TAYLOR_TERMS {
            sum += term / (2 * k + 1) as f64;
            term *= -t / (k + 1) as f64;
        }
        Ok(sum)
    } else {
        let s = t.sqrt();
        Ok(0.5 * (std::f64::consts::PI / t).sqrt() * libm::erf(s))
    }
}
