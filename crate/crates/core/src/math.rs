//! Standard normal density and distribution function.

pub const SQRT_2PI: f64 = 2.5066282746310002;

pub fn norm_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / SQRT_2PI
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((norm_pdf(0.0) - 0.3989422804014327).abs() < 1e-16);
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        assert!(norm_cdf(-40.0) >= 0.0 && norm_cdf(40.0) <= 1.0);
    }
}
