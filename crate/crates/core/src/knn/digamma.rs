use crate::error::{Error, Result};

/// The digamma function ψ(x) for x > 0.
///
/// Shifts the argument above 10 with ψ(x) = ψ(x + 1) − 1/x, then sums the
/// asymptotic series in 1/x².
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma requires a finite x > 0, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // Bernoulli-number coefficients B_2k / 2k
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    shift + x.ln() - 0.5 / x - series
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn at_one() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-14);
    }

    #[test]
    fn at_ten() {
        // ψ(10) = H_9 − γ
        let h9: f64 = (1..10).map(|k| 1.0 / k as f64).sum();
        let v = digamma(10.0).unwrap();
        assert!((v - (h9 - EULER_GAMMA)).abs() < 1e-13);
        assert!((v - 2.251_752_589_1).abs() < 1e-10);
    }

    #[test]
    fn half() {
        // ψ(1/2) = −γ − 2 ln 2
        let v = digamma(0.5).unwrap();
        assert!((v - (-EULER_GAMMA - 2.0 * std::f64::consts::LN_2)).abs() < 1e-13);
    }

    #[test]
    fn domain() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.5).is_err());
        assert!(digamma(f64::NAN).is_err());
    }
}
