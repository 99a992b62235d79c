use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class priors `(π_p, π_n)`: non-negative and summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pi_p: f64,
    pi_n: f64,
}

impl Priors {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(pi_p: f64, pi_n: f64) -> Result<Self> {
        if !(pi_p.is_finite() && pi_n.is_finite()) {
            return Err(Error::Priors { pi_p, pi_n, reason: "not finite" });
        }
        if pi_p < 0.0 || pi_n < 0.0 {
            return Err(Error::Priors { pi_p, pi_n, reason: "negative prior" });
        }
        if (pi_p + pi_n - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Priors { pi_p, pi_n, reason: "priors must sum to 1" });
        }
        Ok(Self { pi_p, pi_n })
    }

    /// `(π_p, 1 - π_p)`
    pub fn from_positive(pi_p: f64) -> Result<Self> {
        Self::new(pi_p, 1.0 - pi_p)
    }

    /// Empirical frequencies. Both counts must be positive.
    pub fn from_counts(positive: usize, negative: usize) -> Result<Self> {
        if positive == 0 && negative == 0 {
            return Err(Error::Empty("class counts"));
        }
        if positive == 0 || negative == 0 {
            return Err(Error::SingleClass);
        }
        let total = (positive + negative) as f64;
        let pi_p = positive as f64 / total;
        Ok(Self { pi_p, pi_n: negative as f64 / total })
    }

    pub fn pi_p(&self) -> f64 {
        self.pi_p
    }

    pub fn pi_n(&self) -> f64 {
        self.pi_n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Priors::new(0.3, 0.7).is_ok());
        assert!(Priors::new(0.3, 0.6).is_err());
        assert!(Priors::new(-0.1, 1.1).is_err());
        assert!(Priors::new(f64::NAN, 0.5).is_err());
        assert!(Priors::from_positive(1.0).is_ok());
    }

    #[test]
    fn counts() {
        let p = Priors::from_counts(80_035, 29_775).unwrap();
        assert!((p.pi_p() - 0.728850).abs() < 1e-6);
        assert!((p.pi_p() + p.pi_n() - 1.0).abs() <= 1e-12);
        assert_eq!(Priors::from_counts(5, 5).unwrap().pi_p(), 0.5);
        assert!(matches!(Priors::from_counts(3, 0), Err(Error::SingleClass)));
        assert!(matches!(Priors::from_counts(0, 0), Err(Error::Empty(_))));
    }
}
