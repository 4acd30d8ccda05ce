//! Tail models for the independent factors: exact-Pareto and constant laws,
//! the only families whose survival functions and power moments are closed
//! form, so the limit constant stays exactly computable.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{format_rational, rational_pow, rational_to_f64, serde_rational, Value};

/// One factor's law. `Pareto(alpha)` has `P(X > x) = x^{-alpha}` on `[1, inf)`;
/// `Constant(v)` is the point mass at `v >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MarginalModel {
    Pareto {
        #[serde(with = "serde_rational")]
        alpha: BigRational,
    },
    Constant {
        #[serde(with = "serde_rational")]
        value: BigRational,
    },
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum MarginalError {
    #[error("pareto alpha must be positive, got {0}")]
    BadAlpha(String),
    #[error("constant value must be >= 1, got {0}")]
    BadConstant(String),
}

impl MarginalModel {
    pub fn pareto(alpha: BigRational) -> Result<Self, MarginalError> {
        if !alpha.is_positive() {
            return Err(MarginalError::BadAlpha(format_rational(&alpha)));
        }
        Ok(MarginalModel::Pareto { alpha })
    }

    pub fn constant(value: BigRational) -> Result<Self, MarginalError> {
        if value < BigRational::one() {
            return Err(MarginalError::BadConstant(format_rational(&value)));
        }
        Ok(MarginalModel::Constant { value })
    }

    pub fn validate(&self) -> Result<(), MarginalError> {
        match self {
            MarginalModel::Pareto { alpha } if !alpha.is_positive() => {
                Err(MarginalError::BadAlpha(format_rational(alpha)))
            }
            MarginalModel::Constant { value } if *value < BigRational::one() => {
                Err(MarginalError::BadConstant(format_rational(value)))
            }
            _ => Ok(()),
        }
    }

    /// True when the law is regularly varying with index -1 (exact Pareto(1)).
    pub fn is_standard_pareto(&self) -> bool {
        matches!(self, MarginalModel::Pareto { alpha } if alpha.is_one())
    }

    /// E(X^beta) as an extended value. Pareto(alpha): `alpha/(alpha-beta)` for
    /// beta < alpha, +inf otherwise. Constant(v): `v^beta`, exact when the
    /// power has a rational value, else floating with ~1e-12 relative error.
    pub fn moment(&self, beta: &BigRational) -> Value {
        match self {
            MarginalModel::Pareto { alpha } => {
                if beta < alpha {
                    Value::Exact(alpha / (alpha - beta))
                } else {
                    Value::Infinite
                }
            }
            MarginalModel::Constant { value } => match rational_pow(value, beta) {
                Some(r) => Value::Exact(r),
                None => Value::Approx(
                    rational_to_f64(value).powf(rational_to_f64(beta)),
                ),
            },
        }
    }

    /// P(X > x).
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            MarginalModel::Pareto { alpha } => {
                if x <= 1.0 {
                    1.0
                } else {
                    x.powf(-rational_to_f64(alpha))
                }
            }
            MarginalModel::Constant { value } => {
                if x < rational_to_f64(value) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Inverse-transform sample from a uniform(0,1) variate.
    pub fn sample(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u < 1.0);
        match self {
            MarginalModel::Pareto { alpha } => u.powf(-1.0 / rational_to_f64(alpha)),
            MarginalModel::Constant { value } => rational_to_f64(value),
        }
    }

    /// ln X for a uniform(0,1) variate; the form used by the simulator.
    pub fn sample_ln(&self, u: f64) -> f64 {
        match self {
            MarginalModel::Pareto { alpha } => -u.ln() / rational_to_f64(alpha),
            MarginalModel::Constant { value } => rational_to_f64(value).ln(),
        }
    }

    /// Tail exponent alpha for Pareto models, `None` for constants.
    pub fn pareto_alpha(&self) -> Option<&BigRational> {
        match self {
            MarginalModel::Pareto { alpha } => Some(alpha),
            MarginalModel::Constant { .. } => None,
        }
    }

    /// Largest eps with both moments E(X^{beta +- eps}) finite: for
    /// Pareto(alpha) this is alpha - beta (0 when beta >= alpha); constants
    /// have every moment, reported as +inf.
    pub fn moment_margin(&self, beta: &BigRational) -> Value {
        match self {
            MarginalModel::Pareto { alpha } => {
                if beta < alpha {
                    Value::Exact(alpha - beta)
                } else {
                    Value::Exact(BigRational::zero())
                }
            }
            MarginalModel::Constant { .. } => Value::Infinite,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn pareto(p: i64, q: i64) -> MarginalModel {
        MarginalModel::pareto(rat(p, q)).unwrap()
    }

    #[test]
    fn pareto_moment_closed_form() {
        // alpha/(alpha - beta) = 2/(2 + 7/8) = 16/23
        assert_eq!(
            pareto(2, 1).moment(&rat(-7, 8)),
            Value::Exact(rat(16, 23))
        );
        assert_eq!(pareto(1, 1).moment(&rat(0, 1)), Value::Exact(rat(1, 1)));
        assert_eq!(pareto(1, 1).moment(&rat(1, 1)), Value::Infinite);
    }

    #[test]
    fn pareto_moment_quadrature_cross_check() {
        // E(X^{-7/8}) for Pareto(2): integral of 2 x^{-3} x^{-7/8} on [1, inf)
        // via midpoint rule against the closed form 16/23.
        let mut total = 0.0;
        let steps = 4_000_000;
        let upper = 2000.0;
        let h = (upper - 1.0) / steps as f64;
        for k in 0..steps {
            let x: f64 = 1.0 + (k as f64 + 0.5) * h;
            total += 2.0 * x.powf(-3.0 - 7.0 / 8.0) * h;
        }
        assert!((total - 16.0 / 23.0).abs() < 1e-6, "got {total}");
    }

    #[test]
    fn constant_moment_integer_exact() {
        let m = MarginalModel::constant(rat(3, 2)).unwrap();
        assert_eq!(m.moment(&rat(2, 1)), Value::Exact(rat(9, 4)));
        // 3/2 to the 1/2 is irrational
        match m.moment(&rat(1, 2)) {
            Value::Approx(v) => assert!((v - 1.5f64.sqrt()).abs() < 1e-12),
            other => panic!("expected approx, got {other:?}"),
        }
        // but (9/4)^(1/2) = 3/2 stays exact
        let m94 = MarginalModel::constant(rat(9, 4)).unwrap();
        assert_eq!(m94.moment(&rat(1, 2)), Value::Exact(rat(3, 2)));
    }

    #[test]
    fn survival_values() {
        assert_eq!(pareto(1, 1).survival(1000.0), 1e-3);
        assert_eq!(pareto(2, 1).survival(10.0), 1e-2);
        assert_eq!(pareto(2, 1).survival(0.5), 1.0);
        let c = MarginalModel::constant(rat(3, 1)).unwrap();
        assert_eq!(c.survival(2.0), 1.0);
        assert_eq!(c.survival(4.0), 0.0);
    }

    #[test]
    fn sample_values() {
        assert!((pareto(1, 1).sample(0.5) - 2.0).abs() < 1e-15);
        assert!((pareto(2, 1).sample(0.25) - 2.0).abs() < 1e-15);
        let c = MarginalModel::constant(rat(3, 1)).unwrap();
        assert_eq!(c.sample(0.9), 3.0);
    }

    #[test]
    fn sample_survival_consistency() {
        let models = [pareto(1, 1), pareto(2, 1), pareto(3, 2)];
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        for _ in 0..10_000 {
            let u: f64 = rng.gen_range(1e-12..1.0);
            for m in &models {
                let x = m.sample(u);
                let s = m.survival(x);
                assert!(
                    (s - u).abs() <= 1e-12 * u.max(1e-300),
                    "survival(sample({u})) = {s}"
                );
            }
        }
    }

    #[test]
    fn moment_monotone_in_beta() {
        let m = pareto(2, 1);
        let mut prev = f64::NEG_INFINITY;
        for k in -16..4 {
            let beta = rat(k, 8); // up to 3/8 < 2
            let v = m.moment(&beta).to_f64();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn empirical_moment_matches_closed_form() {
        // beta <= alpha - 1/2 in both cases, with finite variance so the
        // binomial-style 4-sigma band is meaningful.
        for (m, beta_f, expect) in [
            (pareto(2, 1), 0.5, pareto(2, 1).moment(&rat(1, 2)).to_f64()),
            (pareto(3, 1), 1.0, pareto(3, 1).moment(&rat(1, 1)).to_f64()),
        ] {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(42);
            let n = 1_000_000usize;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let u: f64 = 1.0 - rng.gen::<f64>();
                let v = m.sample(u).powf(beta_f);
                sum += v;
                sumsq += v * v;
            }
            let mean = sum / n as f64;
            let var = (sumsq / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - expect).abs() <= 4.0 * se,
                "mean {mean}, expect {expect}, se {se}"
            );
        }
    }

    #[test]
    fn json_round_trip() {
        let p: MarginalModel = serde_json::from_str(r#"{"type":"pareto","alpha":"2"}"#).unwrap();
        assert_eq!(p, pareto(2, 1));
        let c: MarginalModel =
            serde_json::from_str(r#"{"type":"constant","value":"3/2"}"#).unwrap();
        assert_eq!(c, MarginalModel::constant(rat(3, 2)).unwrap());
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"type":"constant","value":"3/2"}"#);
    }
}
