//! Numerical verification of the analytic outputs: seeded Monte Carlo
//! estimation of the exceedance ratio, a nested-quadrature oracle for the
//! exact probability at finite x, and tail-slope fitting.

pub mod quadrature;

pub use quadrature::{exact_prob, QuadResult};

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::marginals::MarginalModel;
use crate::rational::rational_to_f64;
use crate::tail::{ProblemSpec, TailReport};

/// Name recorded in result metadata so runs are reproducible across
/// implementations of the same generator.
pub const PRNG_NAME: &str = "xoshiro256++";

#[derive(Debug, Clone, thiserror::Error)]
pub enum VerifyError {
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error("limit constant is infinite; the ratio has no finite target")]
    InfiniteConstant,
    #[error("quadrature supports at most 4 factors, got {0}")]
    TooManyFactors(usize),
    #[error("tolerance not reached: achieved absolute error {achieved:.3e} on value {value:.6e}")]
    ToleranceNotReached { achieved: f64, value: f64 },
    #[error("slope fit needs at least 3 usable points, got {usable}")]
    NotEnoughPoints { usable: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Strictly increasing thresholds, all > 1.
    pub x_grid: Vec<f64>,
    pub samples_per_x: u64,
    pub seed: u64,
    pub chunks: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        if self.x_grid.is_empty() {
            return Err(VerifyError::BadConfig("x_grid is empty".into()));
        }
        if self.x_grid.iter().any(|&x| !(x > 1.0)) {
            return Err(VerifyError::BadConfig("all grid points must be > 1".into()));
        }
        if self.x_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(VerifyError::BadConfig(
                "x_grid must be strictly increasing".into(),
            ));
        }
        if self.samples_per_x == 0 {
            return Err(VerifyError::BadConfig("samples_per_x must be >= 1".into()));
        }
        if self.chunks == 0 {
            return Err(VerifyError::BadConfig("chunks must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub x: f64,
    pub hits: u64,
    pub n: u64,
    pub p_hat: f64,
    pub normalizer: f64,
    pub ratio: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub rows: Vec<SimulationRow>,
    pub seed: u64,
    pub chunks: u64,
    pub prng: String,
}

impl SimulationResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,hits,N,p_hat,normalizer,ratio,stderr\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.x, r.hits, r.n, r.p_hat, r.normalizer, r.ratio, r.stderr
            ));
        }
        out
    }
}

/// The normalizing function: product of the basic factors' survival
/// probabilities at `x^{kappa_j}`. For Pareto(1) basic factors this is
/// exactly `x^{-sum kappa}`.
pub fn normalizer(spec: &ProblemSpec, report: &TailReport, x: f64) -> f64 {
    report
        .basic_columns
        .iter()
        .map(|&j| {
            let k = rational_to_f64(&report.kappa[j]);
            spec.marginals[j].survival(x.powf(k))
        })
        .product()
}

enum Sampler {
    /// ln X = -ln(u) / alpha
    Pareto { inv_alpha: f64 },
    /// ln X is a point mass.
    Constant { ln_value: f64 },
}

impl Sampler {
    fn from(m: &MarginalModel) -> Self {
        match m {
            MarginalModel::Pareto { alpha } => Sampler::Pareto {
                inv_alpha: 1.0 / rational_to_f64(alpha),
            },
            MarginalModel::Constant { value } => Sampler::Constant {
                ln_value: rational_to_f64(value).ln(),
            },
        }
    }
}

/// Monte Carlo estimate of `P(event at x) / normalizer(x)` per grid point.
///
/// Events are evaluated in log space (`sum_j a_ij ln X_j > ln(c_i x)`), so
/// negative exponents cannot overflow. Chunks run in parallel; each chunk
/// seeds its own generator from `seed XOR global_chunk_index` through the
/// generator's SplitMix64 expansion, and per-chunk hit counts are summed in
/// index order, so the output is byte-identical regardless of scheduling.
pub fn estimate_ratio(
    spec: &ProblemSpec,
    report: &TailReport,
    cfg: &SimulationConfig,
) -> Result<SimulationResult, VerifyError> {
    cfg.validate()?;
    if !report.constant_at_c.is_finite() {
        return Err(VerifyError::InfiniteConstant);
    }
    let n_rows = spec.a.rows();
    let m = spec.a.cols();
    let af: Vec<Vec<f64>> = (0..n_rows)
        .map(|i| (0..m).map(|j| rational_to_f64(spec.a.entry(i, j))).collect())
        .collect();
    let ln_c: Vec<f64> = spec.c.iter().map(|c| rational_to_f64(c).ln()).collect();
    let samplers: Vec<Sampler> = spec.marginals.iter().map(Sampler::from).collect();

    let mut rows = Vec::with_capacity(cfg.x_grid.len());
    for (xi, &x) in cfg.x_grid.iter().enumerate() {
        let thresholds: Vec<f64> = ln_c.iter().map(|lc| lc + x.ln()).collect();
        let base = cfg.samples_per_x / cfg.chunks;
        let extra = cfg.samples_per_x % cfg.chunks;
        let hits: u64 = (0..cfg.chunks)
            .into_par_iter()
            .map(|chunk| {
                let count = base + u64::from(chunk < extra);
                let global = xi as u64 * cfg.chunks + chunk;
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed ^ global);
                let mut ln_x = vec![0.0f64; m];
                let mut hits = 0u64;
                for _ in 0..count {
                    for (v, s) in ln_x.iter_mut().zip(samplers.iter()) {
                        *v = match s {
                            Sampler::Pareto { inv_alpha } => {
                                // u in (0, 1]: 1 - gen() keeps ln finite.
                                let u: f64 = 1.0 - rng.gen::<f64>();
                                -u.ln() * inv_alpha
                            }
                            Sampler::Constant { ln_value } => *ln_value,
                        };
                    }
                    let hit = af.iter().zip(thresholds.iter()).all(|(row, &t)| {
                        row.iter().zip(ln_x.iter()).map(|(a, y)| a * y).sum::<f64>() > t
                    });
                    hits += u64::from(hit);
                }
                hits
            })
            .sum();
        let n = cfg.samples_per_x;
        let p_hat = hits as f64 / n as f64;
        let norm = normalizer(spec, report, x);
        let stderr = (p_hat * (1.0 - p_hat) / n as f64).sqrt() / norm;
        rows.push(SimulationRow {
            x,
            hits,
            n,
            p_hat,
            normalizer: norm,
            ratio: p_hat / norm,
            stderr,
        });
    }
    Ok(SimulationResult {
        rows,
        seed: cfg.seed,
        chunks: cfg.chunks,
        prng: PRNG_NAME.to_string(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Bootstrap 95% confidence interval for the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub used_points: usize,
    pub dropped_points: usize,
}

fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 * sxx.max(1.0) {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    Some((slope, (sy - slope * sx) / n))
}

/// Least-squares slope of `ln p` against `ln x` over `(x, p)` points, with a
/// seeded case-resampling bootstrap 95% interval. Points with `p <= 0`
/// (all-zero hit counts) are dropped; at least 3 usable points are required.
pub fn slope_fit(points: &[(f64, f64)], seed: u64) -> Result<SlopeFit, VerifyError> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|&(x, p)| (x.ln(), p.ln()))
        .collect();
    let dropped = points.len() - usable.len();
    if usable.len() < 3 {
        return Err(VerifyError::NotEnoughPoints {
            usable: usable.len(),
        });
    }
    let (slope, intercept) = least_squares(&usable).ok_or(VerifyError::NotEnoughPoints {
        usable: usable.len(),
    })?;

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let resamples = 1000;
    let mut slopes = Vec::with_capacity(resamples);
    let mut sample = Vec::with_capacity(usable.len());
    for _ in 0..resamples {
        sample.clear();
        for _ in 0..usable.len() {
            sample.push(usable[rng.gen_range(0..usable.len())]);
        }
        if let Some((s, _)) = least_squares(&sample) {
            slopes.push(s);
        }
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (ci_low, ci_high) = if slopes.is_empty() {
        (slope, slope)
    } else {
        let lo = ((slopes.len() as f64) * 0.025).floor() as usize;
        let hi = (((slopes.len() as f64) * 0.975).ceil() as usize).min(slopes.len()) - 1;
        (slopes[lo], slopes[hi])
    };
    Ok(SlopeFit {
        slope,
        intercept,
        ci_low,
        ci_high,
        used_points: usable.len(),
        dropped_points: dropped,
    })
}

/// Convenience: the predicted slope is `-sum kappa`, as a float.
pub fn predicted_slope(report: &TailReport) -> f64 {
    -report
        .kappa
        .iter()
        .filter(|k| k.is_positive())
        .map(rational_to_f64)
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::RationalMatrix;
    use crate::tail::analyze;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn pareto(p: i64, q: i64) -> MarginalModel {
        MarginalModel::pareto(rat(p, q)).unwrap()
    }

    fn unit_spec() -> ProblemSpec {
        ProblemSpec {
            a: RationalMatrix::from_i64(&[vec![(1, 1)]]),
            c: vec![rat(1, 1)],
            marginals: vec![pareto(1, 1)],
        }
    }

    #[test]
    fn config_validation() {
        let ok = SimulationConfig {
            x_grid: vec![10.0, 100.0],
            samples_per_x: 100,
            seed: 1,
            chunks: 4,
        };
        assert!(ok.validate().is_ok());
        for bad in [
            SimulationConfig { x_grid: vec![], ..ok.clone() },
            SimulationConfig { x_grid: vec![0.5, 2.0], ..ok.clone() },
            SimulationConfig { x_grid: vec![100.0, 10.0], ..ok.clone() },
            SimulationConfig { samples_per_x: 0, ..ok.clone() },
            SimulationConfig { chunks: 0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn degenerate_ratio_concentrates_at_one() {
        // A=[[1]], Pareto(1): p(x) = 1/x exactly, ratio = p_hat * x -> 1.
        let spec = unit_spec();
        let report = analyze(&spec).unwrap();
        let cfg = SimulationConfig {
            x_grid: vec![10.0],
            samples_per_x: 200_000,
            seed: 7,
            chunks: 8,
        };
        let res = estimate_ratio(&spec, &report, &cfg).unwrap();
        let row = &res.rows[0];
        assert!((row.normalizer - 0.1).abs() < 1e-15);
        assert!(
            (row.ratio - 1.0).abs() <= 4.0 * row.stderr,
            "ratio {} stderr {}",
            row.ratio,
            row.stderr
        );
        assert_eq!(res.prng, PRNG_NAME);
    }

    #[test]
    fn deterministic_across_runs_and_chunk_counts_matter_not_for_validity() {
        let spec = unit_spec();
        let report = analyze(&spec).unwrap();
        let cfg = SimulationConfig {
            x_grid: vec![5.0, 50.0],
            samples_per_x: 10_000,
            seed: 123,
            chunks: 3,
        };
        let a = estimate_ratio(&spec, &report, &cfg).unwrap();
        let b = estimate_ratio(&spec, &report, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.to_csv().starts_with("x,hits,N,p_hat,normalizer,ratio,stderr\n"));
    }

    #[test]
    fn rejects_infinite_constant_target() {
        // Breiman matrix with Pareto(1/2) second factor: constant = +inf.
        let spec = ProblemSpec {
            a: RationalMatrix::from_i64(&[vec![(1, 1), (1, 2)]]),
            c: vec![rat(1, 1)],
            marginals: vec![pareto(1, 1), pareto(1, 2)],
        };
        let report = analyze(&spec).unwrap();
        let cfg = SimulationConfig {
            x_grid: vec![10.0],
            samples_per_x: 10,
            seed: 1,
            chunks: 1,
        };
        assert!(matches!(
            estimate_ratio(&spec, &report, &cfg),
            Err(VerifyError::InfiniteConstant)
        ));
    }

    #[test]
    fn normalizer_is_power_law_for_pareto_one() {
        // kappa = (3/2, 1), both Pareto(1): normalizer = x^{-5/2}.
        let spec = ProblemSpec {
            a: RationalMatrix::from_i64(&[vec![(1, 1), (-1, 2)], vec![(0, 1), (1, 1)]]),
            c: vec![rat(1, 1), rat(1, 1)],
            marginals: vec![pareto(1, 1), pareto(1, 1)],
        };
        let report = analyze(&spec).unwrap();
        for x in [2.0, 10.0, 1e4] {
            let n = normalizer(&spec, &report, x);
            assert!(
                (n - x.powf(-2.5)).abs() <= 1e-12 * n,
                "normalizer({x}) = {n}"
            );
        }
        assert!((predicted_slope(&report) + 2.5).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_exact_power_curve() {
        let pts: Vec<(f64, f64)> = [100.0, 1000.0, 1e4, 1e5]
            .iter()
            .map(|&x: &f64| (x, x.powf(-1.0)))
            .collect();
        let fit = slope_fit(&pts, 9).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(fit.ci_low <= fit.slope && fit.slope <= fit.ci_high);
    }

    #[test]
    fn slope_fit_drops_zeros_and_requires_three() {
        let pts = vec![(10.0, 1e-3), (100.0, 1e-4), (1000.0, 0.0), (1e4, 1e-6)];
        let fit = slope_fit(&pts, 1).unwrap();
        assert_eq!(fit.used_points, 3);
        assert_eq!(fit.dropped_points, 1);
        assert!(matches!(
            slope_fit(&[(10.0, 1e-3), (100.0, 0.0), (1000.0, 1e-5)], 1),
            Err(VerifyError::NotEnoughPoints { usable: 2 })
        ));
    }

    #[test]
    fn result_json_round_trip() {
        let spec = unit_spec();
        let report = analyze(&spec).unwrap();
        let cfg = SimulationConfig {
            x_grid: vec![10.0],
            samples_per_x: 1000,
            seed: 5,
            chunks: 2,
        };
        let res = estimate_ratio(&spec, &report, &cfg).unwrap();
        let json = serde_json::to_string(&res).unwrap();
        let parsed: SimulationResult = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, res);
    }
}
