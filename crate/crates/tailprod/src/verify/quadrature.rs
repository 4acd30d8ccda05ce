//! Quadrature oracle for the exact finite-x probability
//! `P(prod_j X_j^{a_ij} > c_i x for all i)` on small instances (at most 4
//! factors).
//!
//! With `Y_j = ln X_j`, Pareto(alpha) factors become Exponential(alpha)
//! coordinates and Constant(v) factors a known shift of the thresholds, so
//! the probability is the exponential product measure of the polyhedron
//! `{ sum_j a_ij y_j > ln(c_i x) for all i, y >= 0 }`. The innermost
//! coordinate — the one with the largest spread of |a_ij| — is integrated
//! analytically over its exact constraint interval; outer coordinates use
//! adaptive Gauss–Kronrod (G7/K15) panels on a truncated box, with the
//! exponential tail mass beyond the truncation folded into the reported
//! error bound.

use crate::marginals::MarginalModel;
use crate::rational::rational_to_f64;
use crate::tail::ProblemSpec;
use crate::verify::VerifyError;

/// Value with a conservative absolute error bound (panel estimates plus the
/// truncation tail).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
}

// QK15 nodes and weights on [-1, 1] (positive abscissae; symmetric).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
// 7-point Gauss weights for abscissae XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

const MAX_DEPTH: u32 = 60;
const EVAL_BUDGET: u64 = 40_000_000;

struct Integrator<'a> {
    /// Constraint coefficients, row-major, columns ordered outer dims first,
    /// the analytic innermost coordinate last.
    af: Vec<Vec<f64>>,
    /// Exponential rates in the same column order.
    alphas: Vec<f64>,
    thresholds: &'a [f64],
    evals: u64,
}

impl Integrator<'_> {
    /// Probability mass in the innermost coordinate given outer values:
    /// analytic exponential integral over the exact interval the constraints
    /// carve out (possibly empty, possibly unbounded above).
    fn inner_mass(&mut self, outer: &[f64]) -> f64 {
        self.evals += 1;
        let inner_col = self.alphas.len() - 1;
        let alpha = self.alphas[inner_col];
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for (row, &t) in self.af.iter().zip(self.thresholds.iter()) {
            let s = t - row[..inner_col]
                .iter()
                .zip(outer.iter())
                .map(|(a, y)| a * y)
                .sum::<f64>();
            let coef = row[inner_col];
            if coef > 0.0 {
                lo = lo.max(s / coef);
            } else if coef < 0.0 {
                hi = hi.min(s / coef);
            } else if s >= 0.0 {
                return 0.0;
            }
        }
        if hi <= lo {
            return 0.0;
        }
        let upper = if hi.is_finite() { (-alpha * hi).exp() } else { 0.0 };
        (-alpha * lo).exp() - upper
    }

    /// Integrand over outer dimension `d` (density of coordinate `d` folded
    /// in), recursing into dimension `d + 1` with a tightened tolerance.
    fn integrand(&mut self, d: usize, point: &mut Vec<f64>, y: f64, y_max: f64, tol: f64) -> f64 {
        point.push(y);
        let alpha = self.alphas[d];
        let density = alpha * (-alpha * y).exp();
        let value = if d + 1 == self.alphas.len() - 1 {
            self.inner_mass(point)
        } else {
            let (v, _) = self.adaptive(d + 1, point, y_max, tol);
            v
        };
        point.pop();
        density * value
    }

    fn panel(
        &mut self,
        d: usize,
        point: &mut Vec<f64>,
        a: f64,
        b: f64,
        y_max: f64,
        tol: f64,
    ) -> (f64, f64) {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        // Inner recursion tolerance: per-unit-length share of this panel's
        // budget; inner values enter through a density integrating to <= 1.
        let inner_tol = tol * 0.5;
        let mut k15 = WGK[7] * self.integrand(d, point, center, y_max, inner_tol);
        let mut g7 = WG[3] * self.integrand(d, point, center, y_max, inner_tol);
        for (i, &xk) in XGK.iter().enumerate().take(7) {
            let f1 = self.integrand(d, point, center - half * xk, y_max, inner_tol);
            let f2 = self.integrand(d, point, center + half * xk, y_max, inner_tol);
            k15 += WGK[i] * (f1 + f2);
            if i % 2 == 1 {
                g7 += WG[i / 2] * (f1 + f2);
            }
        }
        (half * k15, half * (k15 - g7).abs())
    }

    /// Bisection-adaptive G7/K15 over [lo, hi] in dimension `d`. Returns the
    /// estimate and an error bound; stops refining on tolerance, depth, or
    /// the global evaluation budget.
    fn adaptive(&mut self, d: usize, point: &mut Vec<f64>, y_max: f64, tol: f64) -> (f64, f64) {
        fn go(
            s: &mut Integrator,
            d: usize,
            point: &mut Vec<f64>,
            a: f64,
            b: f64,
            y_max: f64,
            tol: f64,
            depth: u32,
        ) -> (f64, f64) {
            let (v, e) = s.panel(d, point, a, b, y_max, tol);
            if e <= tol || depth >= MAX_DEPTH || s.evals > EVAL_BUDGET {
                return (v, e);
            }
            let mid = 0.5 * (a + b);
            let (v1, e1) = go(s, d, point, a, mid, y_max, tol * 0.5, depth + 1);
            let (v2, e2) = go(s, d, point, mid, b, y_max, tol * 0.5, depth + 1);
            (v1 + v2, e1 + e2)
        }
        go(self, d, point, 0.0, y_max, y_max, tol, 0)
    }
}

/// Computes `P(prod_j X_j^{a_ij} > c_i x for all i)` to the requested
/// relative tolerance. Rejects instances with more than 4 factors; an
/// unreachable tolerance is reported together with the achieved error.
pub fn exact_prob(spec: &ProblemSpec, x: f64, rel_tol: f64) -> Result<QuadResult, VerifyError> {
    if spec.a.cols() > 4 {
        return Err(VerifyError::TooManyFactors(spec.a.cols()));
    }
    assert!(x > 0.0 && rel_tol > 0.0);
    let n = spec.a.rows();
    let m = spec.a.cols();

    // Thresholds ln(c_i x), with constant factors folded in.
    let mut thresholds: Vec<f64> = spec
        .c
        .iter()
        .map(|c| rational_to_f64(c).ln() + x.ln())
        .collect();
    let mut pareto_cols: Vec<(usize, f64)> = Vec::new();
    for j in 0..m {
        match &spec.marginals[j] {
            MarginalModel::Pareto { alpha } => pareto_cols.push((j, rational_to_f64(alpha))),
            MarginalModel::Constant { value } => {
                let lv = rational_to_f64(value).ln();
                for (i, t) in thresholds.iter_mut().enumerate() {
                    *t -= rational_to_f64(spec.a.entry(i, j)) * lv;
                }
            }
        }
    }

    if pareto_cols.is_empty() {
        // Deterministic event.
        let value = if thresholds.iter().all(|&t| t < 0.0) { 1.0 } else { 0.0 };
        return Ok(QuadResult { value, abs_error: 0.0 });
    }

    // Innermost coordinate: largest spread of |a_ij| across rows, ties by
    // the larger maximum and then the higher column index.
    let col_abs = |j: usize| -> Vec<f64> {
        (0..n)
            .map(|i| rational_to_f64(spec.a.entry(i, j)).abs())
            .collect()
    };
    let key = |j: usize| {
        let v = col_abs(j);
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        (max - min, max)
    };
    let inner = pareto_cols
        .iter()
        .map(|&(j, _)| j)
        .max_by(|&a, &b| {
            key(a)
                .partial_cmp(&key(b))
                .unwrap()
                .then(a.cmp(&b))
        })
        .unwrap();

    let mut order: Vec<(usize, f64)> = pareto_cols
        .iter()
        .cloned()
        .filter(|&(j, _)| j != inner)
        .collect();
    order.push(pareto_cols.iter().cloned().find(|&(j, _)| j == inner).unwrap());

    let af: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            order
                .iter()
                .map(|&(j, _)| rational_to_f64(spec.a.entry(i, j)))
                .collect()
        })
        .collect();
    let alphas: Vec<f64> = order.iter().map(|&(_, a)| a).collect();

    // Truncation of the outer box, with the tail mass beyond it reported.
    let min_alpha = alphas.iter().cloned().fold(f64::MAX, f64::min);
    let max_t = thresholds.iter().cloned().fold(0.0f64, f64::max);
    let y_max = (max_t + 40.0) / min_alpha;
    let n_outer = alphas.len() - 1;
    let tail_bound: f64 = alphas[..n_outer]
        .iter()
        .map(|a| (-a * y_max).exp())
        .sum();

    let mut integ = Integrator {
        af,
        alphas,
        thresholds: &thresholds,
        evals: 0,
    };

    if n_outer == 0 {
        let value = integ.inner_mass(&[]);
        return Ok(QuadResult { value, abs_error: 0.0 });
    }

    // The target absolute tolerance depends on the unknown value: iterate,
    // tightening toward rel_tol * value.
    let mut abs_tol = 1e-6f64;
    let mut point: Vec<f64> = Vec::with_capacity(n_outer);
    for _ in 0..20 {
        integ.evals = 0;
        point.clear();
        let (value, err) = integ.adaptive(0, &mut point, y_max, abs_tol);
        let abs_error = err + tail_bound;
        if value <= 0.0 {
            // Empty (or unresolvably thin) region.
            return Ok(QuadResult {
                value: 0.0,
                abs_error: abs_tol + tail_bound,
            });
        }
        let target = rel_tol * value;
        if abs_error <= target {
            return Ok(QuadResult { value, abs_error });
        }
        if integ.evals > EVAL_BUDGET {
            return Err(VerifyError::ToleranceNotReached {
                achieved: abs_error,
                value,
            });
        }
        abs_tol = (target * 0.25).max(1e-300);
    }
    Err(VerifyError::ToleranceNotReached {
        achieved: abs_tol,
        value: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::RationalMatrix;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn pareto(p: i64, q: i64) -> MarginalModel {
        MarginalModel::pareto(rat(p, q)).unwrap()
    }

    fn breiman_spec() -> ProblemSpec {
        ProblemSpec {
            a: RationalMatrix::from_i64(&[vec![(1, 1), (1, 2)]]),
            c: vec![rat(1, 1)],
            marginals: vec![pareto(1, 1), pareto(2, 1)],
        }
    }

    #[test]
    fn univariate_survival() {
        let spec = ProblemSpec {
            a: RationalMatrix::from_i64(&[vec![(1, 1)]]),
            c: vec![rat(1, 1)],
            marginals: vec![pareto(1, 1)],
        };
        let r = exact_prob(&spec, 1000.0, 1e-6).unwrap();
        assert!((r.value - 1e-3).abs() <= 1e-6 * 1e-3 + r.abs_error);
    }

    #[test]
    fn breiman_matches_analytic_formula() {
        // P(X1 X2^{1/2} > x) = (4/3)(1 - x^{-3}) x^{-1} + x^{-4}
        // (condition on X2, integrate the Pareto(1) survival).
        for x in [10.0f64, 100.0, 1e4] {
            let expect = (4.0 / 3.0) * (1.0 - x.powf(-3.0)) / x + x.powf(-4.0);
            let r = exact_prob(&breiman_spec(), x, 1e-5).unwrap();
            assert!(
                (r.value - expect).abs() <= 1e-4 * expect,
                "x={x}: got {}, expect {expect}",
                r.value
            );
            assert!(r.abs_error <= 1e-5 * r.value * 1.01);
        }
    }

    #[test]
    fn two_by_two_matches_analytic_formula() {
        // A = [[1, -1/2], [0, 1]], both Pareto(1):
        // P(X1 > x sqrt(X2), X2 > x) = integral over x2 > x of
        //   x2^{-2} (x sqrt(x2))^{-1} dx2 = (2/3) x^{-5/2}.
        let spec = ProblemSpec {
            a: RationalMatrix::from_i64(&[vec![(1, 1), (-1, 2)], vec![(0, 1), (1, 1)]]),
            c: vec![rat(1, 1), rat(1, 1)],
            marginals: vec![pareto(1, 1), pareto(1, 1)],
        };
        for x in [10.0f64, 100.0] {
            let expect = (2.0 / 3.0) * x.powf(-2.5);
            let r = exact_prob(&spec, x, 1e-5).unwrap();
            assert!(
                (r.value - expect).abs() <= 1e-4 * expect,
                "x={x}: got {}, expect {expect}",
                r.value
            );
        }
    }

    #[test]
    fn constant_factor_shifts_threshold() {
        // X1 Pareto(1), X2 = 4 constant, event X1 * 4^{1/2} > x:
        // probability = 2/x for x >= 2.
        let spec = ProblemSpec {
            a: RationalMatrix::from_i64(&[vec![(1, 1), (1, 2)]]),
            c: vec![rat(1, 1)],
            marginals: vec![pareto(1, 1), MarginalModel::constant(rat(4, 1)).unwrap()],
        };
        let r = exact_prob(&spec, 100.0, 1e-8).unwrap();
        assert!((r.value - 0.02).abs() < 1e-8);
    }

    #[test]
    fn rejects_more_than_four_factors() {
        let spec = ProblemSpec {
            a: RationalMatrix::from_i64(&[vec![(1, 1); 5]]),
            c: vec![rat(1, 1)],
            marginals: vec![pareto(1, 1); 5],
        };
        assert!(matches!(
            exact_prob(&spec, 10.0, 1e-4),
            Err(VerifyError::TooManyFactors(5))
        ));
    }
}
