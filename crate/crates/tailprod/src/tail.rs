//! Assembles the asymptotic tail report: hypothesis certification, the
//! regular-variation index, required moment exponents, and the closed-form
//! limit constant on rectangles, plus the column-rescaling and
//! positivization transforms.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::lp::{
    certify_uniqueness, dual_info, solve_primal, LpError, RationalMatrix, SolveStatus,
    Uniqueness, DEFAULT_ENUM_BUDGET,
};
use crate::marginals::MarginalModel;
use crate::rational::{
    format_rational, human_rational, rational_pow, rational_to_f64, RationalField, Value,
};

/// Full problem instance: exponent matrix, thresholds and factor laws.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub a: RationalMatrix,
    pub c: Vec<BigRational>,
    pub marginals: Vec<MarginalModel>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), TailError> {
        if self.c.len() != self.a.rows() {
            return Err(TailError::Invalid(format!(
                "c has {} entries, matrix has {} rows",
                self.c.len(),
                self.a.rows()
            )));
        }
        if self.marginals.len() != self.a.cols() {
            return Err(TailError::Invalid(format!(
                "{} marginals for {} columns",
                self.marginals.len(),
                self.a.cols()
            )));
        }
        if let Some(i) = self.c.iter().position(|v| !v.is_positive()) {
            return Err(TailError::Invalid(format!(
                "threshold c[{}] = {} must be positive",
                i + 1,
                format_rational(&self.c[i])
            )));
        }
        for (j, m) in self.marginals.iter().enumerate() {
            m.validate()
                .map_err(|e| TailError::Invalid(format!("marginal {}: {e}", j + 1)))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum TailError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("rescale factor must be nonzero")]
    ZeroScale,
    #[error("inconsistent certificates: {0}")]
    InconsistentCertificates(String),
    #[error("positivization epsilon must be positive")]
    BadEpsilon,
}

/// Why `analyze` refused to produce a limit constant.
#[derive(Debug, thiserror::Error)]
pub enum AnalyzeError {
    #[error("{0}")]
    Invalid(String),
    #[error("hypothesis violation: {message}")]
    HypothesisViolation {
        message: String,
        log: Vec<HypothesisCheck>,
        /// Alternative optimal kappa, when non-uniqueness is the failure.
        witness: Option<Vec<BigRational>>,
    },
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
}

/// One certified (or failed) hypothesis with supporting detail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub condition: String,
    pub status: CheckStatus,
    pub detail: String,
    /// Supremum of admissible eps for moment conditions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_max: Option<Value>,
}

impl HypothesisCheck {
    fn pass(condition: &str, detail: String) -> Self {
        Self {
            condition: condition.to_string(),
            status: CheckStatus::Pass,
            detail,
            eps_max: None,
        }
    }

    fn fail(condition: &str, detail: String) -> Self {
        Self {
            condition: condition.to_string(),
            status: CheckStatus::Fail,
            detail,
            eps_max: None,
        }
    }
}

/// Everything the limit formula yields for one certified instance.
#[derive(Debug, Clone)]
pub struct TailReport {
    pub kappa: Vec<BigRational>,
    pub kappa_hat: Vec<BigRational>,
    /// Columns with kappa_j > 0 (0-based).
    pub basic_columns: Vec<usize>,
    /// Sum of kappa, the optimal LP value.
    pub objective: BigRational,
    /// Index of regular variation, `-objective`.
    pub rv_index: BigRational,
    pub det_a_kappa: BigRational,
    /// Required moment exponent per non-basic column (0-based).
    pub beta: BTreeMap<usize, BigRational>,
    /// E(X_j^{beta_j}) per non-basic column.
    pub moment_values: BTreeMap<usize, Value>,
    pub c: Vec<BigRational>,
    pub constant_at_c: Value,
    pub hypothesis_log: Vec<HypothesisCheck>,
}

impl TailReport {
    /// `|det A_kappa|^{-1} prod c_i^{-khat_i} / prod khat_i * prod moments`
    /// for a new threshold vector, without re-solving the LP.
    pub fn limit_constant(&self, c: &[BigRational]) -> Value {
        evaluate_constant(&self.det_a_kappa, &self.kappa_hat, &self.moment_values, c)
    }

    /// The threshold-free coefficient `|det A_kappa|^{-1} / prod khat_i`.
    pub fn coefficient(&self) -> BigRational {
        let det_abs = self.det_a_kappa.abs();
        let denom = self
            .kappa_hat
            .iter()
            .fold(BigRational::one(), |acc, v| acc * v);
        (det_abs * denom).recip()
    }

    pub fn certified(&self) -> bool {
        self.hypothesis_log
            .iter()
            .all(|h| h.status == CheckStatus::Pass)
    }

    /// Human-readable rendering used by the CLI.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let fmt_vec = |v: &[BigRational]| {
            v.iter()
                .map(human_rational)
                .collect::<Vec<_>>()
                .join(", ")
        };
        out.push_str(&format!("kappa: ({})\n", fmt_vec(&self.kappa)));
        out.push_str(&format!("kappa_hat: ({})\n", fmt_vec(&self.kappa_hat)));
        out.push_str(&format!(
            "basis columns: {:?}\n",
            self.basic_columns.iter().map(|j| j + 1).collect::<Vec<_>>()
        ));
        out.push_str(&format!("objective: {}\n", human_rational(&self.objective)));
        out.push_str(&format!("index: {}\n", human_rational(&self.rv_index)));
        out.push_str(&format!(
            "det A_kappa: {}\n",
            human_rational(&self.det_a_kappa)
        ));
        for (j, beta) in &self.beta {
            out.push_str(&format!(
                "beta[{}]: {}   E(X^beta): {}\n",
                j + 1,
                human_rational(beta),
                self.moment_values[j].human()
            ));
        }
        out.push_str(&format!("coefficient: {}\n", human_rational(&self.coefficient())));
        out.push_str(&format!("c: ({})\n", fmt_vec(&self.c)));
        out.push_str(&format!("constant: {}\n", self.constant_at_c.human()));
        out.push_str("hypotheses:\n");
        for h in &self.hypothesis_log {
            let status = match h.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
            };
            out.push_str(&format!("  [{status}] {}: {}\n", h.condition, h.detail));
        }
        out
    }
}

/// JSON shape of the report: exact rationals as `p/q` plus decimal fields.
#[derive(Serialize, Deserialize)]
struct TailReportJson {
    kappa: Vec<RationalField>,
    kappa_hat: Vec<RationalField>,
    basic_columns: Vec<usize>,
    objective: RationalField,
    rv_index: RationalField,
    det_a_kappa: RationalField,
    beta: BTreeMap<String, RationalField>,
    moment_values: BTreeMap<String, Value>,
    c: Vec<RationalField>,
    constant_at_c: Value,
    hypothesis_log: Vec<HypothesisCheck>,
}

impl Serialize for TailReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let wrap = |v: &[BigRational]| v.iter().cloned().map(RationalField).collect::<Vec<_>>();
        TailReportJson {
            kappa: wrap(&self.kappa),
            kappa_hat: wrap(&self.kappa_hat),
            basic_columns: self.basic_columns.iter().map(|j| j + 1).collect(),
            objective: RationalField(self.objective.clone()),
            rv_index: RationalField(self.rv_index.clone()),
            det_a_kappa: RationalField(self.det_a_kappa.clone()),
            beta: self
                .beta
                .iter()
                .map(|(j, v)| ((j + 1).to_string(), RationalField(v.clone())))
                .collect(),
            moment_values: self
                .moment_values
                .iter()
                .map(|(j, v)| ((j + 1).to_string(), v.clone()))
                .collect(),
            c: wrap(&self.c),
            constant_at_c: self.constant_at_c.clone(),
            hypothesis_log: self.hypothesis_log.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TailReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = TailReportJson::deserialize(d)?;
        let unwrap = |v: Vec<RationalField>| v.into_iter().map(|r| r.0).collect::<Vec<_>>();
        let parse_key = |k: &String| -> Result<usize, D::Error> {
            let idx: usize = k
                .parse()
                .map_err(|_| D::Error::custom(format!("bad column key {k:?}")))?;
            idx.checked_sub(1)
                .ok_or_else(|| D::Error::custom("column keys are 1-based"))
        };
        let mut beta = BTreeMap::new();
        for (k, v) in &j.beta {
            beta.insert(parse_key(k)?, v.0.clone());
        }
        let mut moment_values = BTreeMap::new();
        for (k, v) in &j.moment_values {
            moment_values.insert(parse_key(k)?, v.clone());
        }
        Ok(TailReport {
            kappa: unwrap(j.kappa),
            kappa_hat: unwrap(j.kappa_hat),
            basic_columns: j.basic_columns.iter().map(|c| c - 1).collect(),
            objective: j.objective.0,
            rv_index: j.rv_index.0,
            det_a_kappa: j.det_a_kappa.0,
            beta,
            moment_values,
            c: unwrap(j.c),
            constant_at_c: j.constant_at_c,
            hypothesis_log: j.hypothesis_log,
        })
    }
}

fn evaluate_constant(
    det_a_kappa: &BigRational,
    kappa_hat: &[BigRational],
    moment_values: &BTreeMap<usize, Value>,
    c: &[BigRational],
) -> Value {
    if moment_values.values().any(|m| !m.is_finite()) {
        return Value::Infinite;
    }
    let det_abs = det_a_kappa.abs();
    let denom = kappa_hat
        .iter()
        .fold(BigRational::one(), |acc, v| acc * v);
    let mut acc = Value::Exact((det_abs * denom).recip());
    for (ci, khat) in c.iter().zip(kappa_hat.iter()) {
        let factor = match rational_pow(ci, &-khat.clone()) {
            Some(r) => Value::Exact(r),
            None => Value::Approx(rational_to_f64(ci).powf(-rational_to_f64(khat))),
        };
        acc = acc.mul(&factor);
    }
    for m in moment_values.values() {
        acc = acc.mul(m);
    }
    acc
}

/// Runs the full pipeline with the default enumeration budget.
pub fn analyze(spec: &ProblemSpec) -> Result<TailReport, AnalyzeError> {
    analyze_with_budget(spec, DEFAULT_ENUM_BUDGET)
}

/// Solves the LP, certifies the limit formula's hypotheses and evaluates the
/// limit constant. Hypothesis failures are errors carrying the check log;
/// an infinite moment is not an error, it yields `constant = +inf`.
pub fn analyze_with_budget(spec: &ProblemSpec, budget: u64) -> Result<TailReport, AnalyzeError> {
    spec.validate().map_err(|e| AnalyzeError::Invalid(e.to_string()))?;
    let a = &spec.a;
    let n = a.rows();
    let mut log: Vec<HypothesisCheck> = Vec::new();

    let sol = solve_primal(a);
    match sol.status {
        SolveStatus::Optimal => {
            log.push(HypothesisCheck::pass(
                "lp-optimal",
                format!("optimal value {}", format_rational(&sol.objective)),
            ));
        }
        SolveStatus::Infeasible => {
            let detail = match sol.infeasible_row {
                Some(i) => format!("row {} has no positive entry", i + 1),
                None => "no feasible point".to_string(),
            };
            log.push(HypothesisCheck::fail("lp-optimal", detail.clone()));
            return Err(AnalyzeError::HypothesisViolation {
                message: format!("linear program infeasible: {detail}"),
                log,
                witness: None,
            });
        }
        SolveStatus::Unbounded => {
            return Err(AnalyzeError::Invalid(
                "LP reported unbounded; objective is bounded below by 0, this is a solver invariant violation".into(),
            ))
        }
    }

    let uniq = certify_uniqueness(a, &sol, budget)?;
    let mut witness = None;
    match &uniq.outcome {
        Uniqueness::Unique => log.push(HypothesisCheck::pass(
            "uniqueness",
            format!("certified via {}", uniq.method),
        )),
        Uniqueness::NotUnique { witness: w } => {
            witness = Some(w.clone());
            log.push(HypothesisCheck::fail(
                "uniqueness",
                format!(
                    "alternative optimum ({})",
                    w.iter().map(format_rational).collect::<Vec<_>>().join(", ")
                ),
            ));
        }
        Uniqueness::Inconclusive { reason } => {
            log.push(HypothesisCheck::fail("uniqueness", reason.clone()))
        }
    }

    if sol.is_nondegenerate {
        log.push(HypothesisCheck::pass(
            "non-degeneracy",
            format!("{n} strictly positive components, A kappa = 1"),
        ));
    } else {
        let positive = sol.kappa.iter().filter(|k| k.is_positive()).count();
        log.push(HypothesisCheck::fail(
            "non-degeneracy",
            format!("{positive} positive components, need exactly {n}; consider the vertices listing"),
        ));
    }

    let basic_columns: Vec<usize> = (0..a.cols())
        .filter(|&j| sol.kappa[j].is_positive())
        .collect();
    for &j in &basic_columns {
        if spec.marginals[j].is_standard_pareto() {
            log.push(HypothesisCheck::pass(
                &format!("rv-index-minus-one[{}]", j + 1),
                "Pareto(1) factor on a basic column".to_string(),
            ));
        } else {
            log.push(HypothesisCheck::fail(
                &format!("rv-index-minus-one[{}]", j + 1),
                format!(
                    "basic column {} needs a factor regularly varying with index -1 (exact Pareto(1) here); rescale the column first",
                    j + 1
                ),
            ));
        }
    }

    if log.iter().any(|h| h.status == CheckStatus::Fail) {
        let failed: Vec<&str> = log
            .iter()
            .filter(|h| h.status == CheckStatus::Fail)
            .map(|h| h.condition.as_str())
            .collect();
        return Err(AnalyzeError::HypothesisViolation {
            message: format!("failed conditions: {}", failed.join(", ")),
            log,
            witness,
        });
    }

    let dual = dual_info(a, &sol)?;
    if let Some(i) = dual.kappa_hat.iter().position(|v| !v.is_positive()) {
        log.push(HypothesisCheck::fail(
            "dual-nondegeneracy",
            format!("kappa_hat[{}] = 0", i + 1),
        ));
        return Err(AnalyzeError::HypothesisViolation {
            message: "dual solution has a zero component".into(),
            log,
            witness: None,
        });
    }

    let mut beta = BTreeMap::new();
    let mut moment_values = BTreeMap::new();
    for j in 0..a.cols() {
        if sol.kappa[j].is_positive() {
            continue;
        }
        // beta_j = (1^T A_kappa^{-1} A)_j = 1 - reduced_cost_j
        let beta_j = BigRational::one() - &dual.reduced_costs[j];
        let moment = spec.marginals[j].moment(&beta_j);
        let margin = spec.marginals[j].moment_margin(&beta_j);
        let pass = match &margin {
            Value::Infinite => true,
            Value::Exact(r) => r.is_positive(),
            Value::Approx(v) => *v > 0.0,
        };
        let mut check = if pass {
            HypothesisCheck::pass(
                &format!("moment-condition[{}]", j + 1),
                format!(
                    "E(X^{{beta +- eps}}) finite near beta = {}",
                    format_rational(&beta_j)
                ),
            )
        } else {
            // Infinite constant, not a broken hypothesis: keep analyzing.
            HypothesisCheck::fail(
                &format!("moment-condition[{}]", j + 1),
                format!(
                    "E(X^{{{}}}) diverges; limit constant is +inf",
                    format_rational(&beta_j)
                ),
            )
        };
        check.eps_max = Some(margin);
        log.push(check);
        beta.insert(j, beta_j);
        moment_values.insert(j, moment);
    }

    let constant_at_c = evaluate_constant(&dual.det_a_kappa, &dual.kappa_hat, &moment_values, &spec.c);

    let rv_index = -sol.objective.clone();
    Ok(TailReport {
        kappa: sol.kappa,
        kappa_hat: dual.kappa_hat,
        basic_columns,
        objective: -rv_index.clone(),
        rv_index,
        det_a_kappa: dual.det_a_kappa,
        beta,
        moment_values,
        c: spec.c.clone(),
        constant_at_c,
        hypothesis_log: log,
    })
}

/// Substitutes `X_j -> X_j^s`: column j of A is divided by s. The caller is
/// responsible for replacing the marginal law accordingly.
pub fn rescale_column(
    a: &RationalMatrix,
    j: usize,
    s: &BigRational,
) -> Result<RationalMatrix, TailError> {
    if s.is_zero() {
        return Err(TailError::ZeroScale);
    }
    if j >= a.cols() {
        return Err(TailError::Invalid(format!("column {j} out of range")));
    }
    let mut out = a.clone();
    for i in 0..a.rows() {
        out.set_entry(i, j, a.entry(i, j) / s);
    }
    Ok(out)
}

/// Default positivization epsilon: a tenth of the most negative entry's
/// magnitude, floored at 1/100.
pub fn default_positivize_epsilon(a: &RationalMatrix) -> BigRational {
    let mut min = a.entry(0, 0).clone();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if *a.entry(i, j) < min {
                min = a.entry(i, j).clone();
            }
        }
    }
    let floor = BigRational::new(1.into(), 100.into());
    let tenth = min.abs() / BigRational::from_integer(10.into());
    if tenth > floor {
        tenth
    } else {
        floor
    }
}

/// Equivalent-program transform: returns a matrix whose columns with
/// kappa_j > 0 have all positive entries, with `A~ kappa = 1` preserved and
/// the exceedance region only enlarged.
///
/// Construction: `a~_ij = (a_ij + a_min sum_k a_kj khat_k) / (1 + a_min sum kappa)`
/// with `a_min = -(min entry) + eps`. If every entry of A is already
/// positive the matrix is returned unchanged.
pub fn positivize(
    a: &RationalMatrix,
    kappa: &[BigRational],
    kappa_hat: &[BigRational],
    epsilon: &BigRational,
) -> Result<RationalMatrix, TailError> {
    if !epsilon.is_positive() {
        return Err(TailError::BadEpsilon);
    }
    let n = a.rows();
    let m = a.cols();
    if kappa.len() != m || kappa_hat.len() != n {
        return Err(TailError::InconsistentCertificates(
            "kappa/kappa_hat dimensions do not match the matrix".into(),
        ));
    }
    if kappa.iter().any(|k| k.is_negative()) || kappa_hat.iter().any(|k| k.is_negative()) {
        return Err(TailError::InconsistentCertificates(
            "kappa and kappa_hat must be nonnegative".into(),
        ));
    }
    let one = BigRational::one();
    let ax = a.mul_vec(kappa);
    if ax.iter().any(|v| *v < one) {
        return Err(TailError::InconsistentCertificates(
            "kappa is not primal feasible (A kappa >= 1 fails)".into(),
        ));
    }
    let priced = a.vec_mul(kappa_hat);
    if priced.iter().any(|v| *v > one) {
        return Err(TailError::InconsistentCertificates(
            "kappa_hat is not dual feasible (A^T kappa_hat <= 1 fails)".into(),
        ));
    }
    let sum_kappa: BigRational = kappa.iter().fold(BigRational::zero(), |acc, v| acc + v);
    let sum_hat: BigRational = kappa_hat.iter().fold(BigRational::zero(), |acc, v| acc + v);
    if sum_kappa != sum_hat {
        return Err(TailError::InconsistentCertificates(
            "strong duality fails: sum kappa != sum kappa_hat".into(),
        ));
    }
    // Complementary slackness on the basic columns, used by the construction.
    for j in 0..m {
        if kappa[j].is_positive() && priced[j] != one {
            return Err(TailError::InconsistentCertificates(format!(
                "(A^T kappa_hat)_{} = {} but kappa_{} > 0",
                j + 1,
                format_rational(&priced[j]),
                j + 1
            )));
        }
    }

    let mut min = a.entry(0, 0).clone();
    for i in 0..n {
        for j in 0..m {
            if *a.entry(i, j) < min {
                min = a.entry(i, j).clone();
            }
        }
    }
    if min.is_positive() {
        return Ok(a.clone());
    }
    let a_min = -min + epsilon;
    let denom = &one + &a_min * &sum_kappa;
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(m);
        for j in 0..m {
            row.push((a.entry(i, j) + &a_min * &priced[j]) / &denom);
        }
        entries.push(row);
    }
    Ok(RationalMatrix::new(entries)?)
}
