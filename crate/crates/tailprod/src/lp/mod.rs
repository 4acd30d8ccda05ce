//! Exact rational linear programming for the exponent matrix:
//! the primal `min 1^T x  s.t.  A x >= 1, x >= 0`, its dual data, uniqueness
//! certificates, basic-solution enumeration and the minimax epsilon program.

mod simplex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{format_rational, parse_rational};
use simplex::{solve, SimplexOutcome, StandardLp};

/// Default cap on the number of bases visited by enumeration.
pub const DEFAULT_ENUM_BUDGET: u64 = 100_000;

#[derive(Debug, Clone, thiserror::Error)]
pub enum LpError {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("row {0} has {1} entries, expected {2}")]
    RaggedRow(usize, usize, usize),
    #[error("{0}")]
    BadRational(String),
    #[error("enumeration needs {required} bases, budget is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },
    #[error("dual data requires an optimal solution, got status {0:?}")]
    NotOptimal(SolveStatus),
    #[error("dual data requires a non-degenerate optimum ({0})")]
    Degenerate(String),
    #[error("column {j} violates the positivity hypothesis: a[{i}][{j}] = {entry} <= 0")]
    NonPositiveColumn { i: usize, j: usize, entry: String },
    #[error("column index {0} out of range or kappa[{0}] = 0")]
    BadColumn(usize),
}

/// Dense n x m matrix of exact rational exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMatrix {
    entries: Vec<Vec<BigRational>>,
}

impl RationalMatrix {
    pub fn new(entries: Vec<Vec<BigRational>>) -> Result<Self, LpError> {
        if entries.is_empty() || entries[0].is_empty() {
            return Err(LpError::EmptyMatrix);
        }
        let cols = entries[0].len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != cols {
                return Err(LpError::RaggedRow(i, row.len(), cols));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_strs(rows: &[Vec<&str>]) -> Result<Self, LpError> {
        let entries = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| parse_rational(s).map_err(|e| LpError::BadRational(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(entries)
    }

    /// Convenience for tests: integer-pair entries (p, q).
    pub fn from_i64(rows: &[Vec<(i64, i64)>]) -> Self {
        let entries = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
                    .collect()
            })
            .collect();
        Self::new(entries).expect("valid test matrix")
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries[0].len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i][j]
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.entries[i]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, v: BigRational) {
        self.entries[i][j] = v;
    }

    /// A x for an m-vector x.
    pub fn mul_vec(&self, x: &[BigRational]) -> Vec<BigRational> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x.iter())
                    .map(|(a, v)| a * v)
                    .fold(BigRational::zero(), |acc, v| acc + v)
            })
            .collect()
    }

    /// y^T A for an n-vector y.
    pub fn vec_mul(&self, y: &[BigRational]) -> Vec<BigRational> {
        (0..self.cols())
            .map(|j| {
                y.iter()
                    .enumerate()
                    .map(|(i, v)| v * &self.entries[i][j])
                    .fold(BigRational::zero(), |acc, v| acc + v)
            })
            .collect()
    }

    /// Square submatrix of the listed columns.
    pub fn select_columns(&self, cols: &[usize]) -> Vec<Vec<BigRational>> {
        self.entries
            .iter()
            .map(|row| cols.iter().map(|&j| row[j].clone()).collect())
            .collect()
    }
}

/// Exact Gaussian elimination; `None` when the matrix is singular.
pub fn invert(m: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            assert_eq!(row.len(), n);
            let mut r = row.clone();
            for j in 0..n {
                r.push(if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                });
            }
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= &p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col].clone();
            if f.is_zero() {
                continue;
            }
            let src = a[col].clone();
            for (v, s) in a[r].iter_mut().zip(src.iter()) {
                *v -= &f * s;
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Exact determinant via fraction-preserving elimination.
pub fn determinant(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != col {
            a.swap(col, pivot);
            det = -det;
        }
        det *= &a[col][col];
        let p = a[col][col].clone();
        for r in col + 1..n {
            let f = &a[r][col] / &p;
            if f.is_zero() {
                continue;
            }
            let src = a[col].clone();
            for (v, s) in a[r].iter_mut().zip(src.iter()) {
                *v -= &f * s;
            }
        }
    }
    det
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    /// No feasible point; carries a row with all entries <= 0 when one exists.
    Infeasible,
    /// Unreachable for this program class (objective bounded below by 0).
    Unbounded,
}

/// Optimal vertex of `min 1^T x  s.t.  A x >= 1, x >= 0` with certificates.
#[derive(Debug, Clone)]
pub struct PrimalSolution {
    pub status: SolveStatus,
    pub kappa: Vec<BigRational>,
    /// Basis over standard-form columns 0..m+n (slacks are m..m+n).
    pub basis: Vec<usize>,
    pub objective: BigRational,
    pub is_unique: bool,
    pub is_nondegenerate: bool,
    pub tight_rows: Vec<usize>,
    /// Witness row with all entries <= 0 when infeasible for that reason.
    pub infeasible_row: Option<usize>,
}

/// Solves the exceedance-exponent program exactly.
pub fn solve_primal(a: &RationalMatrix) -> PrimalSolution {
    let n = a.rows();
    let m = a.cols();
    let empty = |status: SolveStatus, row: Option<usize>| PrimalSolution {
        status,
        kappa: Vec::new(),
        basis: Vec::new(),
        objective: BigRational::zero(),
        is_unique: false,
        is_nondegenerate: false,
        tight_rows: Vec::new(),
        infeasible_row: row,
    };

    // Standard form: [A | -I] (x, s) = 1, x, s >= 0, min sum over x.
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<BigRational> = a.row(i).to_vec();
        for j in 0..n {
            row.push(if j == i {
                -BigRational::one()
            } else {
                BigRational::zero()
            });
        }
        rows.push(row);
    }
    let mut objective = vec![BigRational::one(); m];
    objective.extend(std::iter::repeat(BigRational::zero()).take(n));
    let lp = StandardLp {
        rows,
        rhs: vec![BigRational::one(); n],
        objective,
    };

    match solve(&lp) {
        SimplexOutcome::Infeasible => {
            let witness = (0..n).find(|&i| a.row(i).iter().all(|v| !v.is_positive()));
            empty(SolveStatus::Infeasible, witness)
        }
        SimplexOutcome::Unbounded => empty(SolveStatus::Unbounded, None),
        SimplexOutcome::Optimal {
            x,
            basis,
            objective,
        } => {
            let kappa: Vec<BigRational> = x[..m].to_vec();
            let ax = a.mul_vec(&kappa);
            let one = BigRational::one();
            let tight_rows: Vec<usize> = (0..n).filter(|&i| ax[i] == one).collect();
            let positive = kappa.iter().filter(|k| k.is_positive()).count();
            let no_zero_basic = basis.iter().all(|&b| !x[b].is_zero());
            let is_nondegenerate = positive == n && no_zero_basic && basis.len() == n;
            let mut sol = PrimalSolution {
                status: SolveStatus::Optimal,
                kappa,
                basis,
                objective,
                is_unique: false,
                is_nondegenerate,
                tight_rows,
                infeasible_row: None,
            };
            if is_nondegenerate {
                if let Ok(dual) = dual_info(a, &sol) {
                    sol.is_unique = all_nonbasic_reduced_costs_positive(&sol, &dual);
                }
            }
            sol
        }
    }
}

/// Dual solution, reduced costs and the pricing row `1^T A_kappa^{-1}`.
#[derive(Debug, Clone)]
pub struct DualInfo {
    pub kappa_hat: Vec<BigRational>,
    /// r_j = 1 - (1^T A_kappa^{-1} A)_j for the m structural columns.
    pub reduced_costs: Vec<BigRational>,
    pub basis_inverse_row: Vec<BigRational>,
    /// Columns of A with kappa_j > 0, in ascending order.
    pub basic_columns: Vec<usize>,
    pub det_a_kappa: BigRational,
}

/// Computes exact dual data at a non-degenerate optimum.
pub fn dual_info(a: &RationalMatrix, sol: &PrimalSolution) -> Result<DualInfo, LpError> {
    if sol.status != SolveStatus::Optimal {
        return Err(LpError::NotOptimal(sol.status.clone()));
    }
    if !sol.is_nondegenerate {
        let positive = sol.kappa.iter().filter(|k| k.is_positive()).count();
        return Err(LpError::Degenerate(format!(
            "{} positive components, need exactly {}",
            positive,
            a.rows()
        )));
    }
    let basic_columns: Vec<usize> = (0..a.cols())
        .filter(|&j| sol.kappa[j].is_positive())
        .collect();
    let a_kappa = a.select_columns(&basic_columns);
    let det_a_kappa = determinant(&a_kappa);
    let inv = invert(&a_kappa)
        .ok_or_else(|| LpError::Degenerate("A_kappa is singular".to_string()))?;
    // 1^T A_kappa^{-1}: column sums of the inverse.
    let n = a.rows();
    let basis_inverse_row: Vec<BigRational> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| inv[i][j].clone())
                .fold(BigRational::zero(), |acc, v| acc + v)
        })
        .collect();
    let priced = a.vec_mul(&basis_inverse_row);
    let reduced_costs: Vec<BigRational> = priced
        .iter()
        .map(|p| BigRational::one() - p)
        .collect();
    Ok(DualInfo {
        kappa_hat: basis_inverse_row.clone(),
        reduced_costs,
        basis_inverse_row,
        basic_columns,
        det_a_kappa,
    })
}

fn all_nonbasic_reduced_costs_positive(sol: &PrimalSolution, dual: &DualInfo) -> bool {
    // Non-basic structural columns must price out strictly positive, and so
    // must the slack columns, whose reduced costs equal kappa_hat.
    let structural_ok = sol
        .kappa
        .iter()
        .zip(dual.reduced_costs.iter())
        .all(|(k, r)| k.is_positive() || r.is_positive());
    let slack_ok = dual.kappa_hat.iter().all(|v| v.is_positive());
    structural_ok && slack_ok
}

/// One basic feasible solution of the standard-form program.
#[derive(Debug, Clone)]
pub struct Vertex {
    pub basis: Vec<usize>,
    pub kappa: Vec<BigRational>,
    pub slack: Vec<BigRational>,
    pub objective: BigRational,
}

/// Enumerates every feasible basis of `[A | -I] x = 1, x >= 0`.
///
/// Oracle for the simplex path: pure linear algebra over all n-subsets of
/// the m+n standard-form columns.
pub fn enumerate_vertices(a: &RationalMatrix, budget: u64) -> Result<Vec<Vertex>, LpError> {
    let n = a.rows();
    let m = a.cols();
    let total = m + n;
    let required = binomial(total as u64, n as u64);
    if required > budget {
        return Err(LpError::BudgetExceeded { required, budget });
    }

    let column = |j: usize, i: usize| -> BigRational {
        if j < m {
            a.entry(i, j).clone()
        } else if j - m == i {
            -BigRational::one()
        } else {
            BigRational::zero()
        }
    };

    let mut vertices = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let mat: Vec<Vec<BigRational>> = (0..n)
            .map(|i| subset.iter().map(|&j| column(j, i)).collect())
            .collect();
        if let Some(inv) = invert(&mat) {
            // s_B = mat^{-1} 1: row sums of the inverse.
            let s: Vec<BigRational> = inv
                .iter()
                .map(|row| row.iter().fold(BigRational::zero(), |acc, v| acc + v))
                .collect();
            if s.iter().all(|v| !v.is_negative()) {
                let mut kappa = vec![BigRational::zero(); m];
                let mut slack = vec![BigRational::zero(); n];
                for (&j, v) in subset.iter().zip(s.iter()) {
                    if j < m {
                        kappa[j] = v.clone();
                    } else {
                        slack[j - m] = v.clone();
                    }
                }
                let objective = kappa
                    .iter()
                    .fold(BigRational::zero(), |acc, v| acc + v);
                vertices.push(Vertex {
                    basis: subset.clone(),
                    kappa,
                    slack,
                    objective,
                });
            }
        }
        if !next_subset(&mut subset, total) {
            break;
        }
    }
    Ok(vertices)
}

fn next_subset(subset: &mut [usize], total: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < total - (k - i) {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Outcome of the uniqueness check for the optimal vertex.
#[derive(Debug, Clone)]
pub enum Uniqueness {
    Unique,
    NotUnique {
        /// An alternative optimal kappa.
        witness: Vec<BigRational>,
    },
    Inconclusive {
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub outcome: Uniqueness,
    pub degenerate: bool,
    pub method: &'static str,
}

impl UniquenessReport {
    pub fn is_unique(&self) -> bool {
        matches!(self.outcome, Uniqueness::Unique)
    }
}

/// Certifies uniqueness of the optimum: strictly positive non-basic reduced
/// costs at a non-degenerate vertex prove it; otherwise fall back to
/// exhaustive optimal-vertex enumeration within `budget`.
pub fn certify_uniqueness(
    a: &RationalMatrix,
    sol: &PrimalSolution,
    budget: u64,
) -> Result<UniquenessReport, LpError> {
    if sol.status != SolveStatus::Optimal {
        return Err(LpError::NotOptimal(sol.status.clone()));
    }
    let degenerate = !sol.is_nondegenerate;
    if sol.is_nondegenerate {
        if let Ok(dual) = dual_info(a, sol) {
            if all_nonbasic_reduced_costs_positive(sol, &dual) {
                return Ok(UniquenessReport {
                    outcome: Uniqueness::Unique,
                    degenerate: false,
                    method: "reduced-costs",
                });
            }
        }
    }
    match enumerate_vertices(a, budget) {
        Ok(vertices) => {
            let mut optimal_kappas: Vec<Vec<BigRational>> = Vec::new();
            for v in &vertices {
                if v.objective == sol.objective && !optimal_kappas.contains(&v.kappa) {
                    optimal_kappas.push(v.kappa.clone());
                }
            }
            let outcome = match optimal_kappas.iter().find(|k| **k != sol.kappa) {
                Some(other) => Uniqueness::NotUnique {
                    witness: other.clone(),
                },
                None => Uniqueness::Unique,
            };
            Ok(UniquenessReport {
                outcome,
                degenerate,
                method: "enumeration",
            })
        }
        Err(LpError::BudgetExceeded { required, budget }) => Ok(UniquenessReport {
            outcome: Uniqueness::Inconclusive {
                reason: format!(
                    "reduced-cost test failed and enumeration needs {required} bases (budget {budget})"
                ),
            },
            degenerate,
            method: "enumeration",
        }),
        Err(e) => Err(e),
    }
}

/// Exact epsilon of the minimax bound: `1 - V` where V maximizes, over the
/// simplex on the columns k != j, the smallest row ratio sum
/// `sum_k (a_ik / a_ij) x_k`. Requires a_ij > 0 for every row i.
pub fn minimax_epsilon(
    a: &RationalMatrix,
    sol: &PrimalSolution,
    j: usize,
) -> Result<BigRational, LpError> {
    let n = a.rows();
    let m = a.cols();
    if j >= m || !sol.kappa.get(j).map(|k| k.is_positive()).unwrap_or(false) {
        return Err(LpError::BadColumn(j));
    }
    for i in 0..n {
        if !a.entry(i, j).is_positive() {
            return Err(LpError::NonPositiveColumn {
                i,
                j,
                entry: format_rational(a.entry(i, j)),
            });
        }
    }
    let others: Vec<usize> = (0..m).filter(|&k| k != j).collect();
    if others.is_empty() {
        // Empty simplex: the bound holds vacuously for any epsilon; V = 0.
        return Ok(BigRational::one());
    }

    // max t s.t. sum_k r_ik x_k - t - u_i = 0 (u_i >= 0), sum_k x_k = 1.
    // Variables: x (|others|), t+ , t-, u (n). Minimize t- - t+.
    let nx = others.len();
    let ncols = nx + 2 + n;
    let mut rows = Vec::with_capacity(n + 1);
    let mut rhs = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut row = vec![BigRational::zero(); ncols];
        for (idx, &k) in others.iter().enumerate() {
            row[idx] = a.entry(i, k) / a.entry(i, j);
        }
        row[nx] = -BigRational::one();
        row[nx + 1] = BigRational::one();
        row[nx + 2 + i] = -BigRational::one();
        rows.push(row);
        rhs.push(BigRational::zero());
    }
    let mut simplex_row = vec![BigRational::zero(); ncols];
    for idx in 0..nx {
        simplex_row[idx] = BigRational::one();
    }
    rows.push(simplex_row);
    rhs.push(BigRational::one());

    let mut objective = vec![BigRational::zero(); ncols];
    objective[nx] = -BigRational::one();
    objective[nx + 1] = BigRational::one();

    match solve(&StandardLp {
        rows,
        rhs,
        objective,
    }) {
        SimplexOutcome::Optimal { objective, .. } => Ok(BigRational::one() + objective),
        outcome => unreachable!(
            "minimax LP over a compact simplex is feasible and bounded, got {outcome:?}"
        ),
    }
}
