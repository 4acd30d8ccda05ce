//! Two-phase primal simplex over exact rationals for standard-form programs
//! `min c^T x  s.t.  E x = b, x >= 0`.
//!
//! Bland's rule everywhere: entering variable is the lowest-index column with
//! negative reduced cost, leaving variable breaks ratio ties by lowest basis
//! column index. With exact arithmetic this guarantees termination.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone)]
pub struct StandardLp {
    /// n x cols constraint matrix.
    pub rows: Vec<Vec<BigRational>>,
    pub rhs: Vec<BigRational>,
    pub objective: Vec<BigRational>,
}

#[derive(Debug, Clone)]
pub enum SimplexOutcome {
    Optimal {
        /// Values of all structural columns (zeros for non-basic ones).
        x: Vec<BigRational>,
        /// Basic column indices, one per remaining constraint row.
        basis: Vec<usize>,
        objective: BigRational,
    },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// rows[r] has one entry per column plus the rhs appended.
    rows: Vec<Vec<BigRational>>,
    /// Reduced-cost row with negated objective value appended.
    cost: Vec<BigRational>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        debug_assert!(!piv.is_zero());
        for v in self.rows[r].iter_mut() {
            *v /= &piv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                *v -= &factor * p;
            }
        }
        let factor = self.cost[c].clone();
        if !factor.is_zero() {
            for (v, p) in self.cost.iter_mut().zip(pivot_row.iter()) {
                *v -= &factor * p;
            }
        }
        self.basis[r] = c;
    }

    /// Runs Bland-rule simplex on the current cost row. Returns false when
    /// an unbounded direction is detected.
    fn optimize(&mut self, eligible: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let entering = (0..self.ncols)
                .find(|&c| eligible(c) && self.cost[c].is_negative());
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, BigRational)> = None;
            for r in 0..self.rows.len() {
                if self.rows[r][c].is_positive() {
                    let ratio = &self.rows[r][self.ncols] / &self.rows[r][c];
                    let better = match &leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < *lratio
                                || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

pub fn solve(lp: &StandardLp) -> SimplexOutcome {
    let n = lp.rows.len();
    let ncols = lp.objective.len();
    assert!(lp.rows.iter().all(|r| r.len() == ncols));
    assert_eq!(lp.rhs.len(), n);

    // Phase 1 tableau: [E | I_art | b] with b >= 0, minimizing artificial sum.
    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    for i in 0..n {
        let flip = lp.rhs[i].is_negative();
        let mut row: Vec<BigRational> = lp.rows[i]
            .iter()
            .map(|v| if flip { -v.clone() } else { v.clone() })
            .collect();
        for j in 0..n {
            row.push(if j == i {
                BigRational::one()
            } else {
                BigRational::zero()
            });
        }
        row.push(if flip {
            -lp.rhs[i].clone()
        } else {
            lp.rhs[i].clone()
        });
        rows.push(row);
    }
    let total = ncols + n;
    let mut cost = vec![BigRational::zero(); total + 1];
    for c in ncols..total {
        cost[c] = BigRational::one();
    }
    let mut tab = Tableau {
        rows,
        cost,
        basis: (ncols..total).collect(),
        ncols: total,
    };
    // Price out the artificial basis.
    for r in 0..n {
        let row = tab.rows[r].clone();
        for (v, p) in tab.cost.iter_mut().zip(row.iter()) {
            *v -= p;
        }
    }
    let ok = tab.optimize(&|_| true);
    debug_assert!(ok, "phase-1 objective is bounded below by zero");
    let phase1_obj = -tab.cost[total].clone();
    if phase1_obj.is_positive() {
        return SimplexOutcome::Infeasible;
    }

    // Drive remaining artificials out of the basis; a row where no structural
    // column can pivot is redundant and gets dropped.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= ncols {
            let piv_col = (0..ncols).find(|&c| !tab.rows[r][c].is_zero());
            match piv_col {
                Some(c) => tab.pivot(r, c),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2: restore the real objective, priced out over the basis.
    let mut cost = vec![BigRational::zero(); total + 1];
    cost[..ncols].clone_from_slice(&lp.objective);
    tab.cost = cost;
    for r in 0..tab.rows.len() {
        let cb = tab.cost[tab.basis[r]].clone();
        if cb.is_zero() {
            continue;
        }
        let row = tab.rows[r].clone();
        for (v, p) in tab.cost.iter_mut().zip(row.iter()) {
            *v -= &cb * p;
        }
    }
    let structural = |c: usize| c < ncols;
    if !tab.optimize(&structural) {
        return SimplexOutcome::Unbounded;
    }

    let mut x = vec![BigRational::zero(); ncols];
    for (r, &b) in tab.basis.iter().enumerate() {
        debug_assert!(b < ncols, "artificial column left in final basis");
        x[b] = tab.rows[r][total].clone();
    }
    let objective = lp
        .objective
        .iter()
        .zip(x.iter())
        .map(|(c, v)| c * v)
        .fold(BigRational::zero(), |acc, v| acc + v);
    let mut basis = tab.basis.clone();
    basis.sort_unstable();
    SimplexOutcome::Optimal {
        x,
        basis,
        objective,
    }
}
