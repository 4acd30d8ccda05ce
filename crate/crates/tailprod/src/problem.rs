//! On-disk problem format: a JSON object with the exponent matrix as `"p/q"`
//! strings, thresholds and marginal laws.
//!
//! ```json
//! {
//!   "A": [["1", "-1/2"], ["0", "1"]],
//!   "c": ["1", "1"],
//!   "marginals": [
//!     {"type": "pareto", "alpha": "1"},
//!     {"type": "pareto", "alpha": "1"}
//!   ]
//! }
//! ```

use serde::{Deserialize, Serialize};

use crate::lp::RationalMatrix;
use crate::marginals::MarginalModel;
use crate::rational::{format_rational, parse_rational, serde_rational_vec};
use crate::tail::{ProblemSpec, TailError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<String>>,
    #[serde(with = "serde_rational_vec")]
    pub c: Vec<num_rational::BigRational>,
    pub marginals: Vec<MarginalModel>,
}

impl ProblemFile {
    pub fn parse(json: &str) -> Result<ProblemSpec, TailError> {
        let file: ProblemFile =
            serde_json::from_str(json).map_err(|e| TailError::Invalid(e.to_string()))?;
        file.into_spec()
    }

    pub fn into_spec(self) -> Result<ProblemSpec, TailError> {
        let mut rows = Vec::with_capacity(self.a.len());
        for row in &self.a {
            let mut out = Vec::with_capacity(row.len());
            for s in row {
                out.push(parse_rational(s).map_err(|e| TailError::Invalid(e.to_string()))?);
            }
            rows.push(out);
        }
        let spec = ProblemSpec {
            a: RationalMatrix::new(rows)?,
            c: self.c,
            marginals: self.marginals,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ProblemSpec) -> Self {
        let a = (0..spec.a.rows())
            .map(|i| {
                (0..spec.a.cols())
                    .map(|j| format_rational(spec.a.entry(i, j)))
                    .collect()
            })
            .collect();
        ProblemFile {
            a,
            c: spec.c.clone(),
            marginals: spec.marginals.clone(),
        }
    }
}
