use std::cmp::Ordering;
use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A complete n×m panel of excess returns: one row per period, one column per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsMatrix {
    data: DMatrix<f64>,
    asset_labels: Vec<String>,
    period_index: Vec<String>,
}

/// Orders period labels numerically when both parse as numbers, lexicographically otherwise.
fn compare_periods(a: &str, b: &str) -> Ordering {
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

impl ReturnsMatrix {
    pub fn new(
        data: DMatrix<f64>,
        asset_labels: Vec<String>,
        period_index: Vec<String>,
    ) -> Result<Self> {
        let (n, m) = data.shape();
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput(format!(
                "empty returns panel ({n}x{m})"
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            // column-major storage
            let (row, col) = (pos % n, pos / n);
            return Err(Error::InvalidInput(format!(
                "non-finite return at row {row}, column {col}"
            )));
        }
        if asset_labels.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: asset_labels.len(),
            });
        }
        if period_index.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: period_index.len(),
            });
        }
        let mut seen = HashSet::with_capacity(m);
        for label in &asset_labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate asset label {label:?}"
                )));
            }
        }
        for w in period_index.windows(2) {
            if compare_periods(&w[0], &w[1]) != Ordering::Less {
                return Err(Error::InvalidInput(format!(
                    "period index not strictly increasing at {:?} -> {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            data,
            asset_labels,
            period_index,
        })
    }

    /// Wraps a bare matrix with generated labels `A1..Am` and periods `0..n-1`.
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        let (n, m) = data.shape();
        let labels = (1..=m).map(|j| format!("A{j}")).collect();
        let periods = (0..n).map(|i| i.to_string()).collect();
        Self::new(data, labels, periods)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::from_matrix(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }

    pub fn n_periods(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn asset_labels(&self) -> &[String] {
        &self.asset_labels
    }

    pub fn period_index(&self) -> &[String] {
        &self.period_index
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.data.row(i).transpose()
    }

    /// New panel holding the given rows, in the order given. Row order must
    /// keep the period index increasing.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let data = self.data.select_rows(rows.iter());
        let periods = rows.iter().map(|&i| self.period_index[i].clone()).collect();
        Self::new(data, self.asset_labels.clone(), periods)
    }

    /// Contiguous block of periods `start..end`.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        let rows: Vec<usize> = (start..end).collect();
        self.select_rows(&rows)
    }

    /// Column permutation: asset `j` of the result is asset `perm[j]` of `self`.
    pub fn permute_assets(&self, perm: &[usize]) -> Result<Self> {
        let data = self.data.select_columns(perm.iter());
        let labels = perm.iter().map(|&j| self.asset_labels[j].clone()).collect();
        Self::new(data, labels, self.period_index.clone())
    }

    /// Mean squared deviation of portfolio returns from `r_bar` over `rows`.
    pub fn mean_squared_shortfall(&self, rows: &[usize], theta: &DVector<f64>, r_bar: f64) -> f64 {
        let total: f64 = rows
            .iter()
            .map(|&i| {
                let ret = self.data.row(i).dot(&theta.transpose());
                (r_bar - ret).powi(2)
            })
            .sum();
        total / rows.len() as f64
    }
}
