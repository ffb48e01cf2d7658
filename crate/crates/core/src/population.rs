use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ground-truth market: expected excess returns, covariance and the ideal return r̄.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub r_bar: f64,
    pub alpha: Option<f64>,
    pub r_f: Option<f64>,
}

/// r̄ = (1 − α r_f) / α
pub fn ideal_return(alpha: f64, r_f: f64) -> f64 {
    (1.0 - alpha * r_f) / alpha
}

impl PopulationSpec {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, r_bar: f64) -> Result<Self> {
        let spec = Self {
            mu,
            sigma,
            r_bar,
            alpha: None,
            r_f: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_risk_aversion(
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        alpha: f64,
        r_f: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!(
                "risk aversion must be positive, got {alpha}"
            )));
        }
        let spec = Self {
            mu,
            sigma,
            r_bar: ideal_return(alpha, r_f),
            alpha: Some(alpha),
            r_f: Some(r_f),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_r_bar(&self, r_bar: f64) -> Result<Self> {
        Self::new(self.mu.clone(), self.sigma.clone(), r_bar)
    }

    pub fn n_assets(&self) -> usize {
        self.mu.len()
    }

    fn validate(&self) -> Result<()> {
        let m = self.mu.len();
        if m == 0 {
            return Err(Error::InvalidInput("population has no assets".into()));
        }
        if self.sigma.shape() != (m, m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: self.sigma.nrows(),
            });
        }
        if self
            .mu
            .iter()
            .chain(self.sigma.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("non-finite population moment".into()));
        }
        if !(self.r_bar > 0.0 && self.r_bar.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "r_bar must be positive, got {}",
                self.r_bar
            )));
        }
        let scale = self.sigma.amax().max(1.0);
        if (&self.sigma - self.sigma.transpose()).amax() > 1e-12 * scale {
            return Err(Error::SingularPopulation);
        }
        if self.sigma.clone().cholesky().is_none() {
            return Err(Error::SingularPopulation);
        }
        let min_eig = nalgebra::SymmetricEigen::new(self.sigma.clone())
            .eigenvalues
            .min();
        if min_eig <= 0.0 {
            return Err(Error::SingularPopulation);
        }
        Ok(())
    }

    /// A = Σ + μμᵀ
    pub fn second_moment(&self) -> DMatrix<f64> {
        &self.sigma + &self.mu * self.mu.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn risk_aversion_pair_sets_r_bar() {
        let p = PopulationSpec::from_risk_aversion(
            DVector::from_vec(vec![0.1]),
            DMatrix::from_element(1, 1, 0.04),
            2.0,
            0.1,
        )
        .unwrap();
        assert_eq!(p.r_bar, (1.0 - 2.0 * 0.1) / 2.0);
    }

    #[test]
    fn rejects_indefinite_sigma() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = PopulationSpec::new(DVector::zeros(2), sigma, 1.0).unwrap_err();
        assert_eq!(err, Error::SingularPopulation);
    }

    #[test]
    fn rejects_nonpositive_r_bar() {
        let sigma = DMatrix::identity(1, 1);
        assert!(PopulationSpec::new(DVector::zeros(1), sigma.clone(), 0.0).is_err());
        // α r_f > 1 drives r̄ negative
        assert!(PopulationSpec::from_risk_aversion(DVector::zeros(1), sigma, 2.0, 1.0).is_err());
    }
}
