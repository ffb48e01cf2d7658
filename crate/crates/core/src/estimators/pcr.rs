use nalgebra::DVector;

use super::{labeled, RegressionSystem};
use crate::error::{Error, Result};
use crate::linalg::SortedEigen;
use crate::returns::ReturnsMatrix;
use crate::weights::WeightVector;

/// Principal-component regressions for every component count, from one
/// eigendecomposition of X'X.
///
/// Regressing y on the top-k scores X P_k gives γ = Λ_k⁻¹ P_kᵀ X'y because the
/// score columns are orthogonal, so θ̂ = Σ_{i≤k} vᵢ (vᵢᵀ X'y) / λᵢ.
#[derive(Debug, Clone)]
pub struct PcrPath {
    eig: SortedEigen,
    rotated_xty: DVector<f64>,
}

impl PcrPath {
    pub fn new(sys: &RegressionSystem) -> Self {
        let eig = SortedEigen::new(&sys.gram);
        let rotated_xty = eig.vectors.tr_mul(&sys.xty);
        Self { eig, rotated_xty }
    }

    /// Number of eigenvalues above the rank floor.
    pub fn rank(&self) -> usize {
        self.eig.positive_count()
    }

    pub fn solve(&self, k: usize) -> Result<DVector<f64>> {
        let m = self.rotated_xty.len();
        if k == 0 || k > m {
            return Err(Error::InvalidInput(format!(
                "component count {k} outside 1..={m}"
            )));
        }
        let available = self.rank();
        if available < k {
            return Err(Error::RankDeficient {
                requested: k,
                available,
            });
        }
        let mut theta = DVector::zeros(m);
        for i in 0..k {
            let gamma = self.rotated_xty[i] / self.eig.values[i];
            theta.axpy(gamma, &self.eig.vectors.column(i), 1.0);
        }
        Ok(theta)
    }

    /// Eigenvectors ordered by descending eigenvalue (columns).
    pub fn eigenvectors(&self) -> &nalgebra::DMatrix<f64> {
        &self.eig.vectors
    }
}

pub fn pcr_system(sys: &RegressionSystem, k: usize) -> Result<DVector<f64>> {
    PcrPath::new(sys).solve(k)
}

pub fn estimate_pcr(returns: &ReturnsMatrix, r_bar: f64, k: usize) -> Result<WeightVector> {
    let sys = RegressionSystem::from_returns(returns, r_bar)?;
    labeled(returns, pcr_system(&sys, k)?)
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::estimators::estimate_ols;
    use crate::estimators::test_support::random_returns;

    #[test]
    fn full_rank_projection_is_ols() {
        for seed in 0..10 {
            let x = random_returns(50, 5, 40 + seed);
            let p = estimate_pcr(&x, 1.0, 5).unwrap();
            let o = estimate_ols(&x, 1.0).unwrap();
            assert!((&p.theta - &o.theta).amax() < 1e-6 * o.theta.amax().max(1.0));
        }
    }

    #[test]
    fn matches_explicit_score_regression() {
        // independent route: form the scores X P_k and solve their normal equations by LU
        let x = random_returns(40, 6, 77);
        let sys = RegressionSystem::from_returns(&x, 1.0).unwrap();
        let path = PcrPath::new(&sys);
        for k in 1..=6 {
            let pk = path.eigenvectors().columns(0, k).into_owned();
            let scores = x.data() * &pk;
            let y = DVector::from_element(40, 1.0);
            let gamma = scores
                .tr_mul(&scores)
                .lu()
                .solve(&scores.tr_mul(&y))
                .unwrap();
            let oracle = &pk * gamma;
            let theta = path.solve(k).unwrap();
            assert!(
                (&theta - &oracle).amax() < 1e-8 * oracle.amax().max(1.0),
                "k={k}"
            );
        }
    }

    #[test]
    fn orthogonal_to_discarded_directions() {
        for seed in 0..10 {
            let x = random_returns(30, 6, 90 + seed);
            let sys = RegressionSystem::from_returns(&x, 1.0).unwrap();
            let path = PcrPath::new(&sys);
            for k in 1..6 {
                let theta = path.solve(k).unwrap();
                let dropped = path.eigenvectors().columns(k, 6 - k);
                assert!(dropped.tr_mul(&theta).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn diagonal_gram_picks_high_variance_axis() {
        // zero-mean columns with variances 4 and 1 (n = 4), plus a common drift row
        let rows: [&[f64]; 4] = [&[2.0, 1.0], &[-2.0, -1.0], &[2.0, -1.0], &[-2.0, 1.0]];
        let x = ReturnsMatrix::from_rows(&rows).unwrap();
        // X'X = diag(16, 4), X'1 = 0 for this panel; use a system with X'y = (2, 3)
        let sys = RegressionSystem::new(
            x.data().tr_mul(x.data()),
            DVector::from_vec(vec![2.0, 3.0]),
            4,
            1.0,
        )
        .unwrap();
        assert_eq!(
            sys.gram,
            DMatrix::from_row_slice(2, 2, &[16.0, 0.0, 0.0, 4.0])
        );
        let theta = pcr_system(&sys, 1).unwrap();
        // γ = 2 / 16 along the first axis
        assert!((theta[0] - 0.125).abs() < 1e-14);
        assert!(theta[1].abs() < 1e-14);
    }

    #[test]
    fn rank_deficient() {
        let x = random_returns(3, 6, 5);
        let sys = RegressionSystem::from_returns(&x, 1.0).unwrap();
        assert!(pcr_system(&sys, 3).is_ok());
        assert_eq!(
            pcr_system(&sys, 4).unwrap_err(),
            Error::RankDeficient {
                requested: 4,
                available: 3
            }
        );
    }
}
