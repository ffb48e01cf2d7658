use nalgebra::DVector;

use super::{labeled, RegressionSystem};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, SortedEigen, MAX_CONDITION};
use crate::returns::ReturnsMatrix;
use crate::weights::WeightVector;

/// Unpenalized least squares θ̂ = (X'X)⁻¹X'y, i.e. sample Markowitz weights scaled by r̄.
pub fn ols_system(sys: &RegressionSystem) -> Result<DVector<f64>> {
    if sys.n_assets() > sys.n_obs {
        return Err(Error::DegenerateMoments {
            condition: f64::INFINITY,
        });
    }
    let condition = SortedEigen::new(&sys.gram).condition_number();
    if !(condition < MAX_CONDITION) {
        return Err(Error::DegenerateMoments { condition });
    }
    cholesky_solve(&sys.gram, &sys.xty).ok_or(Error::DegenerateMoments { condition })
}

pub fn estimate_ols(returns: &ReturnsMatrix, r_bar: f64) -> Result<WeightVector> {
    let sys = RegressionSystem::from_returns(returns, r_bar)?;
    labeled(returns, ols_system(&sys)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::test_support::random_returns;
    use crate::moments::compute_moments;

    #[test]
    fn single_asset_hand_value() {
        // mean 0.1, ML variance 0.04
        let x = ReturnsMatrix::from_rows(&[&[0.3], &[-0.1]]).unwrap();
        let w = estimate_ols(&x, 1.0).unwrap();
        assert!((w.theta[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn more_assets_than_periods_is_degenerate() {
        let x = random_returns(3, 5, 11);
        assert!(matches!(
            estimate_ols(&x, 1.0),
            Err(Error::DegenerateMoments { .. })
        ));
    }

    #[test]
    fn collinear_assets_are_degenerate() {
        let base = random_returns(40, 2, 3);
        let d = base.data();
        let data =
            nalgebra::DMatrix::from_fn(
                40,
                3,
                |i, j| if j < 2 { d[(i, j)] } else { d[(i, 0)] * 2.0 },
            );
        let x = ReturnsMatrix::from_matrix(data).unwrap();
        assert!(matches!(
            estimate_ols(&x, 1.0),
            Err(Error::DegenerateMoments { .. })
        ));
    }

    #[test]
    fn matches_markowitz_form() {
        for seed in 0..20 {
            let x = random_returns(60, 6, seed);
            let mo = compute_moments(&x);
            let markowitz = mo.second_moment().lu().solve(&(&mo.mean * 0.7)).unwrap();
            let w = estimate_ols(&x, 0.7).unwrap();
            let rel = (&w.theta - &markowitz).norm() / markowitz.norm();
            assert!(rel < 1e-8, "seed {seed}: {rel}");
        }
    }

    #[test]
    fn scales_linearly_in_r_bar() {
        let x = random_returns(50, 4, 5);
        let a = estimate_ols(&x, 1.0).unwrap();
        let b = estimate_ols(&x, 3.0).unwrap();
        assert!((&b.theta - &a.theta * 3.0).amax() <= 1e-12 * b.theta.amax());
    }
}
