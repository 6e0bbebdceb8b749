//! Vanishing polynomials of a point cloud, read off the (numerical) null space
//! of its embedded data matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::points::PointCloud;
use crate::polyring::{monomial_basis, HomogeneousPolynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankMode {
    /// Singular values at or below `tol × σ_max` count as zero.
    Relative,
    /// Singular values at or below `tol` count as zero.
    Absolute,
}

/// How numerical rank decisions are made.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankPolicy {
    pub relative_tolerance: f64,
    pub mode: RankMode,
}

impl Default for RankPolicy {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-10,
            mode: RankMode::Relative,
        }
    }
}

impl RankPolicy {
    pub fn relative(tol: f64) -> Result<Self> {
        Self::new(tol, RankMode::Relative)
    }

    pub fn new(tol: f64, mode: RankMode) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("rank tolerance must be positive, got {tol}")));
        }
        Ok(Self {
            relative_tolerance: tol,
            mode,
        })
    }

    /// Absolute cut-off for a descending list of singular values.
    pub fn threshold(&self, values: &[f64]) -> f64 {
        match self.mode {
            RankMode::Relative => self.relative_tolerance * values.first().copied().unwrap_or(0.0),
            RankMode::Absolute => self.relative_tolerance,
        }
    }

    pub fn rank(&self, values: &[f64]) -> usize {
        let t = self.threshold(values);
        values.iter().filter(|&&s| s > t).count()
    }
}

/// Orthonormal basis (`M × r`) of the numerical right null space of `a`.
pub fn null_space(a: &DMatrix<f64>, policy: &RankPolicy) -> DMatrix<f64> {
    let m = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(m, m);
    }
    let svd = linalg::right_svd(a);
    let rank = policy.rank(&svd.values);
    svd.v.columns(rank, m - rank).into_owned()
}

/// Rank of the embedded data matrix of `cloud` at `degree`.
pub fn embedded_rank(cloud: &PointCloud, degree: usize, policy: &RankPolicy) -> Result<usize> {
    let basis = monomial_basis(cloud.dim(), degree)?;
    if cloud.is_empty() {
        return Ok(0);
    }
    let svd = linalg::right_svd(&basis.embed_rows(cloud.matrix())?);
    Ok(policy.rank(&svd.values))
}

/// `M_ℓ(D) − rank ν_ℓ(X)`: the dimension of the degree-ℓ vanishing space.
pub fn corank(cloud: &PointCloud, degree: usize, policy: &RankPolicy) -> Result<usize> {
    let basis = monomial_basis(cloud.dim(), degree)?;
    Ok(basis.len() - embedded_rank(cloud, degree, policy)?)
}

/// Orthonormal coefficient vectors spanning the degree-`degree` polynomials
/// that vanish on `cloud`; empty when the embedded matrix has full column rank.
pub fn nullspace_polys(cloud: &PointCloud, degree: usize, policy: &RankPolicy) -> Result<Vec<HomogeneousPolynomial>> {
    let basis = monomial_basis(cloud.dim(), degree)?;
    let embedded = basis.embed_rows(cloud.matrix())?;
    let null = null_space(&embedded, policy);
    null.column_iter()
        .map(|c| HomogeneousPolynomial::new(basis.clone(), c.into_owned()))
        .collect()
}

/// The polynomial whose unit coefficient vector is the right singular vector
/// of `ν_ℓ(X)` with the smallest singular value.
pub fn least_singular_poly(cloud: &PointCloud, degree: usize) -> Result<HomogeneousPolynomial> {
    least_singular_poly_with_residual(cloud, degree).map(|(p, _)| p)
}

/// As [`least_singular_poly`], also returning `‖ν_ℓ(X) c‖`.
pub fn least_singular_poly_with_residual(cloud: &PointCloud, degree: usize) -> Result<(HomogeneousPolynomial, f64)> {
    if cloud.is_empty() {
        return Err(Error::NotEnoughPoints {
            required: 1,
            available: 0,
        });
    }
    let basis = monomial_basis(cloud.dim(), degree)?;
    let embedded = basis.embed_rows(cloud.matrix())?;
    let (v, sigma) = linalg::smallest_right_singular(&embedded);
    Ok((HomogeneousPolynomial::new(basis, v)?, sigma))
}

/// Smallest `k ≤ max_degree` for which some degree-`k` polynomial vanishes on
/// the cloud, with the vanishing polynomial of smallest singular value.
pub fn minimal_degree_poly(
    cloud: &PointCloud,
    max_degree: usize,
    policy: &RankPolicy,
) -> Result<Option<(usize, HomogeneousPolynomial)>> {
    if max_degree == 0 {
        return Err(Error::InvalidArgument("max degree must be at least 1".into()));
    }
    for k in 1..=max_degree {
        if let Some(p) = nullspace_polys(cloud, k, policy)?.into_iter().next() {
            return Ok(Some((k, p)));
        }
    }
    Ok(None)
}

/// Number of hyperplanes in a hyperplane arrangement: the smallest degree at
/// which the embedded data matrix drops rank by exactly one.
pub fn hyperplane_count(cloud: &PointCloud, max_degree: usize, policy: &RankPolicy) -> Result<usize> {
    for k in 1..=max_degree {
        let basis = monomial_basis(cloud.dim(), k)?;
        if cloud.len() + 1 < basis.len() {
            // Too few rows for the rank test to mean anything at this degree.
            break;
        }
        if corank(cloud, k, policy)? == 1 {
            return Ok(k);
        }
    }
    Err(Error::NotFound(format!("no degree ≤ {max_degree} with corank one")))
}

/// Points whose gradient norm is below this are left out of [`beta`].
pub const MIN_GRADIENT_NORM: f64 = 1e-14;

/// Mean absolute cosine between each point and the gradient of `p` there.
pub fn beta(cloud: &PointCloud, p: &HomogeneousPolynomial) -> Result<f64> {
    let grads = p.gradients(cloud.matrix())?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for (x, g) in cloud.matrix().row_iter().zip(grads.row_iter()) {
        let gn = g.norm();
        let xn = x.norm();
        if gn < MIN_GRADIENT_NORM || xn == 0.0 {
            continue;
        }
        sum += x.dot(&g).abs() / (xn * gn);
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegeneratePolynomial);
    }
    Ok(sum / used as f64)
}

/// True iff no degree-`degree` polynomial vanishes on the cloud, i.e. the
/// embedded data matrix has full column rank `M_ℓ(D)`.
pub fn is_full_rank(cloud: &PointCloud, degree: usize, policy: &RankPolicy) -> Result<bool> {
    let basis = monomial_basis(cloud.dim(), degree)?;
    if cloud.len() < basis.len() {
        return Ok(false);
    }
    Ok(embedded_rank(cloud, degree, policy)? == basis.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{random_subspace, sample_arrangement, SampleSpec};
    use nalgebra::DVector;

    fn axes_cloud() -> PointCloud {
        PointCloud::from_rows(
            &[vec![1.0, 0.0], vec![-0.7, 0.0], vec![0.0, 2.0], vec![0.0, -1.3]],
            None,
        )
        .unwrap()
    }

    /// Null space of a tiny matrix by exhaustive elimination over the
    /// coordinate directions, used as an independent check.
    fn brute_null_direction(a: &DMatrix<f64>) -> Vec<usize> {
        (0..a.ncols()).filter(|&c| a.column(c).iter().all(|v| *v == 0.0)).collect()
    }

    #[test]
    fn nullspace_of_axes_union() {
        let cloud = axes_cloud();
        let emb = crate::polyring::embed(&cloud, 2).unwrap();
        assert_eq!(brute_null_direction(&emb), vec![1]);
        let polys = nullspace_polys(&cloud, 2, &RankPolicy::default()).unwrap();
        assert_eq!(polys.len(), 1);
        let c = polys[0].coeffs();
        assert!((c[1].abs() - 1.0).abs() < 1e-12);
        assert!(c[0].abs() < 1e-12 && c[2].abs() < 1e-12);

        let p = least_singular_poly(&cloud, 2).unwrap();
        assert!((p.coeffs()[1].abs() - 1.0).abs() < 1e-12);
        assert!(!is_full_rank(&cloud, 2, &RankPolicy::default()).unwrap());
    }

    #[test]
    fn generic_and_hyperplane_nullspaces() {
        let policy = RankPolicy::default();
        let generic = sample_arrangement(&SampleSpec::new(3, vec![3], vec![10], 0.0, 4)).unwrap().0;
        assert!(nullspace_polys(&generic, 1, &policy).unwrap().is_empty());
        assert!(minimal_degree_poly(&generic, 2, &policy).unwrap().is_none());

        let plane = PointCloud::from_rows(
            &[vec![0.0, 1.0, 2.0], vec![0.0, -1.0, 0.5], vec![0.0, 0.3, -0.2]],
            None,
        )
        .unwrap();
        let polys = nullspace_polys(&plane, 1, &policy).unwrap();
        assert_eq!(polys.len(), 1);
        assert!((polys[0].coeffs()[0].abs() - 1.0).abs() < 1e-12);
        assert_eq!(minimal_degree_poly(&plane, 3, &policy).unwrap().unwrap().0, 1);
        assert_eq!(hyperplane_count(&plane, 3, &policy).unwrap(), 1);
    }

    #[test]
    fn least_singular_of_single_point() {
        let one = PointCloud::from_rows(&[vec![1.0, 0.0]], None).unwrap();
        let p = least_singular_poly(&one, 1).unwrap();
        assert!(p.coeffs()[0].abs() < 1e-15);
        assert!((p.coeffs()[1].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn least_singular_residual_under_noise() {
        let sigma = 0.01;
        let (cloud, _) = sample_arrangement(&SampleSpec::new(4, vec![3], vec![200], sigma, 8)).unwrap();
        let (_, residual) = least_singular_poly_with_residual(&cloud, 1).unwrap();
        assert!(residual / (cloud.len() as f64).sqrt() < 3.0 * sigma);
    }

    #[test]
    fn beta_examples() {
        let (cloud, _) = sample_arrangement(&SampleSpec::new(5, vec![2, 3], vec![60, 60], 0.0, 2)).unwrap();
        let p = least_singular_poly(&cloud, 2).unwrap();
        assert!(beta(&cloud, &p).unwrap() <= 1e-10);

        let basis = monomial_basis(2, 1).unwrap();
        let x1 = HomogeneousPolynomial::new(basis.clone(), DVector::from_column_slice(&[1.0, 0.0])).unwrap();
        let single = PointCloud::from_rows(&[vec![1.0, 0.0]], None).unwrap();
        assert!((beta(&single, &x1).unwrap() - 1.0).abs() < 1e-15);

        let zero = HomogeneousPolynomial::new(basis, DVector::zeros(2)).unwrap();
        assert!(matches!(beta(&single, &zero), Err(Error::DegeneratePolynomial)));
    }

    #[test]
    fn beta_under_noise_is_small_but_positive() {
        let (cloud, _) = sample_arrangement(&SampleSpec::new(9, vec![4, 5, 6], vec![100, 100, 100], 0.01, 21)).unwrap();
        let p = least_singular_poly(&cloud, 3).unwrap();
        let b = beta(&cloud, &p).unwrap();
        assert!(b > 0.0 && b < 0.1, "beta = {b}");
    }

    #[test]
    fn full_rank_checks() {
        let policy = RankPolicy::default();
        let (cloud, _) = sample_arrangement(&SampleSpec::new(2, vec![2], vec![200], 0.0, 3)).unwrap();
        assert!(is_full_rank(&cloud, 3, &policy).unwrap());
        let few = cloud.select(&[0, 1, 2]);
        assert!(!is_full_rank(&few, 3, &policy).unwrap());
    }

    #[test]
    fn hyperplane_counts() {
        let policy = RankPolicy::default();
        let (two, _) = sample_arrangement(&SampleSpec::new(3, vec![2, 2], vec![30, 30], 0.0, 1)).unwrap();
        assert_eq!(corank(&two, 1, &policy).unwrap(), 0);
        assert_eq!(corank(&two, 2, &policy).unwrap(), 1);
        assert_eq!(hyperplane_count(&two, 4, &policy).unwrap(), 2);

        let (three, _) = sample_arrangement(&SampleSpec::new(4, vec![3, 3, 3], vec![67, 67, 66], 0.0, 9)).unwrap();
        assert_eq!(hyperplane_count(&three, 4, &policy).unwrap(), 3);
    }

    #[test]
    fn vanishing_polys_vanish_and_gradients_are_normal() {
        let policy = RankPolicy::default();
        for seed in 0..5 {
            let (cloud, arr) =
                sample_arrangement(&SampleSpec::new(6, vec![2, 3, 4], vec![60, 60, 60], 0.0, 100 + seed)).unwrap();
            let labels = cloud.labels().unwrap().to_vec();
            for p in nullspace_polys(&cloud, 3, &policy).unwrap() {
                let grads = p.gradients(cloud.matrix()).unwrap();
                for j in 0..cloud.len() {
                    assert!(p.eval(&cloud.point(j)).unwrap().abs() <= 1e-9);
                    let s = arr.subspaces()[labels[j]].basis();
                    let resid = (grads.row(j) * s).amax();
                    assert!(resid <= 1e-8, "gradient not normal: {resid}");
                }
            }
        }
    }

    #[test]
    fn minimal_degree_is_monotone_in_points() {
        let policy = RankPolicy::default();
        let (cloud, _) = sample_arrangement(&SampleSpec::new(4, vec![1, 2, 3], vec![30, 30, 30], 0.0, 5)).unwrap();
        let labels = cloud.labels().unwrap();
        let mut last = 0;
        for upto in 0..3 {
            let idx: Vec<usize> = (0..cloud.len()).filter(|&j| labels[j] <= upto).collect();
            let (k, _) = minimal_degree_poly(&cloud.select(&idx), 3, &policy).unwrap().unwrap();
            assert!(k >= last);
            last = k;
        }
        let s = random_subspace(4, 3, 1).unwrap();
        assert_eq!(s.dim(), 3);
    }
}
