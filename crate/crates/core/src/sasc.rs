//! Single-polynomial spectral affinities: the angle between gradients and the
//! distance of a point to the hyperplane normal at another point.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointCloud;
use crate::polyring::{basis_size, HomogeneousPolynomial};
use crate::spectral::spectral_cluster;
use crate::vanishing::{least_singular_poly, MIN_GRADIENT_NORM};

/// An `N × N` affinity, plus how many rows were zeroed for a vanishing gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub weights: DMatrix<f64>,
    pub zero_gradient_rows: usize,
}

impl AffinityMatrix {
    pub fn len(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.nrows() == 0
    }

    /// `C + Cᵀ`.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        &self.weights + self.weights.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SascVariant {
    Angle,
    Dist,
}

/// Unit gradients per row; rows below [`MIN_GRADIENT_NORM`] come back zero.
fn unit_gradients(cloud: &PointCloud, p: &HomogeneousPolynomial) -> Result<(DMatrix<f64>, usize)> {
    let mut grads = p.gradients(cloud.matrix())?;
    let mut zero = 0;
    for mut row in grads.row_iter_mut() {
        let n = row.norm();
        if n < MIN_GRADIENT_NORM {
            row.fill(0.0);
            zero += 1;
        } else {
            row /= n;
        }
    }
    if zero > 0 {
        log::warn!("{zero} points have a vanishing gradient; their affinity rows are zero");
    }
    Ok((grads, zero))
}

/// `C[j][j'] = |⟨n̂_j, n̂_j'⟩|` with `n̂_j` the unit gradient at `x_j`.
pub fn angle_affinity(cloud: &PointCloud, p: &HomogeneousPolynomial) -> Result<AffinityMatrix> {
    let (g, zero) = unit_gradients(cloud, p)?;
    let weights = (&g * g.transpose()).map(|v| v.abs().min(1.0));
    Ok(AffinityMatrix {
        weights,
        zero_gradient_rows: zero,
    })
}

/// `C[j][j'] = 1 − |⟨x_j', n̂_j⟩|` for unit-norm points, clamped to `[0, 1]`.
/// Not symmetric.
pub fn dist_affinity(cloud: &PointCloud, p: &HomogeneousPolynomial) -> Result<AffinityMatrix> {
    let (g, zero) = unit_gradients(cloud, p)?;
    let mut weights = (&g * cloud.matrix().transpose()).map(|v| (1.0 - v.abs()).clamp(0.0, 1.0));
    for j in 0..g.nrows() {
        if g.row(j).iter().all(|&v| v == 0.0) {
            weights.row_mut(j).fill(0.0);
        }
    }
    Ok(AffinityMatrix {
        weights,
        zero_gradient_rows: zero,
    })
}

#[derive(Debug, Clone)]
pub struct SascOutput {
    pub labels: Vec<usize>,
    pub affinity: AffinityMatrix,
}

/// Fits the least-singular degree-`degree` polynomial to the normalized cloud,
/// builds the chosen affinity and clusters `C + Cᵀ` into `clusters` groups.
pub fn sasc_cluster(
    cloud: &PointCloud,
    degree: usize,
    clusters: usize,
    variant: SascVariant,
    seed: u64,
) -> Result<SascOutput> {
    let required = basis_size(cloud.dim(), degree).ok_or(Error::SizeLimit {
        dim: cloud.dim(),
        degree,
    })?;
    if cloud.len() < required {
        return Err(Error::NotEnoughPoints {
            required,
            available: cloud.len(),
        });
    }
    let unit = cloud.normalized();
    let p = least_singular_poly(&unit, degree)?;
    let affinity = match variant {
        SascVariant::Angle => angle_affinity(&unit, &p)?,
        SascVariant::Dist => dist_affinity(&unit, &p)?,
    };
    let labels = spectral_cluster(&affinity.symmetrized(), clusters, seed)?;
    Ok(SascOutput { labels, affinity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{sample_arrangement, SampleSpec};
    use crate::polyring::monomial_basis;
    use crate::spectral::clustering_error;
    use nalgebra::DVector;

    #[test]
    fn hyperplane_affinities_are_block_constant() {
        let (cloud, _) = sample_arrangement(&SampleSpec::new(4, vec![3, 3], vec![25, 25], 0.0, 4)).unwrap();
        let p = least_singular_poly(&cloud, 2).unwrap();
        let labels = cloud.labels().unwrap();
        let a = angle_affinity(&cloud, &p).unwrap();
        let d = dist_affinity(&cloud, &p).unwrap();
        assert_eq!(a.weights, a.weights.transpose());
        for j in 0..50 {
            assert!((a.weights[(j, j)] - 1.0).abs() < 1e-12);
            assert!((d.weights[(j, j)] - 1.0).abs() < 1e-9);
            for k in 0..50 {
                if labels[j] == labels[k] {
                    assert!((a.weights[(j, k)] - 1.0).abs() < 1e-9);
                    assert!((d.weights[(j, k)] - 1.0).abs() < 1e-9);
                } else {
                    assert!((a.weights[(j, k)] - a.weights[(0, 25)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn orthogonal_normals_and_probe() {
        // x1 x2 = 0: the two coordinate hyperplanes of ℝ²
        let basis = monomial_basis(2, 2).unwrap();
        let p = HomogeneousPolynomial::new(basis, DVector::from_vec(vec![0.0, 1.0, 0.0])).unwrap();
        let cloud = PointCloud::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], None).unwrap();
        let a = angle_affinity(&cloud, &p).unwrap();
        assert_eq!(a.weights[(0, 1)], 0.0);
        // the unit normal at (1,0) is (0,1), which is the second point
        let d = dist_affinity(&cloud, &p).unwrap();
        assert!(d.weights[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn scale_invariance_and_zero_gradients() {
        let (cloud, _) = sample_arrangement(&SampleSpec::new(3, vec![2, 1], vec![10, 10], 0.0, 2)).unwrap();
        let p = least_singular_poly(&cloud, 2).unwrap();
        let a = angle_affinity(&cloud, &p).unwrap();
        let b = angle_affinity(&cloud, &p.scaled(-3.0)).unwrap();
        assert!((a.weights - b.weights).amax() < 1e-12);

        let with_zero = PointCloud::from_rows(&[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]], None).unwrap();
        let d = dist_affinity(&with_zero, &p).unwrap();
        assert_eq!(d.zero_gradient_rows, 1);
        assert!(d.weights.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cluster_hyperplanes_and_reject_small_clouds() {
        let (cloud, _) = sample_arrangement(&SampleSpec::new(4, vec![3, 3, 3], vec![30, 30, 30], 0.0, 6)).unwrap();
        for v in [SascVariant::Angle, SascVariant::Dist] {
            let out = sasc_cluster(&cloud, 3, 3, v, 0).unwrap();
            assert_eq!(clustering_error(&out.labels, cloud.labels().unwrap()).unwrap(), 0.0);
        }
        let small = cloud.select(&[0, 1, 2]);
        assert!(matches!(sasc_cluster(&small, 3, 3, SascVariant::Dist, 0), Err(Error::NotEnoughPoints { .. })));
    }
}
