//! Ground-truth subspace arrangements, noisy sampling, transversality checks
//! and the generic / principal-component projections.
//!
//! All randomness comes from a seeded [`ChaCha8Rng`], so every generator is a
//! pure function of its arguments.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::points::{normalize_rows, PointCloud};
use crate::polyring::basis_size;
use crate::vanishing::{corank, RankPolicy};

/// Tolerance for the orthonormality of a subspace basis.
const ORTHONORMAL_TOL: f64 = 1e-12;

/// A linear subspace of `ℝ^D`, held as a `D × d` orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (ambient, d) = basis.shape();
        if d == 0 || d > ambient {
            return Err(Error::InvalidArgument(format!(
                "subspace dimension {d} must lie in 1..={ambient}"
            )));
        }
        let gram = basis.transpose() * &basis;
        if (gram - DMatrix::identity(d, d)).amax() > ORTHONORMAL_TOL {
            return Err(Error::InvalidArgument("subspace basis is not orthonormal".into()));
        }
        Ok(Self { basis })
    }

    /// Span of arbitrary (full column rank) vectors.
    pub fn spanned_by(vectors: &DMatrix<f64>) -> Result<Self> {
        let q = linalg::orth(vectors, 1e-12);
        Self::new(q)
    }

    /// Orthogonal complement of the span of `normals` inside `ℝ^D`.
    pub fn from_normals(normals: &DMatrix<f64>) -> Result<Self> {
        Self::new(linalg::orth_complement(normals, 1e-12))
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.dim()
    }

    /// Orthonormal basis of `S^⊥` (`D × (D − d)`).
    pub fn complement(&self) -> DMatrix<f64> {
        linalg::orth_complement(&self.basis, 1e-12)
    }

    /// Distance from `x` to the subspace.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(x);
        let proj = &self.basis * (self.basis.transpose() * &v);
        (v - proj).norm()
    }

    /// Largest principal angle to another subspace (`π/2` on dimension mismatch).
    pub fn angle_to(&self, other: &Subspace) -> f64 {
        linalg::max_principal_angle(&self.basis, &other.basis)
    }
}

/// A union of subspaces sharing an ambient space, none contained in another.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    subspaces: Vec<Subspace>,
}

impl Arrangement {
    pub fn new(subspaces: Vec<Subspace>) -> Result<Self> {
        let Some(first) = subspaces.first() else {
            return Err(Error::InvalidArgument("arrangement needs at least one subspace".into()));
        };
        let dim = first.ambient_dim();
        if let Some(s) = subspaces.iter().find(|s| s.ambient_dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.ambient_dim(),
            });
        }
        for (i, a) in subspaces.iter().enumerate() {
            for (j, b) in subspaces.iter().enumerate() {
                if i != j && a.dim() <= b.dim() && linalg::containment_angle(b.basis(), a.basis()) < 1e-10 {
                    return Err(Error::InvalidArgument(format!("subspace {i} lies inside subspace {j}")));
                }
            }
        }
        Ok(Self { subspaces })
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.subspaces[0].ambient_dim()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subspaces.iter().map(Subspace::dim).collect()
    }

    pub fn is_transversal(&self) -> Result<bool> {
        check_transversality(&self.subspaces)
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Orthonormal `D × d` basis from the QR factorization of a Gaussian matrix.
fn orthonormal_gaussian(rng: &mut ChaCha8Rng, ambient: usize, dim: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, ambient, dim);
    let qr = g.qr();
    let mut q = qr.q();
    // Fix signs against R's diagonal so the basis is a deterministic function
    // of the Gaussian draw, independent of the factorization's conventions.
    let r = qr.r();
    for c in 0..dim {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

fn random_subspace_from(rng: &mut ChaCha8Rng, ambient: usize, dim: usize) -> Result<Subspace> {
    if dim == 0 || dim > ambient {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension {dim} must lie in 1..={ambient}"
        )));
    }
    Subspace::new(orthonormal_gaussian(rng, ambient, dim))
}

/// Uniformly random `d`-dimensional subspace of `ℝ^D`.
pub fn random_subspace(ambient: usize, dim: usize, seed: u64) -> Result<Subspace> {
    random_subspace_from(&mut ChaCha8Rng::seed_from_u64(seed), ambient, dim)
}

/// Parameters of one synthetic draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub ambient_dim: usize,
    pub dims: Vec<usize>,
    pub counts: Vec<usize>,
    pub sigma: f64,
    pub seed: u64,
}

impl SampleSpec {
    pub fn new(ambient_dim: usize, dims: Vec<usize>, counts: Vec<usize>, sigma: f64, seed: u64) -> Self {
        Self {
            ambient_dim,
            dims,
            counts,
            sigma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.len() != self.counts.len() {
            return Err(Error::InvalidArgument(format!(
                "{} dims but {} counts",
                self.dims.len(),
                self.counts.len()
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        for &d in &self.dims {
            if d == 0 || d > self.ambient_dim || (self.sigma > 0.0 && d == self.ambient_dim) {
                return Err(Error::InvalidArgument(format!(
                    "subspace dimension {d} invalid in ambient dimension {} with sigma {}",
                    self.ambient_dim, self.sigma
                )));
            }
        }
        Ok(())
    }
}

/// Random subspaces plus unit-norm samples with noise in each subspace's
/// orthogonal complement: `x = B g + σ B^⊥ h`, `g, h` standard Gaussian, then
/// `x / ‖x‖`. Labels are the subspace index.
pub fn sample_arrangement(spec: &SampleSpec) -> Result<(PointCloud, Arrangement)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.ambient_dim;
    let subspaces = spec
        .dims
        .iter()
        .map(|&d| random_subspace_from(&mut rng, dim, d))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = spec.counts.iter().sum();
    let mut points = DMatrix::zeros(total, dim);
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for (i, (s, &count)) in subspaces.iter().zip(&spec.counts).enumerate() {
        let coeffs = gaussian_matrix(&mut rng, s.dim(), count);
        let mut block = s.basis() * coeffs;
        if spec.sigma > 0.0 {
            let comp = s.complement();
            let noise = gaussian_matrix(&mut rng, comp.ncols(), count);
            block += comp * noise * spec.sigma;
        }
        points.view_mut((row, 0), (count, dim)).copy_from(&block.transpose());
        labels.extend(std::iter::repeat_n(i, count));
        row += count;
    }
    normalize_rows(&mut points);
    let cloud = PointCloud::new(points, Some(labels))?;
    Ok((cloud, Arrangement::new(subspaces)?))
}

/// Every nonempty sub-family `I` satisfies
/// `rank [B_i^⊥]_{i∈I} = min(D, Σ_{i∈I} codim S_i)`.
pub fn check_transversality(subspaces: &[Subspace]) -> Result<bool> {
    let n = subspaces.len();
    if n > 15 {
        return Err(Error::InvalidArgument(format!("transversality check limited to 15 subspaces, got {n}")));
    }
    if n == 0 {
        return Ok(true);
    }
    let dim = subspaces[0].ambient_dim();
    let complements: Vec<DMatrix<f64>> = subspaces.iter().map(Subspace::complement).collect();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let cols: usize = members.iter().map(|&i| complements[i].ncols()).sum();
        let expected = cols.min(dim);
        if cols == 0 {
            continue;
        }
        let mut stacked = DMatrix::zeros(dim, cols);
        let mut c = 0;
        for &i in &members {
            let k = complements[i].ncols();
            stacked.view_mut((0, c), (dim, k)).copy_from(&complements[i]);
            c += k;
        }
        let svd = linalg::right_svd(&stacked.transpose());
        let rank = linalg::rank_above(&svd.values, 1e-10 * svd.values[0]);
        if rank != expected {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Random `target × D` matrix with orthonormal rows.
pub fn random_row_orthonormal(target: usize, ambient: usize, seed: u64) -> Result<DMatrix<f64>> {
    if target == 0 || target > ambient {
        return Err(Error::InvalidArgument(format!(
            "projection target {target} must lie in 1..={ambient}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(orthonormal_gaussian(&mut rng, ambient, target).transpose())
}

/// Points mapped through a random row-orthonormal `target × D` projection.
pub fn random_projection(cloud: &PointCloud, target: usize, seed: u64) -> Result<PointCloud> {
    let map = random_row_orthonormal(target, cloud.dim(), seed)?;
    cloud.transformed(&map)
}

/// Common subspace dimension `d` and subspace count `n` for a cloud drawn from
/// equal-dimensional subspaces, found by sweeping generic projections onto
/// `ℝ^{d'+1}` for growing `d'` until some degree shows a vanishing polynomial.
pub fn estimate_equal_dim_and_count(
    cloud: &PointCloud,
    max_degree: usize,
    policy: &RankPolicy,
    seed: u64,
) -> Result<(usize, usize)> {
    let dim = cloud.dim();
    for d in 1..dim {
        let projected = random_projection(cloud, d + 1, seed.wrapping_add(d as u64))?;
        for degree in 1..=max_degree {
            let m = basis_size(d + 1, degree).ok_or(Error::SizeLimit { dim: d + 1, degree })?;
            if cloud.len() < m {
                // Rank deficiency would only reflect the sample size.
                break;
            }
            if corank(&projected, degree, policy)? > 0 {
                return Ok((d, degree));
            }
        }
    }
    Err(Error::NotFound(format!("no vanishing polynomial of degree ≤ {max_degree} after projection")))
}

/// Coordinates in the top `target` principal directions (no centering), each
/// point rescaled to unit norm. Points that vanish under the projection are
/// dropped with a warning.
pub fn pca_project(cloud: &PointCloud, target: usize) -> Result<PointCloud> {
    if target == 0 || target > cloud.dim() {
        return Err(Error::InvalidArgument(format!(
            "target dimension {target} must lie in 1..={}",
            cloud.dim()
        )));
    }
    if cloud.len() < target {
        return Err(Error::NotEnoughPoints {
            required: target,
            available: cloud.len(),
        });
    }
    let svd = linalg::right_svd(cloud.matrix());
    let directions = svd.v.columns(0, target).into_owned();
    let mut coords = cloud.matrix() * directions;
    let scale = cloud.matrix().row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..coords.nrows())
        .filter(|&j| coords.row(j).norm() > 1e-12 * scale.max(f64::MIN_POSITIVE))
        .collect();
    if keep.len() < coords.nrows() {
        log::warn!("pca_project: dropped {} points with zero projection", coords.nrows() - keep.len());
        coords = coords.select_rows(&keep);
    }
    normalize_rows(&mut coords);
    let labels = cloud.labels().map(|l| keep.iter().map(|&j| l[j]).collect());
    PointCloud::new(coords, labels)
}
