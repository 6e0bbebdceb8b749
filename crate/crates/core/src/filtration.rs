//! Robust per-point filtrations and the spectral driver built on them.
//!
//! Each reference point repeatedly projects the data onto the hyperplane
//! orthogonal to a vanishing polynomial's gradient at the reference, keeping
//! only the points whose norm survives the projection. The surviving norms
//! form one row of the affinity.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::householder_complement;
use crate::points::PointCloud;
use crate::polyring::{basis_size, HomogeneousPolynomial};
use crate::spectral::{eigengap, normalized_laplacian, spectral_cluster, spectrum};
use crate::vanishing::{beta, least_singular_poly, MIN_GRADIENT_NORM};

/// Drop thresholds below this are raised to it, so roundoff on points lying
/// exactly in a hyperplane never counts as a drop.
pub const MIN_DROP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiltrationParams {
    /// Degree of the working polynomials.
    pub degree: usize,
    /// Smallest surviving set worth continuing with.
    pub min_cluster: usize,
    /// Largest relative norm drop a surviving point may suffer per step.
    pub delta: f64,
}

impl FiltrationParams {
    pub fn new(degree: usize, min_cluster: usize, delta: f64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidArgument("degree must be at least 1".into()));
        }
        if min_cluster == 0 {
            return Err(Error::InvalidArgument("minimum cluster size must be at least 1".into()));
        }
        if delta.is_nan() || delta < 0.0 {
            return Err(Error::InvalidArgument(format!("drop threshold must be nonnegative, got {delta}")));
        }
        Ok(Self {
            degree,
            min_cluster,
            delta,
        })
    }
}

/// One affinity row plus the number of steps that wrote it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiltrationRow {
    pub values: Vec<f64>,
    pub steps: usize,
}

/// Relative norm decrease `(‖x‖ − ‖π(x)‖)/‖x‖` for `t = ⟨x, n̂⟩/‖x‖`, written
/// as `t²/(1 + √(1 − t²))` to avoid cancellation when `t` is tiny.
fn relative_drop(t: f64) -> f64 {
    let t2 = (t * t).min(1.0);
    t2 / (1.0 + (1.0 - t2).sqrt())
}

/// Coordinates of `points` (rows, `N × d`) in an orthonormal basis of the
/// hyperplane `normal^⊥`, with each point's relative norm drop.
pub fn project_to_hyperplane(points: &DMatrix<f64>, normal: &DVector<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let basis = hyperplane_basis(points.ncols(), normal)?;
    project_in_basis(points, normal, &basis)
}

fn hyperplane_basis(dim: usize, normal: &DVector<f64>) -> Result<DMatrix<f64>> {
    if normal.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: normal.len(),
        });
    }
    if dim < 2 {
        return Err(Error::InvalidArgument("hyperplane projection needs d ≥ 2".into()));
    }
    householder_complement(normal).ok_or(Error::ZeroNormal)
}

fn project_in_basis(
    points: &DMatrix<f64>,
    normal: &DVector<f64>,
    basis: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let norm = normal.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroNormal);
    }
    let unit = normal / norm;
    let along = points * &unit;
    let drops = points
        .row_iter()
        .zip(along.iter())
        .map(|(x, &a)| {
            let xn = x.norm();
            if xn == 0.0 {
                0.0
            } else {
                relative_drop(a / xn)
            }
        })
        .collect();
    Ok((points * basis, drops))
}

/// Chooses the orthonormal `d × (d−1)` basis of a hyperplane from its normal.
pub type BasisChooser<'a> = dyn Fn(&DVector<f64>) -> Option<DMatrix<f64>> + Sync + 'a;

/// One filtration from reference `ref_index` of a unit-norm cloud, starting
/// from the vanishing polynomial `p`.
pub fn single_filtration(
    cloud: &PointCloud,
    ref_index: usize,
    p: &HomogeneousPolynomial,
    params: &FiltrationParams,
) -> Result<FiltrationRow> {
    single_filtration_with_basis(cloud, ref_index, p, params, &householder_complement)
}

/// As [`single_filtration`], with the hyperplane coordinates chosen by
/// `chooser` instead of the Householder complement.
pub fn single_filtration_with_basis(
    cloud: &PointCloud,
    ref_index: usize,
    p: &HomogeneousPolynomial,
    params: &FiltrationParams,
    chooser: &BasisChooser<'_>,
) -> Result<FiltrationRow> {
    let n_points = cloud.len();
    let ambient = cloud.dim();
    if ref_index >= n_points {
        return Err(Error::InvalidArgument(format!("reference {ref_index} out of range for {n_points} points")));
    }
    if p.ambient_dim() != ambient {
        return Err(Error::DimensionMismatch {
            expected: ambient,
            found: p.ambient_dim(),
        });
    }
    let delta = params.delta.max(MIN_DROP_THRESHOLD);
    let mut values = vec![0.0; n_points];
    let mut steps = 0;

    let mut d = ambient;
    let mut survivors: Vec<usize> = (0..n_points).collect();
    let mut points = cloud.matrix().clone();
    let mut reference = cloud.point_vector(ref_index);
    let mut q = p.clone();

    while d > 1 {
        let grad = q.gradient(reference.as_slice())?;
        if grad.norm() < MIN_GRADIENT_NORM {
            // Nothing to cut along; keep whatever was written so far.
            break;
        }
        let basis = chooser(&grad).ok_or(Error::ZeroNormal)?;
        let (ref_image, ref_drop) = project_in_basis(&DMatrix::from_row_slice(1, d, reference.as_slice()), &grad, &basis)?;
        let (images, drops) = project_in_basis(&points, &grad, &basis)?;

        if ref_drop[0] > delta {
            if d == ambient {
                for (k, &j) in survivors.iter().enumerate() {
                    values[j] = images.row(k).norm();
                }
            }
            break;
        }

        let keep: Vec<usize> = (0..survivors.len()).filter(|&k| drops[k] <= delta).collect();
        if keep.len() < params.min_cluster {
            break;
        }
        values.iter_mut().for_each(|v| *v = 0.0);
        for &k in &keep {
            values[survivors[k]] = images.row(k).norm();
        }
        steps += 1;

        let needed = basis_size(d, params.degree).ok_or(Error::SizeLimit { dim: d, degree: params.degree })?;
        if keep.len() < needed {
            break;
        }
        d -= 1;
        reference = ref_image.row(0).transpose();
        points = images.select_rows(&keep);
        survivors = keep.iter().map(|&k| survivors[k]).collect();
        q = least_singular_poly(&PointCloud::new(points.clone(), None)?, params.degree)?;
    }
    Ok(FiltrationRow { values, steps })
}

/// Configuration of the spectral filtration driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsascConfig {
    /// Degree of the working polynomials (the subspace count in the basic setting).
    pub degree: usize,
    /// Number of clusters requested from the spectral step.
    pub clusters: usize,
    pub min_cluster: usize,
    /// Candidate multipliers of β; each gives `δ = γ β`.
    pub gammas: Vec<f64>,
    pub seed: u64,
}

impl FsascConfig {
    /// Defaults for synthetic runs: `L = 10`, a single `γ = 0.1`.
    pub fn new(subspaces: usize) -> Self {
        Self {
            degree: subspaces,
            clusters: subspaces,
            min_cluster: 10,
            gammas: vec![0.1],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FsascOutput {
    pub labels: Vec<usize>,
    /// The selected (unsymmetrized) affinity `C*`.
    pub affinity: DMatrix<f64>,
    pub eigengap: f64,
    pub gamma: f64,
    pub beta: f64,
    pub steps: Vec<usize>,
}

/// Affinity of every filtration row for one drop threshold.
pub fn filtration_affinity(
    cloud: &PointCloud,
    p: &HomogeneousPolynomial,
    params: &FiltrationParams,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let n = cloud.len();
    let rows: Vec<FiltrationRow> = (0..n)
        .into_par_iter()
        .map(|j| single_filtration(cloud, j, p, params))
        .collect::<Result<_>>()?;
    let mut c = DMatrix::zeros(n, n);
    let mut steps = Vec::with_capacity(n);
    for (j, row) in rows.into_iter().enumerate() {
        for (k, v) in row.values.into_iter().enumerate() {
            c[(j, k)] = v;
        }
        steps.push(row.steps);
    }
    Ok((c, steps))
}

/// Filtrated spectral clustering: builds one affinity per `γ`, keeps the one
/// with the largest eigengap after the requested cluster count, and clusters
/// its symmetrization.
pub fn fsasc(cloud: &PointCloud, config: &FsascConfig) -> Result<FsascOutput> {
    if config.gammas.is_empty() {
        return Err(Error::InvalidArgument("at least one γ is required".into()));
    }
    if config.clusters == 0 {
        return Err(Error::InvalidArgument("cluster count must be at least 1".into()));
    }
    if let Some(g) = config.gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::InvalidArgument(format!("γ must be nonnegative, got {g}")));
    }
    let required = basis_size(cloud.dim(), config.degree).ok_or(Error::SizeLimit {
        dim: cloud.dim(),
        degree: config.degree,
    })?;
    if cloud.len() < required {
        return Err(Error::NotEnoughPoints {
            required,
            available: cloud.len(),
        });
    }
    if config.clusters > cloud.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot form {} clusters from {} points",
            config.clusters,
            cloud.len()
        )));
    }
    let unit = cloud.normalized();
    let p = least_singular_poly(&unit, config.degree)?;
    let beta = beta(&unit, &p)?;

    let mut best: Option<(f64, f64, DMatrix<f64>, Vec<usize>)> = None;
    for &gamma in &config.gammas {
        let params = FiltrationParams::new(config.degree, config.min_cluster, gamma * beta)?;
        let (c, steps) = filtration_affinity(&unit, &p, &params)?;
        let gap = eigengap(&spectrum(&normalized_laplacian(&(&c + c.transpose()))), config.clusters);
        log::debug!("fsasc: γ = {gamma}, eigengap = {gap}");
        if best.as_ref().is_none_or(|b| b.0 < gap) {
            best = Some((gap, gamma, c, steps));
        }
    }
    let (gap, gamma, c, steps) = best.expect("γ list is nonempty");
    let labels = spectral_cluster(&(&c + c.transpose()), config.clusters, config.seed)?;
    Ok(FsascOutput {
        labels,
        affinity: c,
        eigengap: gap,
        gamma,
        beta,
        steps,
    })
}
