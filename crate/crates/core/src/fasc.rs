//! Exact recovery on clean data: descending filtrations from a reference point
//! down to its subspace, repeated over the whole arrangement, plus recovery by
//! differentiating every vanishing polynomial at a point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datagen::Subspace;
use crate::error::{Error, Result};
use crate::linalg::{self, orth, orth_complement};
use crate::points::PointCloud;
use crate::polyring::HomogeneousPolynomial;
use crate::vanishing::{is_full_rank, minimal_degree_poly, nullspace_polys, RankPolicy};

/// A point belongs to a linear space when its relative distance to it is at
/// most this.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Gradients at the reference shorter than this (relative to the unit
/// reference) count as zero.
pub const GRADIENT_TOL: f64 = 1e-8;

/// Relative singular-value cutoff for the span of reference gradients.
const GRADIENT_RANK_TOL: f64 = 1e-8;

/// Recovered arrangement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FascOutput {
    pub n: usize,
    pub dims: Vec<usize>,
    /// `complements[i]` is a `D × codim` orthonormal basis of `S_i^⊥`.
    #[serde(with = "matrix_list")]
    pub complements: Vec<DMatrix<f64>>,
    /// Component that removed each input point.
    pub labels: Vec<usize>,
}

impl FascOutput {
    pub fn subspaces(&self) -> Result<Vec<Subspace>> {
        self.complements.iter().map(Subspace::from_normals).collect()
    }
}

mod matrix_list {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Dense {
        rows: usize,
        cols: usize,
        /// Column-major entries.
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(list: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        let dense: Vec<Dense> = list
            .iter()
            .map(|m| Dense {
                rows: m.nrows(),
                cols: m.ncols(),
                data: m.as_slice().to_vec(),
            })
            .collect();
        dense.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        let dense = Vec::<Dense>::deserialize(d)?;
        dense
            .into_iter()
            .map(|m| {
                if m.rows.checked_mul(m.cols) != Some(m.data.len()) {
                    return Err(serde::de::Error::custom("matrix shape does not match its data"));
                }
                Ok(DMatrix::from_column_slice(m.rows, m.cols, &m.data))
            })
            .collect()
    }
}

/// State of a descending filtration after `step` normals.
#[derive(Debug, Clone)]
pub struct FiltrationFrame {
    pub step: usize,
    pub working_dim: usize,
    /// `D × working_dim` orthonormal map from working coordinates into `ℝ^D`.
    pub coord_map: DMatrix<f64>,
    /// `D × step` orthonormal normals found so far.
    pub normals: DMatrix<f64>,
    /// Input rows lying in the current working space.
    pub members: Vec<usize>,
}

fn relative_distance(normals: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let n = x.norm();
    if n == 0.0 {
        return 0.0;
    }
    (normals.transpose() * x).norm() / n
}

fn members_of(normals: &DMatrix<f64>, cloud: &PointCloud) -> Vec<usize> {
    (0..cloud.len())
        .filter(|&j| relative_distance(normals, &cloud.point_vector(j)) <= MEMBERSHIP_TOL)
        .collect()
}

fn push_normal(normals: &DMatrix<f64>, b: &DVector<f64>) -> Option<DMatrix<f64>> {
    let mut v = b.clone();
    // Two Gram-Schmidt passes keep the normals orthonormal to roundoff.
    for _ in 0..2 {
        for c in normals.column_iter() {
            v -= c * c.dot(&v);
        }
    }
    let n = v.norm();
    if n < GRADIENT_TOL {
        return None;
    }
    let mut out = normals.clone().insert_column(normals.ncols(), 0.0);
    out.set_column(normals.ncols(), &(v / n));
    Some(out)
}

/// Descending filtration from `reference`, returning every frame visited.
pub fn adf_trace(
    p: &HomogeneousPolynomial,
    reference: &DVector<f64>,
    cloud: &PointCloud,
    m: usize,
    policy: &RankPolicy,
) -> Result<Vec<FiltrationFrame>> {
    let dim = cloud.dim();
    if reference.len() != dim || p.ambient_dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: reference.len(),
        });
    }
    if m == 0 {
        return Err(Error::InvalidArgument("degree bound must be at least 1".into()));
    }
    let rn = reference.norm();
    if rn == 0.0 {
        return Err(Error::InvalidArgument("reference point is zero".into()));
    }
    let reference = reference / rn;
    let grad = p.gradient(reference.as_slice())?;
    if grad.norm() < GRADIENT_TOL {
        return Err(Error::GeneralPosition("gradient vanishes at the reference".into()));
    }
    let mut normals = DMatrix::zeros(dim, 0);
    normals = push_normal(&normals, &grad).ok_or(Error::ZeroNormal)?;
    let mut frames = Vec::new();
    loop {
        let coord_map = orth_complement(&normals, 1e-12);
        let members = members_of(&normals, cloud);
        let working_dim = coord_map.ncols();
        frames.push(FiltrationFrame {
            step: normals.ncols(),
            working_dim,
            coord_map: coord_map.clone(),
            normals: normals.clone(),
            members: members.clone(),
        });
        if working_dim == 0 {
            return Err(Error::GeneralPosition("filtration exhausted the ambient space".into()));
        }
        let restricted = cloud.select(&members).transformed(&coord_map.transpose())?;
        if is_full_rank(&restricted, m, policy)? {
            return Ok(frames);
        }
        let local_ref = coord_map.transpose() * &reference;
        let mut found = None;
        for k in 1..=m {
            let polys = nullspace_polys(&restricted, k, policy)?;
            if polys.is_empty() {
                continue;
            }
            let mut grads = DMatrix::zeros(polys.len(), working_dim);
            for (r, q) in polys.iter().enumerate() {
                grads.set_row(r, &q.gradient(local_ref.as_slice())?.transpose());
            }
            let svd = linalg::right_svd(&grads);
            if svd.values[0] > GRADIENT_TOL {
                found = Some(&coord_map * svd.v.column(0));
                break;
            }
        }
        let b = found.ok_or_else(|| {
            Error::GeneralPosition(format!(
                "no vanishing polynomial of degree ≤ {m} has a nonzero gradient at the reference"
            ))
        })?;
        normals = push_normal(&normals, &b)
            .ok_or_else(|| Error::GeneralPosition("new normal lies in the span of the previous ones".into()))?;
    }
}

/// Orthonormal basis (`D × codim`) of the complement of the subspace through
/// `reference`.
pub fn adf(
    p: &HomogeneousPolynomial,
    reference: &DVector<f64>,
    cloud: &PointCloud,
    m: usize,
    policy: &RankPolicy,
) -> Result<DMatrix<f64>> {
    let frames = adf_trace(p, reference, cloud, m, policy)?;
    Ok(frames.last().expect("at least one frame").normals.clone())
}

/// Recovers every subspace of a clean sample drawn from at most `m`
/// subspaces.
pub fn fasc(cloud: &PointCloud, m: usize, policy: &RankPolicy) -> Result<FascOutput> {
    if m == 0 {
        return Err(Error::InvalidArgument("degree bound must be at least 1".into()));
    }
    let unit = cloud.normalized();
    let dim = unit.dim();
    let mut labels = vec![usize::MAX; unit.len()];
    let mut remaining: Vec<usize> = (0..unit.len()).collect();
    let mut dims = Vec::new();
    let mut complements = Vec::new();
    let mut budget = m;
    while !remaining.is_empty() {
        if budget == 0 {
            return Err(Error::GeneralPosition(format!(
                "{} points left after {} components",
                remaining.len(),
                complements.len()
            )));
        }
        let current = unit.select(&remaining);
        let normals = match minimal_degree_poly(&current, budget, policy)? {
            Some((_, p)) => {
                let grads = p.gradients(current.matrix())?;
                let (best, norm) = grads
                    .row_iter()
                    .map(|r| r.norm())
                    .enumerate()
                    .fold((0, 0.0), |a, (j, n)| if n > a.1 { (j, n) } else { a });
                if norm < GRADIENT_TOL {
                    return Err(Error::GeneralPosition("minimal polynomial is singular at every point".into()));
                }
                adf(&p, &current.point_vector(best), &current, budget, policy)?
            }
            // Nothing vanishes: the remaining points fill the ambient space.
            None => DMatrix::zeros(dim, 0),
        };
        let inside = members_of(&normals, &current);
        if inside.is_empty() {
            return Err(Error::GeneralPosition("recovered subspace contains no sample".into()));
        }
        let component = complements.len();
        for &k in &inside {
            labels[remaining[k]] = component;
        }
        let keep: Vec<usize> = (0..remaining.len())
            .filter(|k| inside.binary_search(k).is_err())
            .map(|k| remaining[k])
            .collect();
        remaining = keep;
        dims.push(dim - normals.ncols());
        complements.push(normals);
        budget -= 1;
    }
    Ok(FascOutput {
        n: complements.len(),
        dims,
        complements,
        labels,
    })
}

/// The subspace through `reference`, as the orthogonal complement of the
/// gradients at `reference` of every degree-`m` polynomial vanishing on the
/// cloud.
pub fn pda_subspace_at_point(
    cloud: &PointCloud,
    reference: &DVector<f64>,
    m: usize,
    policy: &RankPolicy,
) -> Result<Subspace> {
    let polys = nullspace_polys(cloud, m, policy)?;
    if polys.is_empty() {
        return Err(Error::NotFound(format!("no degree-{m} polynomial vanishes on the points")));
    }
    let mut grads = DMatrix::zeros(cloud.dim(), polys.len());
    for (c, q) in polys.iter().enumerate() {
        grads.set_column(c, &q.gradient(reference.as_slice())?);
    }
    let normals = orth(&grads, GRADIENT_RANK_TOL);
    Subspace::from_normals(&normals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{random_subspace, sample_arrangement, Arrangement, SampleSpec};
    use crate::vanishing::least_singular_poly;

    /// A plane and two lines in ℝ³, clean.
    fn running_example() -> (PointCloud, Arrangement) {
        sample_arrangement(&SampleSpec::new(3, vec![2, 1, 1], vec![40, 20, 20], 0.0, 17)).unwrap()
    }

    fn matches(normals: &DMatrix<f64>, s: &Subspace) -> f64 {
        linalg::max_principal_angle(&orth_complement(normals, 1e-12), s.basis())
    }

    #[test]
    fn hyperplane_takes_one_step() {
        let (cloud, arr) = sample_arrangement(&SampleSpec::new(3, vec![2], vec![20], 0.0, 2)).unwrap();
        let p = least_singular_poly(&cloud, 1).unwrap();
        let b = adf(&p, &cloud.point_vector(0), &cloud, 1, &RankPolicy::default()).unwrap();
        assert_eq!(b.ncols(), 1);
        assert!(matches(&b, &arr.subspaces()[0]) < 1e-10);
    }

    #[test]
    fn running_example_line_reference() {
        let (cloud, arr) = running_example();
        let policy = RankPolicy::default();
        let (_, p) = minimal_degree_poly(&cloud, 3, &policy).unwrap().unwrap();
        // first line sample
        let frames = adf_trace(&p, &cloud.point_vector(40), &cloud, 3, &policy).unwrap();
        let b = &frames.last().unwrap().normals;
        assert_eq!(b.ncols(), 2);
        assert!(matches(b, &arr.subspaces()[1]) < 1e-9);
        for f in &frames {
            assert!((f.normals.transpose() * &f.normals - DMatrix::identity(f.step, f.step)).amax() < 1e-12);
            assert_eq!(f.working_dim + f.step, 3);
        }
    }

    #[test]
    fn deep_reference_in_nine_dims() {
        let (cloud, arr) = sample_arrangement(&SampleSpec::new(9, vec![2, 3, 4], vec![200, 200, 200], 0.0, 21)).unwrap();
        let policy = RankPolicy::default();
        let (_, p) = minimal_degree_poly(&cloud, 3, &policy).unwrap().unwrap();
        let r = (400..600).max_by(|&a, &b| {
            let ga = p.gradient(&cloud.point(a)).unwrap().norm();
            let gb = p.gradient(&cloud.point(b)).unwrap().norm();
            ga.total_cmp(&gb)
        });
        let b = adf(&p, &cloud.point_vector(r.unwrap()), &cloud, 3, &policy).unwrap();
        assert_eq!(b.ncols(), 5);
        assert!(matches(&b, &arr.subspaces()[2]) < 1e-8);
    }

    #[test]
    fn fasc_two_lines_in_the_plane() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|k| {
                let t = 0.5 + k as f64 * 0.1;
                if k % 2 == 0 {
                    vec![t, 0.0]
                } else {
                    vec![0.0, -t]
                }
            })
            .collect();
        let cloud = PointCloud::from_rows(&rows, None).unwrap();
        let out = fasc(&cloud, 2, &RankPolicy::default()).unwrap();
        assert_eq!(out.n, 2);
        assert_eq!(out.dims, vec![1, 1]);
        for c in &out.complements {
            assert_eq!(c.ncols(), 1);
            assert!(c[(0, 0)].abs() < 1e-12 || c[(1, 0)].abs() < 1e-12);
        }
        for (j, &l) in out.labels.iter().enumerate() {
            assert_eq!(l, out.labels[j % 2]);
        }
        assert_ne!(out.labels[0], out.labels[1]);
    }

    #[test]
    fn fasc_mixed_dims_in_nine() {
        let (cloud, arr) = sample_arrangement(&SampleSpec::new(9, vec![2, 3, 4], vec![200, 200, 200], 0.0, 5)).unwrap();
        let out = fasc(&cloud, 3, &RankPolicy::default()).unwrap();
        assert_eq!(out.n, 3);
        let mut dims = out.dims.clone();
        dims.sort();
        assert_eq!(dims, vec![2, 3, 4]);
        for s in out.subspaces().unwrap() {
            let best = arr.subspaces().iter().map(|t| s.angle_to(t)).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-7, "{best}");
        }
        let json = serde_json::to_string(&out).unwrap();
        let back: FascOutput = serde_json::from_str(&json).unwrap();
        assert_eq!(back.complements, out.complements);
    }

    #[test]
    fn fasc_single_subspace() {
        for m in 1..=3 {
            let (cloud, arr) = sample_arrangement(&SampleSpec::new(5, vec![3], vec![60], 0.0, 3)).unwrap();
            let out = fasc(&cloud, m, &RankPolicy::default()).unwrap();
            assert_eq!(out.n, 1);
            assert_eq!(out.dims, vec![3]);
            assert!(out.subspaces().unwrap()[0].angle_to(&arr.subspaces()[0]) < 1e-9);
        }
    }

    #[test]
    fn pda_recovery() {
        let policy = RankPolicy::default();
        let (plane, arr) = sample_arrangement(&SampleSpec::new(3, vec![2], vec![20], 0.0, 2)).unwrap();
        let s = pda_subspace_at_point(&plane, &plane.point_vector(0), 1, &policy).unwrap();
        assert!(s.angle_to(&arr.subspaces()[0]) < 1e-10);

        let (cloud, arr) = running_example();
        for m in [3, 4] {
            let s = pda_subspace_at_point(&cloud, &cloud.point_vector(40), m, &policy).unwrap();
            assert_eq!(s.dim(), 1);
            assert!(s.angle_to(&arr.subspaces()[1]) < 1e-8);
        }
        let full = random_subspace(3, 3, 1).unwrap();
        let cloud = PointCloud::new(full.basis().transpose(), None).unwrap();
        assert!(pda_subspace_at_point(&cloud, &cloud.point_vector(0), 1, &policy).is_err());
    }
}
