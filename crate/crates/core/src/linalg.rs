//! Dense linear-algebra helpers shared by the algorithms: ordered singular
//! decompositions, null spaces, orthonormal complements and principal angles.

use nalgebra::{DMatrix, DVector};

/// Column count above which the smallest right singular vector is found by
/// shifted inverse iteration instead of a full decomposition.
pub const FULL_SVD_MAX_COLS: usize = 2000;

/// Singular values (descending) and the full `M × M` matrix of right singular
/// vectors (column `k` pairs with value `k`; columns past `min(N, M)` span the
/// trailing null space and pair with implicit zeros).
pub struct RightSvd {
    pub values: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn right_svd(a: &DMatrix<f64>) -> RightSvd {
    let (n, m) = a.shape();
    // Tall matrices go through a QR first: R carries the same right singular
    // structure at a fraction of the cost.
    let work = if n > 2 * m {
        a.clone().qr().r()
    } else if n < m {
        let mut padded = DMatrix::zeros(m, m);
        padded.view_mut((0, 0), (n, m)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let mut v = DMatrix::zeros(m, m);
    let mut values = Vec::with_capacity(m);
    for (dst, &src) in order.iter().enumerate() {
        v.set_column(dst, &v_t.row(src).transpose());
        values.push(sv[src]);
    }
    RightSvd { values, v }
}

/// Number of singular values above `tol`.
pub fn rank_above(values: &[f64], tol: f64) -> usize {
    values.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the column span of `a`, with rank decided at
/// `rel_tol × σ_max`.
pub fn orth(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = right_svd(&a.transpose());
    let top = svd.values[0];
    if top == 0.0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let rank = rank_above(&svd.values, rel_tol * top);
    svd.v.columns(0, rank).into_owned()
}

/// Orthonormal basis of the complement of the column span of `a`.
pub fn orth_complement(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let d = a.nrows();
    if a.ncols() == 0 {
        return DMatrix::identity(d, d);
    }
    let svd = right_svd(&a.transpose());
    let top = svd.values[0];
    let rank = if top == 0.0 { 0 } else { rank_above(&svd.values, rel_tol * top) };
    svd.v.columns(rank, d - rank).into_owned()
}

/// Right singular vector of the smallest singular value, with that value.
pub fn smallest_right_singular(a: &DMatrix<f64>) -> (DVector<f64>, f64) {
    if a.ncols() > FULL_SVD_MAX_COLS {
        return smallest_right_singular_iterative(a, 200, 1e-14);
    }
    let svd = right_svd(a);
    let last = a.ncols() - 1;
    (svd.v.column(last).into_owned(), svd.values[last])
}

/// Shifted inverse iteration on `AᵀA`.
pub fn smallest_right_singular_iterative(a: &DMatrix<f64>, max_iter: usize, tol: f64) -> (DVector<f64>, f64) {
    let m = a.ncols();
    let mut gram = a.transpose() * a;
    let shift = gram.trace().max(f64::MIN_POSITIVE) * 1e-13;
    for i in 0..m {
        gram[(i, i)] += shift;
    }
    let chol = match gram.clone().cholesky() {
        Some(c) => c,
        None => {
            let svd = right_svd(a);
            return (svd.v.column(m - 1).into_owned(), svd.values[m - 1]);
        }
    };
    // Deterministic start with weight on every coordinate.
    let mut v = DVector::from_fn(m, |i, _| 1.0 + (i as f64 * 0.618_033_988_7).fract());
    v.normalize_mut();
    for _ in 0..max_iter {
        let mut next = chol.solve(&v);
        next.normalize_mut();
        if next.dot(&v) < 0.0 {
            next.neg_mut();
        }
        let delta = (&next - &v).norm();
        v = next;
        if delta < tol {
            break;
        }
    }
    let sigma = (a * &v).norm();
    (v, sigma)
}

/// Orthonormal basis of `n^⊥ ⊂ ℝ^d`, from the Householder reflector that maps
/// `n̂` to `±e₁` (columns 2..d of the reflector).
pub fn householder_complement(normal: &DVector<f64>) -> Option<DMatrix<f64>> {
    let d = normal.len();
    let norm = normal.norm();
    if norm == 0.0 || !norm.is_finite() || d == 0 {
        return None;
    }
    let unit = normal / norm;
    let mut v = unit.clone();
    let sign = if unit[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vv = v.dot(&v);
    let mut out = DMatrix::zeros(d, d - 1);
    for c in 1..d {
        // column c of I − 2vvᵀ/(vᵀv)
        let scale = 2.0 * v[c] / vv;
        for r in 0..d {
            let id = if r == c { 1.0 } else { 0.0 };
            out[(r, c - 1)] = id - scale * v[r];
        }
    }
    Some(out)
}

/// Cosines of the principal angles between the spans of orthonormal `u`, `v`.
pub fn principal_cosines(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Vec<f64> {
    if u.ncols() == 0 || v.ncols() == 0 {
        return Vec::new();
    }
    let mut c: Vec<f64> = (u.transpose() * v).singular_values().iter().map(|s| s.min(1.0)).collect();
    c.sort_by(|a, b| b.total_cmp(a));
    c
}

/// Largest principal angle measured from `v` into `u`: `asin ‖(I − UUᵀ)V‖₂`.
/// Zero iff `span(v) ⊂ span(u)`; symmetric when the dimensions agree.
pub fn containment_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    if v.ncols() == 0 {
        return 0.0;
    }
    let residual = v - u * (u.transpose() * v);
    let s = residual.singular_values().max();
    s.min(1.0).asin()
}

/// Largest principal angle between two orthonormal bases; `π/2` when the
/// dimensions differ.
pub fn max_principal_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    if u.ncols() != v.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    containment_angle(u, v)
}

/// Smallest principal angle between the spans of orthonormal `u`, `v`.
pub fn min_principal_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    principal_cosines(u, v).first().map(|c| c.acos()).unwrap_or(std::f64::consts::FRAC_PI_2)
}
