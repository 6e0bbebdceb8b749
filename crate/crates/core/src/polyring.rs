//! Graded monomial bases, the Veronese embedding and homogeneous polynomials
//! represented by their coefficient vectors.
//!
//! Monomials of degree `ℓ` in `D` variables are ordered graded-lexicographic
//! descending, e.g. for `D = 3, ℓ = 2`:
//! `x1², x1x2, x1x3, x2², x2x3, x3²`. Every coefficient vector in the crate is
//! expressed in that order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::points::PointCloud;

/// Largest basis the crate is willing to materialize.
pub const MAX_BASIS_SIZE: usize = 1 << 24;

/// `M_ℓ(D) = C(ℓ + D − 1, ℓ)`, or `None` on overflow.
pub fn basis_size(dim: usize, degree: usize) -> Option<usize> {
    if dim == 0 {
        return None;
    }
    // C(n, k) with k = min(ℓ, D − 1), built incrementally so every
    // intermediate value is itself a binomial coefficient.
    let n = degree.checked_add(dim - 1)?;
    let k = degree.min(dim - 1);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    usize::try_from(acc).ok()
}

/// One sparse differentiation entry: `∂/∂x_k` maps coefficient `src` of the
/// degree-ℓ basis onto coefficient `dst` of the degree-(ℓ−1) basis, scaled by
/// `factor = α_k`.
#[derive(Debug, Clone, Copy)]
struct DiffEntry {
    src: usize,
    dst: usize,
    factor: f64,
}

#[derive(Debug)]
pub struct MonomialBasis {
    ambient_dim: usize,
    degree: usize,
    /// Flattened exponent tuples, `len() * ambient_dim` entries.
    exponents: Vec<u32>,
    diff: OnceLock<Vec<Vec<DiffEntry>>>,
}

impl MonomialBasis {
    fn build(dim: usize, degree: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("ambient dimension must be positive".into()));
        }
        let size = basis_size(dim, degree).ok_or(Error::SizeLimit { dim, degree })?;
        if size > MAX_BASIS_SIZE {
            return Err(Error::SizeLimit { dim, degree });
        }
        let mut exponents = Vec::with_capacity(size * dim);
        let mut current = vec![0u32; dim];
        fill_exponents(&mut current, 0, degree as u32, &mut exponents);
        debug_assert_eq!(exponents.len(), size * dim);
        Ok(Self {
            ambient_dim: dim,
            degree,
            exponents,
            diff: OnceLock::new(),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len() / self.ambient_dim
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Exponent tuple of monomial `k`.
    pub fn exponent(&self, k: usize) -> &[u32] {
        &self.exponents[k * self.ambient_dim..(k + 1) * self.ambient_dim]
    }

    pub fn exponents(&self) -> impl Iterator<Item = &[u32]> {
        self.exponents.chunks_exact(self.ambient_dim)
    }

    /// Index of an exponent tuple, if it belongs to this basis.
    pub fn index_of(&self, exponent: &[u32]) -> Option<usize> {
        if exponent.len() != self.ambient_dim {
            return None;
        }
        // Graded-lex descending is a total order, so binary search works with
        // the comparison reversed.
        let len = self.len();
        let (mut lo, mut hi) = (0usize, len);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.exponent(mid).cmp(exponent) {
                std::cmp::Ordering::Equal => return Some(mid),
                std::cmp::Ordering::Greater => lo = mid + 1,
                std::cmp::Ordering::Less => hi = mid,
            }
        }
        None
    }

    /// Veronese image `ν_ℓ(x)`.
    pub fn veronese(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.ambient_dim, x.len())?;
        let mut out = DVector::zeros(self.len());
        self.veronese_into(x, out.as_mut_slice());
        Ok(out)
    }

    fn veronese_into(&self, x: &[f64], out: &mut [f64]) {
        let dim = self.ambient_dim;
        let stride = self.degree + 1;
        let mut powers = vec![1.0; dim * stride];
        for (j, &xj) in x.iter().enumerate() {
            for e in 1..stride {
                powers[j * stride + e] = powers[j * stride + e - 1] * xj;
            }
        }
        for (slot, alpha) in out.iter_mut().zip(self.exponents()) {
            let mut v = 1.0;
            for (j, &a) in alpha.iter().enumerate() {
                if a != 0 {
                    v *= powers[j * stride + a as usize];
                }
            }
            *slot = v;
        }
    }

    /// Embedded data matrix: row `j` is `ν_ℓ` of row `j` of `points`.
    pub fn embed_rows(&self, points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.ambient_dim, points.ncols())?;
        let n = points.nrows();
        let m = self.len();
        let mut out = DMatrix::zeros(n, m);
        let mut row = vec![0.0; self.ambient_dim];
        let mut buf = vec![0.0; m];
        for j in 0..n {
            for (c, slot) in row.iter_mut().enumerate() {
                *slot = points[(j, c)];
            }
            self.veronese_into(&row, &mut buf);
            for (k, v) in buf.iter().enumerate() {
                out[(j, k)] = *v;
            }
        }
        Ok(out)
    }

    /// Sparse differentiation operators, built on first use.
    fn diff_ops(&self) -> &[Vec<DiffEntry>] {
        self.diff.get_or_init(|| {
            if self.degree == 0 {
                return vec![Vec::new(); self.ambient_dim];
            }
            let lower = basis_for(self.ambient_dim, self.degree - 1)
                .expect("lower-degree basis is smaller than an existing one");
            let mut ops = vec![Vec::new(); self.ambient_dim];
            let mut shifted = vec![0u32; self.ambient_dim];
            for (src, alpha) in self.exponents().enumerate() {
                for (k, op) in ops.iter_mut().enumerate() {
                    if alpha[k] == 0 {
                        continue;
                    }
                    shifted.copy_from_slice(alpha);
                    shifted[k] -= 1;
                    let dst = lower.index_of(&shifted).expect("shifted exponent lies in lower basis");
                    op.push(DiffEntry {
                        src,
                        dst,
                        factor: alpha[k] as f64,
                    });
                }
            }
            ops
        })
    }
}

impl PartialEq for MonomialBasis {
    fn eq(&self, other: &Self) -> bool {
        self.ambient_dim == other.ambient_dim && self.degree == other.degree
    }
}

fn fill_exponents(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<u32>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.extend_from_slice(current);
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_exponents(current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

type BasisCache = Mutex<HashMap<(usize, usize), Arc<MonomialBasis>>>;

fn basis_for(dim: usize, degree: usize) -> Result<Arc<MonomialBasis>> {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(b) = cache.lock().unwrap().get(&(dim, degree)) {
        return Ok(b.clone());
    }
    let basis = Arc::new(MonomialBasis::build(dim, degree)?);
    let mut guard = cache.lock().unwrap();
    Ok(guard.entry((dim, degree)).or_insert(basis).clone())
}

/// Shared graded basis of degree-`degree` monomials in `dim` variables.
///
/// Bases are cached per `(dim, degree)`, so repeated calls are cheap and the
/// differentiation operators are only built once.
pub fn monomial_basis(dim: usize, degree: usize) -> Result<Arc<MonomialBasis>> {
    if degree == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    basis_for(dim, degree)
}

/// `ν_ℓ(x)` in the graded basis.
pub fn veronese(x: &[f64], basis: &MonomialBasis) -> Result<DVector<f64>> {
    basis.veronese(x)
}

/// Embedded data matrix `ν_ℓ(X)` with one row per point.
pub fn embed(cloud: &PointCloud, degree: usize) -> Result<DMatrix<f64>> {
    let basis = monomial_basis(cloud.dim(), degree)?;
    basis.embed_rows(cloud.matrix())
}

#[derive(Debug, Clone)]
pub struct HomogeneousPolynomial {
    basis: Arc<MonomialBasis>,
    coeffs: DVector<f64>,
}

impl HomogeneousPolynomial {
    pub fn new(basis: Arc<MonomialBasis>, coeffs: DVector<f64>) -> Result<Self> {
        check_dim(basis.len(), coeffs.len())?;
        Ok(Self { basis, coeffs })
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.ambient_dim()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            basis: self.basis.clone(),
            coeffs: &self.coeffs * factor,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.coeffs.dot(&self.basis.veronese(x)?))
    }

    /// `∇p|_x`.
    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.ambient_dim(), x.len())?;
        let jac = self.derivative_coeffs();
        if self.degree() == 1 {
            return Ok(jac.column(0).into_owned());
        }
        let lower = basis_for(self.ambient_dim(), self.degree() - 1)?;
        Ok(&jac * lower.veronese(x)?)
    }

    /// Gradients at every row of `points`, returned as an `N × D` matrix.
    pub fn gradients(&self, points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.ambient_dim(), points.ncols())?;
        let jac = self.derivative_coeffs();
        if self.degree() == 1 {
            let row = jac.column(0).transpose();
            return Ok(DMatrix::from_fn(points.nrows(), self.ambient_dim(), |_, k| row[k]));
        }
        let lower = basis_for(self.ambient_dim(), self.degree() - 1)?;
        Ok(lower.embed_rows(points)? * jac.transpose())
    }

    /// `D × M_{ℓ−1}(D)` matrix whose row `k` holds the coefficients of
    /// `∂p/∂x_k` in the degree-(ℓ−1) basis.
    pub fn derivative_coeffs(&self) -> DMatrix<f64> {
        let ops = self.basis.diff_ops();
        let lower_len = basis_size(self.ambient_dim(), self.degree() - 1).unwrap_or(1);
        let mut jac = DMatrix::zeros(self.ambient_dim(), lower_len);
        for (k, op) in ops.iter().enumerate() {
            for e in op {
                jac[(k, e.dst)] += e.factor * self.coeffs[e.src];
            }
        }
        jac
    }
}
