//! Normalized Laplacians, spectra, spectral clustering and the evaluation
//! metrics (clustering error, intra- and inter-cluster connectivity).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// k-means restarts; the lowest-inertia run wins.
pub const KMEANS_RESTARTS: usize = 20;
pub const KMEANS_MAX_ITER: usize = 300;
/// Lloyd iterations stop once inertia improves by less than this fraction.
pub const KMEANS_REL_TOL: f64 = 1e-9;

/// Largest cluster count for which the error metric enumerates permutations.
const EXHAUSTIVE_MAX: usize = 8;

/// Labels plus the three evaluation metrics of one clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub error_percent: f64,
    pub intra: f64,
    pub inter_percent: f64,
    pub eigengap: f64,
}

/// `I − D^{−1/2} W D^{−1/2}`; zero-degree vertices get an identity row.
pub fn normalized_laplacian(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let inv_sqrt: Vec<f64> = w
        .row_iter()
        .map(|r| {
            let d: f64 = r.sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv_sqrt[i] * w[(i, j)] * inv_sqrt[j]
    })
}

/// Eigenvalues and eigenvectors of a symmetric matrix, ascending.
pub fn sorted_eigen(l: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    // Average with the transpose so roundoff asymmetry cannot leak in.
    let sym = (l + l.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn spectrum(l: &DMatrix<f64>) -> Vec<f64> {
    let sym = (l + l.transpose()) * 0.5;
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `λ_{n+1} − λ_n` (1-based) of an ascending spectrum; zero when `λ_{n+1}`
/// does not exist.
pub fn eigengap(spectrum: &[f64], n: usize) -> f64 {
    if n == 0 || n >= spectrum.len() {
        return 0.0;
    }
    spectrum[n] - spectrum[n - 1]
}

/// Spectral clustering of a symmetric nonnegative affinity into `n` groups:
/// the `n` bottom eigenvectors of the normalized Laplacian, rows scaled to
/// unit length, then seeded k-means++.
pub fn spectral_cluster(w: &DMatrix<f64>, n: usize, seed: u64) -> Result<Vec<usize>> {
    let size = w.nrows();
    if w.ncols() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            found: w.ncols(),
        });
    }
    if n == 0 || n > size {
        return Err(Error::InvalidArgument(format!("cannot form {n} clusters from {size} points")));
    }
    let (_, vectors) = sorted_eigen(&normalized_laplacian(w));
    let mut embedding = vectors.columns(0, n).into_owned();
    for mut row in embedding.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(kmeans(&embedding, n, seed).labels)
}

/// Outcome of [`kmeans`].
#[derive(Debug, Clone)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centers: DMatrix<f64>,
    pub inertia: f64,
}

fn sq_dist(points: &DMatrix<f64>, j: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols()).map(|k| (points[(j, k)] - centers[(c, k)]).powi(2)).sum()
}

fn plus_plus_init(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, dim) = points.shape();
    let mut centers = DMatrix::zeros(k, dim);
    let first = rng.random_range(0..n);
    centers.set_row(0, &points.row(first));
    let mut best: Vec<f64> = (0..n).map(|j| sq_dist(points, j, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = best.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (j, &d) in best.iter().enumerate() {
                if target < d {
                    chosen = j;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.set_row(c, &points.row(pick));
        for (j, b) in best.iter_mut().enumerate() {
            *b = b.min(sq_dist(points, j, &centers, c));
        }
    }
    centers
}

fn lloyd(points: &DMatrix<f64>, mut centers: DMatrix<f64>) -> KMeans {
    let (n, dim) = points.shape();
    let k = centers.nrows();
    let mut labels = vec![0; n];
    let mut previous = f64::INFINITY;
    let mut inertia = f64::INFINITY;
    for _ in 0..KMEANS_MAX_ITER {
        inertia = 0.0;
        let mut dists = vec![0.0; n];
        for j in 0..n {
            let (c, d) = (0..k)
                .map(|c| (c, sq_dist(points, j, &centers, c)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            labels[j] = c;
            dists[j] = d;
            inertia += d;
        }
        let mut sums = DMatrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for j in 0..n {
            counts[labels[j]] += 1;
            for t in 0..dim {
                sums[(labels[j], t)] += points[(j, t)];
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            if count == 0 {
                // Reseed an empty cluster at the worst-served point.
                let far = (0..n).fold(0, |a, j| if dists[j] > dists[a] { j } else { a });
                centers.set_row(c, &points.row(far));
                dists[far] = 0.0;
            } else {
                let row = sums.row(c) / count as f64;
                centers.set_row(c, &row);
            }
        }
        if previous.is_finite() && previous - inertia <= KMEANS_REL_TOL * previous.max(f64::MIN_POSITIVE) {
            break;
        }
        previous = inertia;
    }
    KMeans {
        labels,
        centers,
        inertia,
    }
}

/// k-means++ with [`KMEANS_RESTARTS`] seeded restarts over the rows of
/// `points`; deterministic for a given seed.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> KMeans {
    assert!(k >= 1 && k <= points.nrows(), "k must lie in 1..=N");
    let mut best: Option<KMeans> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let run = lloyd(points, plus_plus_init(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

/// Relabels arbitrary labels to `0..k` in order of first appearance.
pub fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let out = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

/// Percentage of points misassigned under the best one-to-one matching of
/// predicted to true clusters.
pub fn clustering_error(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let (p, kp) = compact_labels(pred);
    let (t, kt) = compact_labels(truth);
    let k = kp.max(kt);
    let mut overlap = vec![vec![0.0; k]; k];
    for (&a, &b) in p.iter().zip(&t) {
        overlap[a][b] += 1.0;
    }
    let matched = if k <= EXHAUSTIVE_MAX {
        best_permutation_overlap(&overlap)
    } else {
        let cost: Vec<Vec<f64>> = overlap.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let assign = hungarian(&cost);
        assign.iter().enumerate().map(|(i, &j)| overlap[i][j]).sum()
    };
    Ok(100.0 * (1.0 - matched / pred.len() as f64))
}

/// Heap's algorithm over all assignments; returns the maximum total overlap.
fn best_permutation_overlap(overlap: &[Vec<f64>]) -> f64 {
    let k = overlap.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let score = |perm: &[usize]| -> f64 { perm.iter().enumerate().map(|(i, &j)| overlap[i][j]).sum() };
    let mut best = score(&perm);
    let mut c = vec![0usize; k];
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.max(score(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian method
/// with potentials, `O(k³)`). Entry `i` of the result is the column assigned
/// to row `i`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based bookkeeping; index 0 is the virtual column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if !used[col] {
                    let cur = cost[r - 1][col - 1] - u[r] - v[col];
                    if cur < minv[col] {
                        minv[col] = cur;
                        way[col] = col0;
                    }
                    if minv[col] < delta {
                        delta = minv[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for col in 1..=n {
        if owner[col] > 0 {
            assign[owner[col] - 1] = col - 1;
        }
    }
    assign
}

fn check_square(w: &DMatrix<f64>, truth: &[usize]) -> Result<()> {
    if w.nrows() != w.ncols() || w.nrows() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: w.nrows(),
        });
    }
    Ok(())
}

/// Minimum over ground-truth classes of the algebraic connectivity (second
/// smallest normalized-Laplacian eigenvalue) of the class subgraph.
/// Singleton classes contribute 0.
pub fn intra_connectivity(w: &DMatrix<f64>, truth: &[usize]) -> Result<f64> {
    check_square(w, truth)?;
    let (t, k) = compact_labels(truth);
    let mut worst = f64::INFINITY;
    for class in 0..k {
        let members: Vec<usize> = (0..t.len()).filter(|&j| t[j] == class).collect();
        let value = if members.len() < 2 {
            log::warn!("intra_connectivity: singleton class contributes 0");
            0.0
        } else {
            let sub = w.select_rows(&members).select_columns(&members);
            spectrum(&normalized_laplacian(&sub))[1]
        };
        worst = worst.min(value);
    }
    Ok(if worst.is_finite() { worst } else { 0.0 })
}

/// Percentage of the affinity's ℓ1 mass (diagonal included) joining points
/// from different ground-truth classes.
pub fn inter_connectivity(w: &DMatrix<f64>, truth: &[usize]) -> Result<f64> {
    check_square(w, truth)?;
    let mut total = 0.0;
    let mut cross = 0.0;
    for j in 0..w.nrows() {
        for k in 0..w.ncols() {
            let a = w[(j, k)].abs();
            total += a;
            if truth[j] != truth[k] {
                cross += a;
            }
        }
    }
    if total == 0.0 {
        return Err(Error::InvalidArgument("affinity is identically zero".into()));
    }
    Ok(100.0 * cross / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(sizes: &[usize]) -> (DMatrix<f64>, Vec<usize>) {
        let n: usize = sizes.iter().sum();
        let mut labels = Vec::new();
        for (i, &s) in sizes.iter().enumerate() {
            labels.extend(std::iter::repeat_n(i, s));
        }
        let w = DMatrix::from_fn(n, n, |a, b| if labels[a] == labels[b] { 1.0 } else { 0.0 });
        (w, labels)
    }

    #[test]
    fn complete_graph_spectrum() {
        let w = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 });
        let s = spectrum(&normalized_laplacian(&w));
        let expect = [0.0, 1.5, 1.5];
        for (a, b) in s.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(normalized_laplacian(&zero), DMatrix::identity(4, 4));
    }

    #[test]
    fn block_multiplicity_and_trace() {
        let (w, _) = blocks(&[3, 4, 5]);
        let s = spectrum(&normalized_laplacian(&w));
        assert_eq!(s.iter().filter(|v| v.abs() < 1e-10).count(), 3);
        let l = normalized_laplacian(&w);
        assert!((s.iter().sum::<f64>() - l.trace()).abs() < 1e-8);
        assert!((eigengap(&s, 3) - 1.0).abs() < 1e-10);
        assert_eq!(eigengap(&s, 12), 0.0);
    }

    #[test]
    fn spectral_cluster_recovers_blocks() {
        let (w, truth) = blocks(&[10, 20, 30]);
        for seed in 0..5 {
            let labels = spectral_cluster(&w, 3, seed).unwrap();
            assert_eq!(clustering_error(&labels, &truth).unwrap(), 0.0);
        }
        assert!(spectral_cluster(&w, 61, 0).is_err());
        let ones = DMatrix::from_element(6, 6, 1.0);
        assert_eq!(spectral_cluster(&ones, 2, 4).unwrap(), spectral_cluster(&ones, 2, 4).unwrap());
    }

    #[test]
    fn error_examples() {
        assert_eq!(clustering_error(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(clustering_error(&[1, 1, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(clustering_error(&[1, 2, 2, 2], &[1, 1, 2, 2]).unwrap(), 25.0);
        assert!(clustering_error(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn hungarian_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 1..=7 {
            for _ in 0..20 {
                let overlap: Vec<Vec<f64>> =
                    (0..k).map(|_| (0..k).map(|_| rng.random_range(0..20) as f64).collect()).collect();
                let cost: Vec<Vec<f64>> = overlap.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
                let assign = hungarian(&cost);
                let mut seen = assign.clone();
                seen.sort();
                assert_eq!(seen, (0..k).collect::<Vec<_>>());
                let h: f64 = assign.iter().enumerate().map(|(i, &j)| overlap[i][j]).sum();
                assert_eq!(h, best_permutation_overlap(&overlap));
            }
        }
    }

    #[test]
    fn many_clusters_use_assignment() {
        let truth: Vec<usize> = (0..100).map(|j| j % 10).collect();
        let pred: Vec<usize> = truth.iter().map(|l| (l * 7 + 3) % 10).collect();
        assert_eq!(clustering_error(&pred, &truth).unwrap(), 0.0);
        let mut bad = pred.clone();
        bad[0] = (bad[0] + 1) % 10;
        assert!((clustering_error(&bad, &truth).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn connectivity() {
        let (w, truth) = blocks(&[4, 6]);
        // all-ones blocks with self-loops have λ₂ = 1; K_m alone gives m/(m−1)
        assert!((intra_connectivity(&w, &truth).unwrap() - 1.0).abs() < 1e-12);
        let no_loops = DMatrix::from_fn(10, 10, |a, b| if a != b { w[(a, b)] } else { 0.0 });
        assert!((intra_connectivity(&no_loops, &truth).unwrap() - 6.0 / 5.0).abs() < 1e-12);
        assert_eq!(inter_connectivity(&w, &truth).unwrap(), 0.0);
        let cross = DMatrix::from_fn(10, 10, |a, b| 1.0 - w[(a, b)]);
        assert_eq!(inter_connectivity(&cross, &truth).unwrap(), 100.0);
        assert!(inter_connectivity(&DMatrix::zeros(10, 10), &truth).is_err());

        let split = DMatrix::from_fn(4, 4, |a, b| if a / 2 == b / 2 { 1.0 } else { 0.0 });
        assert!(intra_connectivity(&split, &[0, 0, 0, 0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn eigengap_drops_under_cross_noise() {
        let (w, _) = blocks(&[10, 15, 20]);
        let noisy = w.map(|v| v + 0.05);
        let clean = eigengap(&spectrum(&normalized_laplacian(&w)), 3);
        let blurred = eigengap(&spectrum(&normalized_laplacian(&noisy)), 3);
        assert!(clean > blurred);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn laplacian_spectrum_in_range(seed in 0u64..5000, n in 1usize..25, sparsity in 0.0f64..1.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut w = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        if rng.random::<f64>() > sparsity {
                            let v: f64 = rng.random();
                            w[(i, j)] = v;
                            w[(j, i)] = v;
                        }
                    }
                }
                let s = spectrum(&normalized_laplacian(&w));
                prop_assert!(s.iter().all(|v| (-1e-10..=2.0 + 1e-10).contains(v)));
            }

            #[test]
            fn error_is_permutation_invariant(labels in proptest::collection::vec(0usize..5, 1..60), truth_seed in 0u64..1000, shift in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(truth_seed);
                let truth: Vec<usize> = labels.iter().map(|_| rng.random_range(0..5)).collect();
                let relabeled: Vec<usize> = labels.iter().map(|l| (l + shift) % 5 + 10).collect();
                let a = clustering_error(&labels, &truth).unwrap();
                prop_assert_eq!(a, clustering_error(&relabeled, &truth).unwrap());
                let truth_relabeled: Vec<usize> = truth.iter().map(|l| 7 * l + 1).collect();
                prop_assert_eq!(a, clustering_error(&labels, &truth_relabeled).unwrap());
                prop_assert!((0.0..=100.0).contains(&a));
            }

            #[test]
            fn distinct_blocks_always_recovered(seed in 0u64..1000, a in 1usize..40, b in 1usize..40, c in 1usize..40) {
                prop_assume!(a != b && b != c && a != c);
                let (w, truth) = blocks(&[a, b, c]);
                let labels = spectral_cluster(&w, 3, seed).unwrap();
                prop_assert_eq!(clustering_error(&labels, &truth).unwrap(), 0.0);
            }
        }
    }
}
