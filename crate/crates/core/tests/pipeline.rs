//! End-to-end checks across sampling, vanishing polynomials and the three
//! clustering front ends.

use fasc::datagen::{random_row_orthonormal, sample_arrangement, SampleSpec};
use fasc::fasc::fasc;
use fasc::filtration::{fsasc, FsascConfig};
use fasc::sasc::{sasc_cluster, SascVariant};
use fasc::spectral::clustering_error;
use fasc::vanishing::least_singular_poly;
use fasc::{PointCloud, RankPolicy};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn truth(cloud: &PointCloud) -> Vec<usize> {
    cloud.labels().unwrap().to_vec()
}

#[test]
fn vanishing_quadric_is_product_of_normals() {
    // Two planes in R^3; the degree-2 vanishing polynomial is (b1.x)(b2.x) up to scale.
    let spec = SampleSpec::new(3, vec![2, 2], vec![30, 30], 0.0, 21);
    let (cloud, arr) = sample_arrangement(&spec).unwrap();
    let p = least_singular_poly(&cloud, 2).unwrap();
    let b: Vec<DVector<f64>> = arr.subspaces().iter().map(|s| s.complement().column(0).into_owned()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ratio = None;
    for _ in 0..20 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xv = DVector::from_column_slice(&x);
        let q = b[0].dot(&xv) * b[1].dot(&xv);
        let r = p.eval(&x).unwrap() / q;
        let r0 = *ratio.get_or_insert(r);
        assert!((r - r0).abs() < 1e-8 * r0.abs(), "{r} vs {r0}");
    }
}

#[test]
fn fasc_recovers_ground_truth() {
    let spec = SampleSpec::new(6, vec![1, 3, 4], vec![40, 60, 80], 0.0, 33);
    let (cloud, arr) = sample_arrangement(&spec).unwrap();
    let out = fasc(&cloud, 3, &RankPolicy::default()).unwrap();
    assert_eq!(clustering_error(&out.labels, &truth(&cloud)).unwrap(), 0.0);
    for found in out.subspaces().unwrap() {
        let best = arr
            .subspaces()
            .iter()
            .map(|s| s.angle_to(&found))
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-8, "angle {best}");
    }
}

#[test]
fn fsasc_ignores_rotation_and_order() {
    let spec = SampleSpec::new(5, vec![1, 2, 3], vec![40, 40, 40], 0.0, 44);
    let (cloud, _) = sample_arrangement(&spec).unwrap();
    let cfg = FsascConfig::new(3);
    let base = fsasc(&cloud, &cfg).unwrap();
    assert_eq!(clustering_error(&base.labels, &truth(&cloud)).unwrap(), 0.0);

    let q = random_row_orthonormal(5, 5, 7).unwrap();
    let rotated = cloud.transformed(&q).unwrap();
    let out = fsasc(&rotated, &cfg).unwrap();
    assert_eq!(clustering_error(&out.labels, &base.labels).unwrap(), 0.0);

    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let shuffled = cloud.select(&order);
    let out = fsasc(&shuffled, &cfg).unwrap();
    assert_eq!(clustering_error(&out.labels, &truth(&shuffled)).unwrap(), 0.0);
}

#[test]
fn runs_are_reproducible() {
    let spec = SampleSpec::new(4, vec![1, 2], vec![30, 30], 0.02, 55);
    let (a, _) = sample_arrangement(&spec).unwrap();
    let (b, _) = sample_arrangement(&spec).unwrap();
    assert_eq!(a, b);
    let cfg = FsascConfig::new(2);
    assert_eq!(fsasc(&a, &cfg).unwrap().labels, fsasc(&b, &cfg).unwrap().labels);
    let x = sasc_cluster(&a, 2, 2, SascVariant::Dist, 1).unwrap();
    let y = sasc_cluster(&b, 2, 2, SascVariant::Dist, 1).unwrap();
    assert_eq!(x.labels, y.labels);
}

#[test]
fn affinity_is_block_diagonal_on_clean_data() {
    let spec = SampleSpec::new(4, vec![2, 2], vec![25, 25], 0.0, 66);
    let (cloud, _) = sample_arrangement(&spec).unwrap();
    let out = fsasc(&cloud, &FsascConfig::new(2)).unwrap();
    let w: DMatrix<f64> = &out.affinity + out.affinity.transpose();
    let t = truth(&cloud);
    for i in 0..cloud.len() {
        for j in 0..cloud.len() {
            if t[i] != t[j] {
                assert_eq!(w[(i, j)], 0.0, "({i}, {j})");
            }
        }
    }
}
