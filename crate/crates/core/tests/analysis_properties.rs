use hyperhier_core::analysis::{
    class_norm_stats, concavity_scan, default_grid, interclass_distance_cv, mean_cv, plane_distance_cv,
    scan_is_concave, Cv, EmbeddingSpace, LabeledEmbeddings,
};
use hyperhier_core::geometry::{dh_de_derivative, BallConfig, TangentVector};
use hyperhier_core::mlr::EuclideanMLR;
use hyperhier_core::train::FlatModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(rng: &mut ChaCha8Rng, space: EmbeddingSpace, per_class: usize, scale: f64) -> LabeledEmbeddings {
    let centers = [[0.5, 0.0], [0.0, 0.5], [-0.5, 0.0], [0.0, -0.5]];
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per_class {
            points.push(vec![
                scale * (c[0] + rng.random_range(-0.1..0.1)),
                scale * (c[1] + rng.random_range(-0.1..0.1)),
            ]);
            labels.push(k);
        }
    }
    LabeledEmbeddings::new(space, points, labels).unwrap()
}

fn rotate(data: &LabeledEmbeddings, angle: f64) -> LabeledEmbeddings {
    let (s, c) = angle.sin_cos();
    let points = data.points().iter().map(|p| vec![c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect();
    LabeledEmbeddings::new(data.space(), points, data.labels().to_vec()).unwrap()
}

#[test]
fn cv_is_rotation_invariant_in_both_geometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (space, scale) in [(EmbeddingSpace::Euclidean, 3.0), (EmbeddingSpace::Ball(BallConfig::unit()), 1.5)] {
        let data = blobs(&mut rng, space, 20, scale);
        for angle in [0.3, 1.1, 2.9] {
            let rotated = rotate(&data, angle);
            for anchor in 0..4 {
                let a = interclass_distance_cv(&data, anchor, 4, 100_000, 0).unwrap();
                let b = interclass_distance_cv(&rotated, anchor, 4, 100_000, 0).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x.cv.value().unwrap() - y.cv.value().unwrap()).abs() <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn pair_subsampling_is_seeded() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data = blobs(&mut rng, EmbeddingSpace::Euclidean, 30, 1.0);
    let a = interclass_distance_cv(&data, 0, 4, 100, 5).unwrap();
    let b = interclass_distance_cv(&data, 0, 4, 100, 5).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|r| r.pairs == 100));
    let full = interclass_distance_cv(&data, 0, 4, 100_000, 5).unwrap();
    assert!(full.iter().all(|r| r.pairs == 900));
    let other_seed = interclass_distance_cv(&data, 0, 4, 100, 6).unwrap();
    assert_ne!(a, other_seed);
}

#[test]
fn point_masses_and_degenerate_classes() {
    let points = vec![vec![0.1, 0.0], vec![0.1, 0.0], vec![0.0, 0.3], vec![0.0, 0.3]];
    let data = LabeledEmbeddings::new(EmbeddingSpace::Ball(BallConfig::unit()), points.clone(), vec![0, 0, 1, 1]).unwrap();
    let r = interclass_distance_cv(&data, 0, 2, 100_000, 0).unwrap();
    assert_eq!(r[0].cv, Cv::Value(0.0));

    let twin = LabeledEmbeddings::new(EmbeddingSpace::Euclidean, vec![points[0].clone(); 4], vec![0, 0, 1, 1]).unwrap();
    let r = interclass_distance_cv(&twin, 0, 2, 100_000, 0).unwrap();
    assert_eq!(r[0].cv, Cv::Degenerate);
    assert_eq!(mean_cv(&r), None);

    let lonely = LabeledEmbeddings::new(EmbeddingSpace::Euclidean, points[..3].to_vec(), vec![0, 0, 1]).unwrap();
    assert!(interclass_distance_cv(&lonely, 0, 2, 100_000, 0).is_err());
}

#[test]
fn norm_statistics() {
    let data = LabeledEmbeddings::new(
        EmbeddingSpace::Ball(BallConfig::unit()),
        vec![vec![0.4, 0.0], vec![0.0, 0.6], vec![0.0, 0.0], vec![0.0, 0.0]],
        vec![0, 0, 1, 1],
    )
    .unwrap();
    let s = class_norm_stats(&data, 2).unwrap();
    assert!((s[0].mean - 0.5).abs() < 1e-15);
    assert!((s[0].std_dev - 0.1).abs() < 1e-15);
    assert_eq!((s[1].mean, s[1].std_dev), (0.0, 0.0));
    assert!(class_norm_stats(&data, 3).is_err());
}

#[test]
fn hyperplane_distances() {
    let model = FlatModel::Euclidean(
        EuclideanMLR::new(
            vec![TangentVector::new(vec![1.0, 0.0]), TangentVector::new(vec![0.0, 2.0])],
            vec![-1.0, 0.0],
        )
        .unwrap(),
    );
    // anchor class 1 sits on the plane x = 1 of class 0
    let data = LabeledEmbeddings::new(
        EmbeddingSpace::Euclidean,
        vec![vec![1.0, 0.0], vec![1.0, 3.0], vec![5.0, 5.0], vec![6.0, 6.0]],
        vec![1, 1, 0, 0],
    )
    .unwrap();
    let r = plane_distance_cv(&data, &model, 1).unwrap();
    assert_eq!(r[0].cv, Cv::Degenerate);
    let r = plane_distance_cv(&data, &model, 0).unwrap();
    // distances to y = 0 are 5 and 6
    let expected = 0.5 / 5.5;
    assert!((r[0].cv.value().unwrap() - expected).abs() < 1e-15);
}

#[test]
fn concavity_scan_properties() {
    let grid = default_grid();
    for (n1, n2) in [(0.0, 0.0), (0.3, 0.7), (0.9, 0.9), (0.99, 0.5)] {
        let rows = concavity_scan(n1, n2, &grid).unwrap();
        assert!(scan_is_concave(&rows));
        for w in rows.windows(2) {
            assert!(w[1].derivative < w[0].derivative);
        }
        for w in rows.windows(3) {
            assert!(w[2].hyperbolic - 2.0 * w[1].hyperbolic + w[0].hyperbolic <= 1e-12);
        }
        for r in &rows {
            assert!(((r.derivative - r.finite_difference) / r.derivative).abs() <= 1e-5);
            assert_eq!(r.derivative, dh_de_derivative(r.euclidean, n1, n2).unwrap());
        }
    }
    let rows = concavity_scan(0.0, 0.0, &[0.0, 0.5, 1.0]).unwrap();
    assert_eq!(rows[0].hyperbolic, 0.0);
    assert!((rows[0].derivative - 2.0).abs() < 1e-15);
    assert!((rows[1].hyperbolic - 0.962_423_650_119_206_9).abs() < 1e-12);
    assert!((rows[2].hyperbolic - 1.762_747_174_039_086).abs() < 1e-12);
    assert!(concavity_scan(1.0, 0.0, &grid).is_err());
    assert!(concavity_scan(0.0, 0.0, &[1.0, 0.5]).is_err());
}
