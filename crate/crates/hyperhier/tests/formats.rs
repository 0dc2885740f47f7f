use hyperhier::checkpoint::{format_checkpoint, parse_checkpoint};
use hyperhier::hheb::{decode, encode, EmbeddingDump};
use hyperhier::hyperhier_core::mlr::{EuclideanMLR, Gyroplane, HyperbolicMLR};
use hyperhier::hyperhier_core::taxonomy::{shuffle_hierarchy, LabelTree};
use hyperhier::hyperhier_core::train::FlatModel;
use hyperhier::hyperhier_core::{BallConfig, BallPoint, TangentVector};
use hyperhier::treefile::{format_tree, parse_tree};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #[test]
    fn hheb_round_trips_bit_exactly(
        dim in 1usize..5,
        rows in prop::collection::vec((prop::collection::vec(finite(), 5), any::<u32>()), 0..20),
    ) {
        let dump = EmbeddingDump {
            dim,
            points: rows.iter().map(|(p, _)| p[..dim].to_vec()).collect(),
            labels: rows.iter().map(|(_, l)| *l).collect(),
        };
        let bytes = encode(&dump);
        prop_assert_eq!(bytes.len(), 16 + rows.len() * (8 * dim + 4));
        let back = decode(&bytes).unwrap();
        prop_assert_eq!(back.dim, dump.dim);
        prop_assert_eq!(&back.labels, &dump.labels);
        for (a, b) in back.points.iter().zip(&dump.points) {
            for (x, y) in a.iter().zip(b) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn hyperbolic_checkpoints_round_trip_bit_exactly(
        k in 2usize..5,
        params in prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5, -10.0f64..10.0, 0.1f64..10.0), 5),
        c in 0.1f64..4.0,
    ) {
        let ball = BallConfig::new(c, 1e-5).unwrap();
        let planes = params[..k]
            .iter()
            .map(|&(r0, r1, w0, w1)| {
                let s = 0.9 / c.sqrt();
                Gyroplane::new(
                    BallPoint::new(vec![r0 * s, r1 * s], &ball).unwrap(),
                    TangentVector::new(vec![w0, w1]),
                )
                .unwrap()
            })
            .collect();
        let model = FlatModel::Hyperbolic(HyperbolicMLR::new(planes, ball).unwrap());
        let text = format_checkpoint(&model, &ball);
        let back = parse_checkpoint(&text).unwrap();
        prop_assert_eq!(&back.model, &model);
        prop_assert_eq!(back.ball, ball);
        prop_assert_eq!(format_checkpoint(&back.model, &back.ball), text);
    }

    #[test]
    fn euclidean_checkpoints_round_trip_bit_exactly(
        ws in prop::collection::vec(prop::collection::vec(finite().prop_filter("nonzero", |v| *v != 0.0), 3), 2..6),
        bs in prop::collection::vec(finite(), 6),
    ) {
        let k = ws.len();
        let model = FlatModel::Euclidean(
            EuclideanMLR::new(ws.into_iter().map(TangentVector::new).collect(), bs[..k].to_vec()).unwrap(),
        );
        let back = parse_checkpoint(&format_checkpoint(&model, &BallConfig::unit())).unwrap();
        prop_assert_eq!(back.model, model);
    }

    #[test]
    fn trees_round_trip(seed in any::<u64>()) {
        let tree = shuffle_hierarchy(&LabelTree::cityscapes(), seed).unwrap();
        prop_assert_eq!(parse_tree(&format_tree(&tree)).unwrap(), tree);
    }
}

#[test]
fn shipped_tree_file_layout() {
    let text = format_tree(&LabelTree::cityscapes());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("levels: 2"));
    assert!(lines.next().unwrap().starts_with("level 0: road, sidewalk, building"));
    assert_eq!(lines.next(), Some("level 1: flat, construction, object, nature, sky, human, vehicle"));
    assert!(lines.next().unwrap().starts_with("parents 0: 0 0 1 1 1"));
}
