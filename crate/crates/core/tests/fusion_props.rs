mod common;

use common::{oracle_fuse, power_of_two_case, random_case, shifted};
use embfuse::fusion::{build_fused_matrix, fusion_report, FusionOptions};
use embfuse::seed;
use proptest::prelude::*;
use rand::Rng;

fn fuse(case: &common::FusionCase, fill: f64) -> Vec<f64> {
    let options = FusionOptions {
        unknown_fill: fill,
        ..Default::default()
    };
    build_fused_matrix(&case.dicts, &case.emb1, &case.emb2, case.dim, &options)
        .unwrap()
        .into_matrix()
}

#[test]
fn matches_the_word_by_word_oracle_bit_for_bit() {
    let mut rng = seed::rng(11, &[]);
    for i in 0..300 {
        let case = random_case(&mut rng, i % 2 == 0);
        let fill = if i % 3 == 0 {
            0.0
        } else {
            rng.gen_range(-1.0..1.0)
        };
        let ours = fuse(&case, fill);
        let oracle = oracle_fuse(&case, fill);
        assert_eq!(ours.len(), oracle.len());
        for (k, (a, b)) in ours.iter().zip(&oracle).enumerate() {
            assert_eq!(a.to_bits(), b.to_bits(), "case {i}, entry {k}: {a} vs {b}");
        }
    }
}

#[test]
fn shifting_the_second_table_changes_nothing() {
    let mut rng = seed::rng(12, &[]);
    for _ in 0..100 {
        let case = power_of_two_case(&mut rng);
        let c = rng.gen_range(-32i32..32) as f64 / 8.0;
        let a = fuse(&case, 0.0);
        let b = fuse(
            &common::FusionCase {
                emb2: shifted(&case.emb2, c),
                ..case
            },
            0.0,
        );
        assert_eq!(a, b);
    }
}

#[test]
fn fusing_a_table_with_itself_returns_it() {
    let mut rng = seed::rng(13, &[]);
    for _ in 0..50 {
        let case = random_case(&mut rng, false);
        let twin = common::FusionCase {
            emb2: case.emb1.clone(),
            ..case
        };
        let fused = build_fused_matrix(
            &twin.dicts,
            &twin.emb1,
            &twin.emb2,
            twin.dim,
            &FusionOptions::default(),
        )
        .unwrap();
        assert_eq!(fused.branch_counts().first_only, 0);
        assert_eq!(fused.branch_counts().second_only, 0);
        assert_eq!(fused.matrix(), oracle_fuse(&twin, 0.0).as_slice());
        for (word, index) in twin.dicts.entries() {
            if let Some(v) = twin.emb1.get(word) {
                assert_eq!(fused.row(index as usize), v);
            }
        }
    }
}

#[test]
fn branch_counts_cover_every_word() {
    let mut rng = seed::rng(14, &[]);
    for _ in 0..50 {
        let case = random_case(&mut rng, false);
        let fused = build_fused_matrix(
            &case.dicts,
            &case.emb1,
            &case.emb2,
            case.dim,
            &FusionOptions::default(),
        )
        .unwrap();
        let report = fusion_report(&fused);
        assert_eq!(report.counts.total(), case.dicts.word_count());
        assert_eq!(fused.rows(), case.dicts.vocab_size());
        assert!(fused.row(0).iter().all(|&v| v == 0.0));
    }
}

proptest! {
    #[test]
    fn oracle_agreement_for_arbitrary_seeds(s in any::<u64>(), dyadic in any::<bool>()) {
        let mut rng = seed::rng(s, &[]);
        let case = random_case(&mut rng, dyadic);
        prop_assert_eq!(fuse(&case, 0.5), oracle_fuse(&case, 0.5));
    }
}
