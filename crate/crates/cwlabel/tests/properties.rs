//! Randomized structural properties, driven by proptest: text round trips,
//! packed-bit round trips, and properization invariants over generated
//! expressions rather than hand-picked fixtures.

use proptest::prelude::*;

use cwlabel::kexpr::{
    evaluate, gen_random, parse, render, GenRandomParams, KExpr, Mask,
};
use cwlabel::labels::{pack, packed_bit_len, unpack, Label, LevelRecord};
use cwlabel::probe::with_random_masks;
use cwlabel::union_tree::{
    check_proper, evaluate_tree, make_proper, UnionTree,
};

fn instance_strategy() -> impl Strategy<Value = KExpr> {
    (1usize..48, 2u16..6, 0.0f64..1.0, 0.0f64..1.0, any::<u64>()).prop_map(
        |(n, k, p_join, p_relabel, seed)| {
            gen_random(GenRandomParams { n, k, p_join, p_relabel, seed }).unwrap()
        },
    )
}

fn masked_instance_strategy() -> impl Strategy<Value = KExpr> {
    (instance_strategy(), 1u16..12, any::<u64>())
        .prop_map(|(expr, w, seed)| with_random_masks(&expr, w, seed))
}

fn level_strategy(k: u16) -> impl Strategy<Value = LevelRecord> {
    (1u16..=14).prop_flat_map(move |rank| {
        (
            proptest::collection::vec(1..=k, rank as usize - 1),
            proptest::collection::vec(1..=k, 0..=8),
        )
            .prop_map(move |(checkpoints, adjacency)| LevelRecord {
                rank,
                adjacency: adjacency.into_iter().collect(),
                checkpoints,
            })
    })
}

fn label_strategy() -> impl Strategy<Value = Label> {
    (1u16..=24, 0u16..=20).prop_flat_map(|(k, w)| {
        (
            proptest::collection::vec(level_strategy(k), 0..=6),
            proptest::collection::vec(any::<bool>(), w as usize),
        )
            .prop_map(move |(levels, bits)| {
                let mut mask = Mask::zeros(w);
                for (t, set) in bits.iter().enumerate() {
                    if *set {
                        mask.set_bit(t as u16 + 1);
                    }
                }
                Label { k, levels, mask }
            })
    })
}

proptest! {
    #[test]
    fn render_parse_identity(expr in instance_strategy()) {
        let text = render(&expr);
        let back = parse(&text).unwrap();
        prop_assert_eq!(back, expr);
    }

    #[test]
    fn render_parse_identity_with_masks(expr in masked_instance_strategy()) {
        let text = render(&expr);
        let back = parse(&text).unwrap();
        prop_assert_eq!(back, expr);
    }

    #[test]
    fn pack_unpack_identity(label in label_strategy()) {
        let bytes = pack(&label);
        prop_assert_eq!(bytes.len(), packed_bit_len(&label).div_ceil(8));
        let back = unpack(&bytes).unwrap();
        prop_assert_eq!(back, label);
    }

    #[test]
    fn mask_bit_str_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..40)) {
        let text: String = bits.iter().map(|b| if *b { '1' } else { '0' }).collect();
        let mask = Mask::from_bit_str(&text).unwrap();
        prop_assert_eq!(mask.width() as usize, bits.len());
        prop_assert_eq!(mask.to_bit_str(), text);
    }

    #[test]
    fn properization_is_sound(expr in instance_strategy()) {
        let tree = UnionTree::from_kexpression(&expr);
        let proper = make_proper(&tree);
        prop_assert!(check_proper(&proper).proper);

        let before = evaluate(&expr);
        let after = evaluate_tree(&proper);
        prop_assert_eq!(before.edge_names(), after.edge_names());
    }

    #[test]
    fn properization_is_idempotent(expr in instance_strategy()) {
        let tree = UnionTree::from_kexpression(&expr);
        let once = make_proper(&tree);
        let twice = make_proper(&once);
        prop_assert_eq!(render(&once.to_kexpression()), render(&twice.to_kexpression()));
    }

    #[test]
    fn tree_round_trip_preserves_the_graph(expr in masked_instance_strategy()) {
        let tree = UnionTree::from_kexpression(&expr);
        let back = tree.to_kexpression();
        prop_assert_eq!(evaluate(&back).edge_names(), evaluate(&expr).edge_names());
        prop_assert_eq!(render(&back), render(&expr));
    }
}
