use entgraph::formats::binary::{decode_embeddings, encode_embeddings, EmbeddingCache};
use entgraph::formats::egg::edges_to_string;
use entgraph::formats::predicates::predicate_file_to_string;
use entgraph::formats::{
    parse_dataset, parse_edges, parse_predicate_file, DatasetCounts, PredicateFile, PredicateGroup,
};
use entgraph_core::{parse_predicate, ArgType, TypePair, TypedPredicate, WeightedEdge};
use proptest::prelude::*;

const TYPES: &[&str] = &["person", "location", "organization", "living_thing"];
const RELATIONS: &[(&str, &str)] =
    &[("visit", "visit"), ("own", "own"), ("move", "move.to"), ("be", "be.part.of"), ("fear", "fear"), ("win", "win")];

fn predicate_in(t1: &'static str, t2: &'static str) -> impl Strategy<Value = TypedPredicate> {
    (0..RELATIONS.len(), any::<bool>(), any::<bool>()).prop_map(move |(r, neg, flip)| {
        let (head, tail) = RELATIONS[r];
        let (a, b) = if flip { (t2, t1) } else { (t1, t2) };
        let neg = if neg { "NEG__" } else { "" };
        parse_predicate(&format!("{neg}({head}.1,{tail}.2,{a},{b})")).unwrap()
    })
}

fn type_pair() -> impl Strategy<Value = (&'static str, &'static str)> {
    (0..TYPES.len(), 0..TYPES.len()).prop_map(|(a, b)| (TYPES[a], TYPES[b]))
}

fn unit_weight() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), (0u64..=1.0f64.to_bits()).prop_map(f64::from_bits)]
}

fn edges() -> impl Strategy<Value = Vec<WeightedEdge>> {
    type_pair().prop_flat_map(|(t1, t2)| {
        prop::collection::vec((predicate_in(t1, t2), predicate_in(t1, t2), unit_weight()), 0..20)
            .prop_map(|v| v.into_iter().map(|(src, dst, weight)| WeightedEdge { src, dst, weight }).collect())
    })
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![Just(-0.0), Just(f64::MIN_POSITIVE / 8.0), any::<f64>().prop_filter("finite", |x| x.is_finite())]
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

proptest! {
    #[test]
    fn edge_streams_round_trip_bit_exactly(e in edges()) {
        let back = parse_edges(&edges_to_string(&e)).unwrap();
        prop_assert_eq!(back.len(), e.len());
        for (x, y) in back.iter().zip(&e) {
            prop_assert_eq!(&x.src, &y.src);
            prop_assert_eq!(&x.dst, &y.dst);
            prop_assert_eq!(x.weight.to_bits(), y.weight.to_bits());
        }
    }

    #[test]
    fn embedding_caches_round_trip_bit_exactly(
        dim in 1usize..6,
        seed_rows in prop::collection::vec(prop::collection::vec(finite(), 6), 0..8),
        preds in prop::collection::vec(predicate_in("person", "location"), 0..8),
    ) {
        let mut cache = EmbeddingCache::new(dim);
        for (p, row) in preds.into_iter().zip(seed_rows) {
            prop_assert!(cache.insert(p, row[..dim].to_vec()));
        }
        let bytes = encode_embeddings(&cache);
        let back = decode_embeddings(&bytes).unwrap();
        prop_assert_eq!(back.len(), cache.len());
        for ((p, v), (q, w)) in back.iter().zip(cache.iter()) {
            prop_assert_eq!(p, q);
            prop_assert_eq!(bits(v), bits(w));
        }
        prop_assert_eq!(encode_embeddings(&back), bytes);
    }

    #[test]
    fn any_flipped_byte_is_rejected(
        preds in prop::collection::vec(predicate_in("person", "location"), 1..4),
        at in any::<prop::sample::Index>(),
        bit in 0u8..8,
    ) {
        let mut cache = EmbeddingCache::new(2);
        for (i, p) in preds.into_iter().enumerate() {
            cache.insert(p, vec![i as f64, -0.5]);
        }
        let mut bytes = encode_embeddings(&cache);
        let i = at.index(bytes.len());
        bytes[i] ^= 1 << bit;
        prop_assert!(decode_embeddings(&bytes).is_err());
    }

    #[test]
    fn predicate_files_keep_groups_and_orientation(
        groups in prop::collection::vec(
            type_pair().prop_flat_map(|(t1, t2)| {
                prop::collection::vec(predicate_in(t1, t2), 1..6).prop_map(move |ps| (t1, t2, ps))
            }),
            0..4,
        )
    ) {
        let groups: Vec<PredicateGroup> = groups
            .into_iter()
            .map(|(t1, t2, ps)| PredicateGroup {
                type_pair: TypePair::new(ArgType::new(t1).unwrap(), ArgType::new(t2).unwrap()),
                predicates: ps,
            })
            .collect();
        let file = PredicateFile::from_groups(groups);
        let back = parse_predicate_file(&predicate_file_to_string(&file)).unwrap();
        prop_assert_eq!(back.len(), file.len());
        for (a, b) in back.groups().zip(file.groups()) {
            prop_assert_eq!(&a.type_pair, &b.type_pair);
            prop_assert_eq!(&a.predicates, &b.predicates);
        }
    }

    #[test]
    fn dataset_counts_match_the_lines(
        rows in prop::collection::vec(
            (predicate_in("person", "location"), predicate_in("person", "location"), any::<bool>(), 0u8..3),
            0..30,
        )
    ) {
        let mut text = String::new();
        for (p, h, label, split) in &rows {
            let split = ["", "\tvalid", "\ttest"][*split as usize];
            text.push_str(&format!("{p}\t{h}\t{}{split}\n", if *label { "True" } else { "False" }));
        }
        let pairs = parse_dataset(&text).unwrap();
        let c = DatasetCounts::of(&pairs);
        prop_assert_eq!(c.total, rows.len());
        prop_assert_eq!(c.positives, rows.iter().filter(|r| r.2).count());
        prop_assert_eq!(c.unsplit, rows.iter().filter(|r| r.3 == 0).count());
        prop_assert_eq!(c.valid, rows.iter().filter(|r| r.3 == 1).count());
        prop_assert_eq!(c.test, rows.iter().filter(|r| r.3 == 2).count());
    }
}
