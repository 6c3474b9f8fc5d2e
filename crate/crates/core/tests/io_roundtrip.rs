use std::io::Write;

use edcone::io::{
    parse_embeddings, read_embeddings, read_labels, write_embeddings_jsonl, EmbeddingFormat, RawEmbeddingFile,
};
use edcone::linalg::norm;
use edcone::model::{EmbeddingSet, NormPolicy};
use proptest::prelude::*;

proptest! {
    #[test]
    fn jsonl_round_trip_is_bit_identical(
        rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 5), 1..20)
    ) {
        let items: Vec<_> = rows.into_iter().enumerate().map(|(i, v)| (format!("id {i}"), v)).collect();
        prop_assume!(items.iter().all(|(_, v)| norm(v) > 1e-6));
        let set = EmbeddingSet::new(5, items, NormPolicy::Renormalize).unwrap();
        for (_, v) in set.iter() {
            prop_assert!((norm(v) - 1.0).abs() <= 1e-9);
        }
        let mut buf = Vec::new();
        write_embeddings_jsonl(&set, &mut buf).unwrap();
        let back = parse_embeddings(&buf[..], EmbeddingFormat::JsonLines, None, NormPolicy::AssertUnit).unwrap();
        prop_assert_eq!(&back, &set);
        let mut again = Vec::new();
        write_embeddings_jsonl(&back, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }
}

#[test]
fn reads_files_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let emb_path = dir.path().join("vectors.txt");
    let mut f = std::fs::File::create(&emb_path).unwrap();
    writeln!(f, "2 3\nsimple 1 0 0\ndifficult 0 0 3").unwrap();
    let labels_path = dir.path().join("labels.tsv");
    std::fs::write(&labels_path, "simple\tA1\ndifficult\tB2\n").unwrap();
    let order_path = dir.path().join("levels.txt");
    std::fs::write(&order_path, "A1\nA2\nB1\nB2\n").unwrap();

    let emb =
        read_embeddings(&RawEmbeddingFile::new(&emb_path, EmbeddingFormat::Word2VecText), NormPolicy::Renormalize)
            .unwrap();
    assert_eq!(emb.get("difficult").unwrap(), &[0.0, 0.0, 1.0]);
    let ds = read_labels(&labels_path, &order_path).unwrap();
    assert_eq!(ds.level_of("difficult"), Some(3));

    let missing = read_labels(&dir.path().join("nope.tsv"), &order_path);
    assert!(matches!(missing, Err(edcone::Error::Io(_))));
}
