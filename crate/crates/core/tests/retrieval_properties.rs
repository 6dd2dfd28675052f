use longrag::retriever::{build_index, Chunk, ChunkIndex, ChunkSize, EmbeddingVector, Provenance};
use proptest::prelude::*;

fn index(rows: &[(usize, Vec<f32>)]) -> ChunkIndex {
    let mut ordinals = std::collections::HashMap::new();
    let chunks: Vec<Chunk> = rows
        .iter()
        .map(|(u, _)| {
            let unit_id = format!("u{u:03}");
            let n = ordinals.entry(*u).or_insert(0);
            *n += 1;
            Chunk {
                chunk_id: format!("{unit_id}#{n}"),
                unit_id,
                doc_id: format!("d{u}"),
                text: String::new(),
                token_span: (0, 0),
            }
        })
        .collect();
    let vectors: Vec<EmbeddingVector> = rows
        .iter()
        .map(|(_, v)| EmbeddingVector::new(v.clone()).unwrap())
        .collect();
    let provenance = Provenance {
        embedder: "test".into(),
        chunk_size: ChunkSize::Whole,
    };
    build_index(&chunks, &vectors, provenance).unwrap()
}

const DIM: usize = 6;

fn rows() -> impl Strategy<Value = Vec<(usize, Vec<f32>)>> {
    prop::collection::vec((0usize..12, prop::collection::vec(-1.0f32..1.0, DIM)), 1..60)
}

fn query() -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-1.0f32..1.0, DIM)
}

proptest! {
    #[test]
    fn top_k_is_a_prefix_of_top_k_plus_one(rows in rows(), q in query(), k in 1usize..12) {
        let idx = index(&rows);
        let q = EmbeddingVector::new(q).unwrap();
        let small = idx.retrieve_units(&q, k).unwrap();
        let large = idx.retrieve_units(&q, k + 1).unwrap();
        prop_assert!(small.len() <= large.len());
        prop_assert_eq!(&large[..small.len()], &small[..]);
    }

    #[test]
    fn positive_query_scaling_keeps_ranking(rows in rows(), q in query(), c in 0.25f32..8.0) {
        let idx = index(&rows);
        let a = idx.retrieve_units(&EmbeddingVector::new(q.clone()).unwrap(), 20).unwrap();
        let b = idx.retrieve_units(&EmbeddingVector::new(q).unwrap().scaled(c), 20).unwrap();
        let ids = |v: &[longrag::retriever::ScoredUnit]| v.iter().map(|s| s.unit_id.clone()).collect::<Vec<_>>();
        // scaling can only merge near-ties, so compare where scores are well separated
        let separated = a.windows(2).all(|w| w[0].score - w[1].score > 1e-4);
        if separated {
            prop_assert_eq!(ids(&a), ids(&b));
        }
    }

    #[test]
    fn unit_score_is_best_chunk_score(rows in rows(), q in query()) {
        let idx = index(&rows);
        let qv = EmbeddingVector::new(q).unwrap();
        let chunk_scores = idx.score_query(&qv).unwrap();
        for s in idx.retrieve_units(&qv, 50).unwrap() {
            let row = idx.entries().iter().position(|e| e.chunk_id == s.best_chunk_id).unwrap();
            prop_assert_eq!(chunk_scores[row], s.score);
            prop_assert_eq!(&idx.entries()[row].unit_id, &s.unit_id);
            for (e, &cs) in idx.entries().iter().zip(&chunk_scores) {
                if e.unit_id == s.unit_id {
                    prop_assert!(cs <= s.score);
                }
            }
        }
    }

    #[test]
    fn ranking_ignores_row_order(rows in rows(), q in query(), seed in any::<u64>()) {
        let mut shuffled = rows.clone();
        let n = shuffled.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let qv = EmbeddingVector::new(q).unwrap();
        let a: Vec<_> = index(&rows).retrieve_units(&qv, 20).unwrap().into_iter().map(|s| (s.unit_id, s.score)).collect();
        let b: Vec<_> = index(&shuffled).retrieve_units(&qv, 20).unwrap().into_iter().map(|s| (s.unit_id, s.score)).collect();
        prop_assert_eq!(a, b);
    }
}
