//! Synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensevec::{Pos, Synset, SynsetId, VectorStore, WordNet};

/// A random inventory of `n` synsets, each with one or two lemmas drawn from a
/// vocabulary of `n` words and hypernym links to `links` random
/// predecessors. Node 0 is the root, so the graph is connected.
pub fn synthetic_wordnet(n: usize, links: usize, seed: u64) -> WordNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |i: usize| SynsetId::new(Pos::Noun, i as u32 + 1);
    let synsets = (0..n)
        .map(|i| {
            let mut lemmas = vec![format!("w{i}")];
            if rng.gen_bool(0.3) {
                lemmas.push(format!("w{}", rng.gen_range(0..n)));
            }
            let mut s = Synset::new(id(i), lemmas);
            for _ in 0..links.min(i) {
                s = s.with_relation("@", id(rng.gen_range(0..i)));
            }
            s
        })
        .collect();
    WordNet::from_synsets(synsets).expect("valid synthetic inventory")
}

/// Gaussian-ish word vectors for `w0 .. w{n-1}`.
pub fn synthetic_vectors(n: usize, dim: usize, seed: u64) -> VectorStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = VectorStore::new(dim);
    let mut v = vec![0.0f32; dim];
    for i in 0..n {
        for x in v.iter_mut() {
            *x = (0..4).map(|_| rng.gen_range(-1.0f32..1.0)).sum();
        }
        store.push(format!("w{i}"), &v).expect("finite vector");
    }
    store
}
