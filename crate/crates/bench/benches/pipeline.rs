use std::collections::HashSet;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use sensevec::bias::extract_bias_list;
use sensevec::deconf::{deconflate_sense, DeconfConfig};
use sensevec::graph::build_graph;
use sensevec::ppr::{build_transition, PprConfig};
use sensevec::vectors::{nearest, to_f64};
use sensevec::{LookupPolicy, RelationFilter};
use sensevec_bench::{synthetic_vectors, synthetic_wordnet};

fn ppr(c: &mut Criterion) {
    let mut group = c.benchmark_group("ppr");
    group.sample_size(20);
    for n in [1_000, 20_000] {
        let wn = synthetic_wordnet(n, 2, 7);
        let g = build_graph(&wn, &RelationFilter::All);
        let m = build_transition(&g).unwrap();
        let target = g.id_of(n / 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                m.personalized_pagerank(black_box(target), &PprConfig::default())
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn bias_list(c: &mut Criterion) {
    let wn = synthetic_wordnet(20_000, 2, 7);
    let g = build_graph(&wn, &RelationFilter::All);
    let m = build_transition(&g).unwrap();
    let p = m
        .personalized_pagerank(g.id_of(10_000), &PprConfig::default())
        .unwrap();
    let mut group = c.benchmark_group("bias_list");
    for k in [25, 250] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| extract_bias_list(&wn, &g, black_box(&p), k).unwrap())
        });
    }
    group.finish();
}

fn deconflate(c: &mut Criterion) {
    let wn = synthetic_wordnet(2_000, 2, 7);
    let g = build_graph(&wn, &RelationFilter::All);
    let m = build_transition(&g).unwrap();
    let p = m
        .personalized_pagerank(g.id_of(1_000), &PprConfig::default())
        .unwrap();
    let list = extract_bias_list(&wn, &g, &p, 25).unwrap();
    let store = synthetic_vectors(2_000, 300, 9);
    let policy = LookupPolicy::default();
    let config = DeconfConfig::default();
    let lemma = store.get("w1000");
    c.bench_function("deconflate_sense/300d", |b| {
        b.iter(|| {
            deconflate_sense(
                lemma,
                black_box(&list),
                Some("w1000"),
                &store,
                &policy,
                &config,
            )
            .unwrap()
        })
    });
}

fn neighbors(c: &mut Criterion) {
    let store = synthetic_vectors(50_000, 300, 11);
    let query = to_f64(store.vector(0));
    let exclude: HashSet<String> = ["w0".to_string()].into();
    let mut group = c.benchmark_group("nearest");
    group.sample_size(20);
    group.bench_function("50k_300d_top10", |b| {
        b.iter(|| nearest(&[&store], black_box(&query), 10, &exclude).unwrap())
    });
    group.finish();
}

criterion_group!(benches, ppr, bias_list, deconflate, neighbors);
criterion_main!(benches);
