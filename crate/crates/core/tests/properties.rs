mod common;

use egw::graph::{clique_decomposition, is_decomposable};
use egw::graph::{max_edges, pair_from_rank, pair_rank, Graph};
use egw::io::{matrix_from_csv, matrix_to_csv};
use egw::metrics::{confusion, sp_se_mcc};
use egw::sampler::{edge_inclusion, ChainResult, ChainSample};
use egw::{ConfusionCounts, Matrix};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn graph_from_mask(p: usize, mask: u64) -> Graph {
    Graph::from_edges(
        p,
        (0..max_edges(p).min(64))
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| pair_from_rank(p, k)),
    )
    .unwrap()
}

fn arb_graph(max_p: usize) -> impl Strategy<Value = Graph> {
    (2..=max_p).prop_flat_map(|p| {
        prop::collection::vec(any::<bool>(), max_edges(p)).prop_map(move |bits| {
            Graph::from_edges(
                p,
                bits.iter()
                    .enumerate()
                    .filter(|b| *b.1)
                    .map(|(k, _)| pair_from_rank(p, k)),
            )
            .unwrap()
        })
    })
}

/// Union of clique edge sets must be `g`; separators must be the
/// intersection with earlier cliques; cliques must be maximal.
fn check_recomposition(g: &Graph) {
    let t = clique_decomposition(g).unwrap();
    let p = g.p();
    let mut rebuilt = vec![false; p * p];
    let mut covered = vec![false; p];
    for c in &t.cliques {
        assert!(g.is_clique(c), "{c:?} is not a clique of {g:?}");
        for v in 0..p {
            if !c.contains(&v) {
                let mut bigger = c.to_vec();
                bigger.push(v);
                assert!(!g.is_clique(&bigger), "{c:?} not maximal in {g:?}");
            }
        }
        for &a in c {
            covered[a] = true;
            for &b in c {
                rebuilt[a * p + b] = true;
            }
        }
    }
    assert!(covered.iter().all(|&x| x));
    for i in 0..p {
        for j in (i + 1)..p {
            assert_eq!(
                rebuilt[i * p + j],
                g.has_edge(i, j),
                "pair ({i},{j}) of {g:?}"
            );
        }
    }
    assert_eq!(t.separators.len() + 1, t.cliques.len());
    for k in 1..t.cliques.len() {
        let earlier: Vec<usize> = t.cliques[..k].iter().flatten().copied().collect();
        let mut sep: Vec<usize> = t.cliques[k]
            .iter()
            .copied()
            .filter(|v| earlier.contains(v))
            .collect();
        sep.sort_unstable();
        let mut got = t.separators[k - 1].clone();
        got.sort_unstable();
        assert_eq!(got, sep);
        // running intersection: the separator sits inside one earlier clique
        assert!(t.cliques[..k]
            .iter()
            .any(|c| sep.iter().all(|v| c.contains(v))));
    }
}

#[test]
fn clique_recomposition_exhaustive() {
    let mut decomposable = 0;
    for p in 2..=5 {
        for mask in 0..(1u64 << max_edges(p)) {
            let g = graph_from_mask(p, mask);
            if is_decomposable(&g) {
                decomposable += 1;
                check_recomposition(&g);
            } else {
                assert!(clique_decomposition(&g).is_err());
            }
        }
    }
    assert!(decomposable > 500);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn clique_recomposition_random(p in 6usize..=8, seed in any::<u64>(), width in 1usize..4) {
        // random vertex relabelling of a band, plus random chords that keep chordality
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..p).collect();
        perm.shuffle(&mut rng);
        let mut g = Graph::band(p, width).permuted(&perm);
        for _ in 0..6 {
            let (i, j) = pair_from_rank(p, rng.random_range(0..max_edges(p)));
            let h = g.flip_edge(i, j).unwrap();
            if is_decomposable(&h) {
                g = h;
            }
        }
        prop_assert!(is_decomposable(&g));
        check_recomposition(&g);
    }

    #[test]
    fn pair_rank_bijection(p in 2usize..40, k in any::<usize>()) {
        let k = k % max_edges(p);
        let (i, j) = pair_from_rank(p, k);
        prop_assert!(i < j && j < p);
        prop_assert_eq!(pair_rank(p, i, j), k);
    }

    #[test]
    fn param_index_bijection(g in arb_graph(12)) {
        let idx = g.param_index();
        prop_assert_eq!(idx.len(), g.n_free_params());
        for k in 0..idx.len() {
            let (i, j) = idx.position(k);
            prop_assert_eq!(idx.index_of(i, j), Some(k));
            prop_assert_eq!(idx.index_of(j, i), Some(k));
        }
        let vals: Vec<f64> = (0..idx.len()).map(|k| k as f64 + 0.5).collect();
        prop_assert_eq!(idx.gather(&idx.scatter(&vals)), vals);
    }

    #[test]
    fn metric_ranges(tp in 0usize..50, tn in 0usize..50, fp in 0usize..50, fn_ in 0usize..50) {
        let r = sp_se_mcc(&ConfusionCounts { tp, tn, fp, fn_ });
        prop_assert!((0.0..=1.0).contains(&r.sp));
        prop_assert!((0.0..=1.0).contains(&r.se));
        prop_assert!((-1.0..=1.0).contains(&r.mcc));
    }

    #[test]
    fn confusion_swap(a in arb_graph(10), mask in any::<u64>()) {
        let b = graph_from_mask(a.p(), mask);
        let ab = confusion(&a, &b).unwrap();
        let ba = confusion(&b, &a).unwrap();
        prop_assert_eq!(ab.total(), max_edges(a.p()));
        prop_assert_eq!((ab.tp, ab.tn, ab.fp, ab.fn_), (ba.tp, ba.tn, ba.fn_, ba.fp));
    }

    #[test]
    fn edge_freq_symmetric_in_unit_interval(gs in prop::collection::vec(any::<u64>(), 1..30), p in 2usize..8) {
        let graphs: Vec<Graph> = gs.iter().map(|&m| graph_from_mask(p, m)).collect();
        let mut map = BTreeMap::new();
        let samples = graphs.iter().enumerate().map(|(k, g)| {
            map.insert(g.hash_hex(), g.clone());
            ChainSample { iter: k, graph_hash: g.hash_hex(), size: g.n_edges(), log_score: 0.0, accepted: true }
        }).collect();
        let chain: ChainResult<f64> = ChainResult {
            p, samples, graphs: map, acceptance_rate: 1.0, edge_freq: Matrix::zeros(p, p),
            n_fits: 0, cache_hits: 0, warm_mismatches: 0, wall_time_ns: 0,
        };
        let f = edge_inclusion(&chain).unwrap();
        for i in 0..p {
            prop_assert_eq!(f[(i, i)], 0.0);
            for j in 0..p {
                prop_assert_eq!(f[(i, j)], f[(j, i)]);
                prop_assert!((0.0..=1.0).contains(&f[(i, j)]));
            }
        }
    }

    #[test]
    fn csv_round_trip(rows in 1usize..6, cols in 1usize..6, vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 36)) {
        let m = Matrix::from_fn(rows, cols, |i, j| vals[i * cols + j]);
        let (back, _) = matrix_from_csv(&matrix_to_csv(&m, None)).unwrap();
        for i in 0..rows {
            for j in 0..cols {
                prop_assert_eq!(back[(i, j)].to_bits(), m[(i, j)].to_bits());
            }
        }
    }

    #[test]
    fn graph_json_round_trip(g in arb_graph(15)) {
        prop_assert_eq!(Graph::from_json(&g.to_json()).unwrap(), g.clone());
        prop_assert_eq!(Graph::from_adjacency_csv(&g.to_adjacency_csv()).unwrap(), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn flip_is_an_involution(g in arb_graph(12), k in any::<usize>()) {
        let (i, j) = pair_from_rank(g.p(), k % max_edges(g.p()));
        let h = g.flip_edge(i, j).unwrap();
        prop_assert_ne!(&h, &g);
        prop_assert_eq!(h.n_edges().abs_diff(g.n_edges()), 1);
        prop_assert_eq!(h.flip_edge(i, j).unwrap(), g.clone());
        prop_assert!(g.flip_edge(j, i).is_err());
    }
}
