//! Independent reimplementations compared against the library.

use causalmp::linkpred::{auc, LpModel};
use causalmp::nn::{normalize_adjacency, DenseMatrix, Gcn, NormalizationMode};
use causalmp::rng::rng_from;
use causalmp::structure::CausalStructure;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

type Dense = Vec<Vec<f64>>;

fn to_dense(m: &DenseMatrix<f64>) -> Dense {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn mm(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            for t in 0..k {
                out[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    out
}

fn add_bias(a: &mut Dense, b: &[f64]) {
    for row in a.iter_mut() {
        for (v, bb) in row.iter_mut().zip(b) {
            *v += bb;
        }
    }
}

/// `D^{-1/2}(A+I)D^{-1/2}` from an explicit 0/1 matrix.
fn sym_norm(adj: &Dense) -> Dense {
    let n = adj.len();
    let mut a = adj.clone();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    (0..n)
        .map(|i| (0..n).map(|j| a[i][j] / (d[i] * d[j]).sqrt()).collect())
        .collect()
}

#[test]
fn gcn_forward_matches_dense_oracle() {
    for seed in 0..10 {
        let mut rng = rng_from(seed);
        let n = 5 + (seed as usize) * 15 / 10;
        let mut adj = vec![vec![0.0; n]; n];
        let mut msgs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < 0.3 {
                    adj[u][v] = 1.0;
                    adj[v][u] = 1.0;
                    msgs.extend([(u, v), (v, u)]);
                }
            }
        }
        let prop = normalize_adjacency::<f64>(n, msgs, NormalizationMode::Symmetric).unwrap();
        let a = sym_norm(&adj);
        let x = DenseMatrix::from_fn(n, 4, |_, _| rng.sample(StandardNormal));
        let mut g = Gcn::glorot(4, 5, 3, &mut rng);
        for p in [1, 3] {
            for v in g.parameters_mut()[p].iter_mut() {
                *v = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let [l1, l2] = g.layers();
        let mut h = mm(&a, &mm(&to_dense(&x), &to_dense(&l1.weight)));
        add_bias(&mut h, &l1.bias);
        for row in h.iter_mut() {
            row.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let mut z = mm(&a, &mm(&h, &to_dense(&l2.weight)));
        add_bias(&mut z, &l2.bias);
        let got = g.predict(&prop, &x).unwrap();
        for (r, row) in z.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert!((got[(r, c)] - v).abs() < 1e-12, "seed {seed}");
            }
        }
    }
}

#[test]
fn decoder_matches_dense_oracle() {
    let mut rng = rng_from(11);
    let mut m = LpModel::<f64>::glorot(3, 4, 5, &mut rng);
    for v in m.decoder.hidden.bias.iter_mut().chain(m.decoder.out.bias.iter_mut()) {
        *v = rng.sample(StandardNormal);
    }
    let z = DenseMatrix::from_fn(8, 5, |_, _| rng.sample(StandardNormal));
    let pairs: Vec<(usize, usize)> = (0..20).map(|_| (rng.random_range(0..8), rng.random_range(0..8))).collect();
    let got = m.decode_pairs(&z, &pairs).unwrap();
    let w1 = to_dense(&m.decoder.hidden.weight);
    let w2 = to_dense(&m.decoder.out.weight);
    for (p, &(u, v)) in pairs.iter().enumerate() {
        let input: Vec<f64> = (0..5).map(|c| z[(u, c)] * z[(v, c)]).collect();
        let mut out = m.decoder.out.bias[0];
        for j in 0..5 {
            let mut pre = m.decoder.hidden.bias[j];
            for i in 0..5 {
                pre += input[i] * w1[i][j];
            }
            out += pre.max(0.0) * w2[j][0];
        }
        assert!((got[p] - out).abs() < 1e-12);
    }
}

fn pair_count_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut twice_wins, mut n_pos, mut n_neg) = (0u64, 0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            n_pos += 1;
        } else {
            n_neg += 1;
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            twice_wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    twice_wins as f64 / (2 * n_pos * n_neg) as f64
}

#[test]
fn auc_matches_pair_counting_exactly() {
    let mut rng = rng_from(5);
    let mut done = 0;
    while done < 100 {
        let n = rng.random_range(2..80);
        // coarse scores force many ties
        let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..12) as f64) * 0.25).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        assert_eq!(auc(&scores, &labels).unwrap(), pair_count_auc(&scores, &labels));
        done += 1;
    }
}

proptest! {
    #[test]
    fn auc_invariant_under_monotone_maps(
        raw in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60)
    ) {
        let (scores, labels): (Vec<f64>, Vec<bool>) = raw.into_iter().unzip();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let mapped: Vec<f64> = scores.iter().map(|s| (0.7 * s).exp() + 3.0).collect();
        prop_assert_eq!(auc(&scores, &labels).unwrap(), auc(&mapped, &labels).unwrap());
    }

    #[test]
    fn undirected_structures_give_symmetric_propagators(
        edges in prop::collection::vec((0usize..15, 0usize..15), 0..40)
    ) {
        let s = CausalStructure::from_edges(15, edges).unwrap();
        let p = s.to_propagator::<f64>(NormalizationMode::Symmetric).unwrap();
        prop_assert!(p.is_symmetric());
        let d = p.to_dense();
        for i in 0..15 {
            prop_assert!(d.row(i).iter().all(|&w| w.is_finite() && w >= 0.0));
        }
    }
}
