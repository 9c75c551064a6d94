use ndarray::Array2;
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xslice_gcn::{normalize_adjacency, GcnParams, SliceGraph};

type Mat = Vec<Vec<f64>>;

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for j in 0..p {
            let mut s = 0.0;
            for k in 0..m {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn to_mat(a: &Array2<f64>) -> Mat {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

/// Dense forward written straight from the layer equation.
fn oracle_forward(graph: &SliceGraph, weights: &[Array2<f64>]) -> (Mat, Vec<f64>) {
    let n = graph.node_count();
    let mut deg = vec![1.0; n];
    for i in 0..n {
        for j in 0..n {
            deg[i] += graph.adjacency[[i, j]];
        }
    }
    let a_hat: Mat = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let a = graph.adjacency[[i, j]] + if i == j { 1.0 } else { 0.0 };
                    a / (deg[i].sqrt() * deg[j].sqrt())
                })
                .collect()
        })
        .collect();
    let mut h = to_mat(&graph.features);
    for (l, w) in weights.iter().enumerate() {
        h = matmul(&matmul(&a_hat, &h), &to_mat(w));
        if l + 1 < weights.len() {
            for row in &mut h {
                for v in row.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
    }
    let f = h[0].len();
    let mut state = vec![0.0; graph.slices * f];
    for k in 0..graph.slices {
        let members: Vec<usize> = (0..graph.n_max)
            .filter(|&i| graph.session_slice[i] == Some(k))
            .collect();
        for &i in &members {
            for j in 0..f {
                state[k * f + j] += h[i][j] / members.len() as f64;
            }
        }
    }
    (h, state)
}

fn random_graph(rng: &mut impl Rng, n_max: usize, slices: usize, f: usize) -> SliceGraph {
    let member: Vec<Option<usize>> = (0..n_max)
        .map(|_| {
            if rng.gen_bool(0.75) {
                Some(rng.gen_range(0..slices))
            } else {
                None
            }
        })
        .collect();
    let feats = Array2::from_shape_fn((n_max + slices, f), |(i, _)| {
        if i < n_max && member[i].is_some() {
            rng.gen_range(-1.0..1.0)
        } else {
            0.0
        }
    });
    SliceGraph::from_parts(n_max, slices, member, feats)
}

#[test]
fn forward_matches_dense_oracle_on_small_graphs() {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slices = rng.gen_range(1..=3);
        let n_max = rng.gen_range(1..=8 - slices);
        let layers = rng.gen_range(1..=3);
        let mut widths = vec![rng.gen_range(1..=4)];
        for _ in 0..layers {
            widths.push(rng.gen_range(1..=5));
        }
        let g = random_graph(&mut rng, n_max, slices, widths[0]);
        let p = GcnParams::init(&widths, seed);
        let (state, cache) = p.forward(&g);
        let (h, expected) = oracle_forward(&g, &p.weights);
        for (a, b) in state.iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-10, "seed {seed}: {a} vs {b}");
        }
        let nodes = cache.node_embeddings();
        for i in 0..g.node_count() {
            for j in 0..h[0].len() {
                assert!(
                    (nodes[[i, j]] - h[i][j]).abs() <= 1e-10,
                    "seed {seed} node {i}"
                );
            }
        }
    }
}

#[test]
fn six_node_two_layer_example() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = SliceGraph::from_parts(
        4,
        2,
        vec![Some(0), Some(1), Some(0), Some(1)],
        Array2::from_shape_fn(
            (6, 3),
            |(i, _)| if i < 4 { rng.gen_range(0.0..1.0) } else { 0.0 },
        ),
    );
    let p = GcnParams::init(&[3, 3, 3], 11);
    let (state, _) = p.forward(&g);
    let (_, expected) = oracle_forward(&g, &p.weights);
    for (a, b) in state.iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn pooled_state_is_exactly_permutation_invariant() {
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 12, 3, 12);
        let p = GcnParams::init(&[12, 12, 12, 12], seed);
        let (state, cache) = p.forward(&g);

        let mut order: Vec<usize> = (0..12).collect();
        order.shuffle(&mut rng);
        // node `order[i]` of g becomes node i of the relabelled graph
        let member: Vec<Option<usize>> = order.iter().map(|&o| g.session_slice[o]).collect();
        let mut feats = Array2::zeros(g.features.raw_dim());
        for (i, &o) in order.iter().enumerate() {
            feats.row_mut(i).assign(&g.features.row(o));
        }
        for k in 0..3 {
            feats.row_mut(12 + k).assign(&g.features.row(12 + k));
        }
        let relabelled = SliceGraph::from_parts(12, 3, member, feats);
        let (state2, cache2) = p.forward(&relabelled);
        assert_eq!(
            state.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            state2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let (a, b) = (cache.node_embeddings(), cache2.node_embeddings());
        for (i, &o) in order.iter().enumerate() {
            assert_eq!(a.row(o), b.row(i));
        }
    }
}

#[test]
fn sessions_do_not_leak_into_other_slices() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_graph(&mut rng, 10, 3, 12);
    let p = GcnParams::init(&[12, 12, 12, 12], 8);
    let (_, before) = p.forward(&g);
    let mut changed = g.clone();
    for i in 0..10 {
        if g.session_slice[i] == Some(0) {
            for j in 0..12 {
                changed.features[[i, j]] += 0.37;
            }
        }
    }
    let (_, after) = p.forward(&changed);
    let (a, b) = (before.node_embeddings(), after.node_embeddings());
    for i in 0..10 {
        if matches!(g.session_slice[i], Some(k) if k != 0) {
            assert_eq!(a.row(i), b.row(i), "session {i}");
        }
    }
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
fn jacobi_eigenvalues(mut a: Mat) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

#[test]
fn normalized_adjacency_spectrum_is_bounded() {
    for seed in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=10);
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.4) {
                    a[[i, j]] = 1.0;
                    a[[j, i]] = 1.0;
                }
            }
        }
        let h = normalize_adjacency(&a);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(h[[i, j]], h[[j, i]]);
            }
        }
        for ev in jacobi_eigenvalues(to_mat(&h)) {
            assert!(ev.abs() <= 1.0 + 1e-9, "seed {seed}: eigenvalue {ev}");
        }
    }
}

fn loss(p: &GcnParams, g: &SliceGraph, c: &[f64]) -> f64 {
    p.embed(g).iter().zip(c).map(|(s, c)| s * c).sum()
}

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-4 * analytic.abs().max(numeric.abs()) + 1e-9
}

#[test]
fn weight_gradients_match_finite_differences() {
    let h = 1e-5;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let g = random_graph(&mut rng, 6, 2, 4);
        let p = GcnParams::init(&[4, 5, 5, 3], seed);
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, cache) = p.forward(&g);
        let grads = p.backward(&cache, &c);
        let flat = p.flatten();
        let analytic = grads.flatten();
        for idx in 0..flat.len() {
            let mut q = p.clone();
            let mut v = flat.clone();
            v[idx] += h;
            q.assign_flat(&v);
            let up = loss(&q, &g, &c);
            v[idx] -= 2.0 * h;
            q.assign_flat(&v);
            let down = loss(&q, &g, &c);
            let numeric = (up - down) / (2.0 * h);
            assert!(
                close(analytic[idx], numeric),
                "seed {seed} param {idx}: {} vs {numeric}",
                analytic[idx]
            );
        }
        // input features, including dummy rows whose gradient must vanish
        for i in 0..g.node_count() {
            for j in 0..4 {
                let mut gp = g.clone();
                gp.features[[i, j]] += h;
                let up = loss(&p, &gp, &c);
                gp.features[[i, j]] -= 2.0 * h;
                let down = loss(&p, &gp, &c);
                let numeric = (up - down) / (2.0 * h);
                let a = grads.features[[i, j]];
                assert!(
                    close(a, numeric),
                    "seed {seed} feature ({i},{j}): {a} vs {numeric}"
                );
                if i < 6 && g.session_slice[i].is_none() {
                    assert_eq!(a, 0.0);
                }
            }
        }
    }
}
