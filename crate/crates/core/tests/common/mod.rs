//! Independent oracles and fixtures shared by the integration tests. None of
//! these call into the solver paths they are used to check.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zsslr::data::{generate_synthetic, ClassId, Dataset, Split, SplitSpec, Stream, SyntheticConfig};
use zsslr::numerics::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Plain nested-vector Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// `AW + WB = C` through `(I ⊗ A + Bᵀ ⊗ I) vec(W) = vec(C)` with a row-major vec.
pub fn sylvester_kronecker_oracle(a: &Matrix, b: &Matrix, c: &Matrix) -> Matrix {
    let (m, n) = c.shape();
    let idx = |i: usize, j: usize| i * n + j;
    let mut k = vec![vec![0.0; m * n]; m * n];
    let mut rhs = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            for p in 0..m {
                k[idx(i, j)][idx(p, j)] += a[(i, p)];
            }
            for q in 0..n {
                k[idx(i, j)][idx(i, q)] += b[(q, j)];
            }
            rhs[idx(i, j)] = c[(i, j)];
        }
    }
    let x = gauss_solve(k, rhs);
    Matrix::from_fn(m, n, |i, j| x[idx(i, j)])
}

fn mm(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

fn t(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.cols(), a.rows(), |i, j| a[(j, i)])
}

fn inner(a: &Matrix, b: &Matrix) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}

fn lin(alpha: f64, a: &Matrix, beta: f64, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| alpha * a[(i, j)] + beta * b[(i, j)])
}

/// Minimizes the ESZSL objective by conjugate gradients on its normal
/// equations `(XXᵀ+γI) W (SSᵀ+λI) = XYSᵀ`, starting from zero.
pub fn eszsl_cg_oracle(x: &Matrix, y: &Matrix, s: &Matrix, gamma: f64, lambda: f64) -> Matrix {
    let mut p_left = mm(x, &t(x));
    p_left.add_diagonal(gamma);
    let mut p_right = mm(s, &t(s));
    p_right.add_diagonal(lambda);
    let apply = |w: &Matrix| mm(&mm(&p_left, w), &p_right);
    let rhs = mm(&mm(x, y), &t(s));
    let mut w = Matrix::zeros(x.rows(), s.rows());
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = inner(&r, &r);
    let stop = 1e-30 * inner(&rhs, &rhs);
    for _ in 0..10_000 {
        if rr <= stop {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / inner(&p, &ap);
        w = lin(1.0, &w, alpha, &p);
        r = lin(1.0, &r, -alpha, &ap);
        let next = inner(&r, &r);
        p = lin(1.0, &r, next / rr, &p);
        rr = next;
    }
    w
}

/// Fraction of videos of each class whose label is in the first `k` entries,
/// averaged over classes, computed by direct counting.
pub fn naive_topk(rankings: &[Vec<ClassId>], labels: &[ClassId], k: usize) -> f64 {
    let mut per: BTreeMap<ClassId, (usize, usize)> = BTreeMap::new();
    for (r, l) in rankings.iter().zip(labels) {
        let e = per.entry(*l).or_default();
        e.1 += 1;
        if r[..k].contains(l) {
            e.0 += 1;
        }
    }
    per.values().map(|(hit, n)| *hit as f64 / *n as f64).sum::<f64>() / per.len() as f64
}

/// A dataset with 170/30/50 disjoint classes and exactly 1188/151/259
/// videos, every class keeping at least one video.
pub fn benchmark_shaped_dataset(seed: u64) -> Dataset {
    let config = SyntheticConfig {
        feature_dim: 16,
        embedding_dim: 12,
        streams: vec![Stream::Body, Stream::Hand],
        train_classes: 170,
        val_classes: 30,
        test_classes: 50,
        samples_per_class: 7,
        snippets: 4,
        noise: 0.2,
        seed,
        ..Default::default()
    };
    let full = generate_synthetic(&config).unwrap().dataset;
    let targets = [(Split::Train, 1188), (Split::Val, 151), (Split::Test, 259)];
    let mut keep = BTreeSet::new();
    for (split, target) in targets {
        let classes = full.split().classes(split).clone();
        let mut by_class: BTreeMap<ClassId, Vec<&str>> = BTreeMap::new();
        for v in full.videos_in(split) {
            by_class.entry(v.class).or_default().push(&v.id);
        }
        assert_eq!(by_class.len(), classes.len());
        // Round-robin over sample index so the trimmed set stays balanced.
        let mut taken = 0;
        'outer: for slot in 0.. {
            for ids in by_class.values() {
                if let Some(id) = ids.get(slot) {
                    keep.insert(id.to_string());
                    taken += 1;
                    if taken == target {
                        break 'outer;
                    }
                }
            }
        }
    }
    let videos = full.videos().iter().filter(|v| keep.contains(&v.id)).cloned().collect();
    let split = SplitSpec { train: full.split().train.clone(), val: full.split().val.clone(), test: full.split().test.clone() };
    Dataset::new(full.feature_dim(), full.embedding_dim(), full.streams().to_vec(), full.classes().to_vec(), videos, split).unwrap()
}
