#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spparafac::prior::draw_dirichlet;
use spparafac::{SimplexVector, SpParafacParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_simplex(d: usize, rng: &mut impl Rng) -> SimplexVector {
    draw_dirichlet(&vec![1.0; d], rng)
}

/// Random model with `k` components, the given levels, uniform baselines and
/// each variable active with probability `active_prob`.
pub fn random_model(k: usize, levels: &[usize], active_prob: f64, rng: &mut impl Rng) -> SpParafacParams {
    let weights = random_simplex(k, rng).into_inner();
    let baseline: Vec<SimplexVector> = levels.iter().map(|&d| SimplexVector::uniform(d)).collect();
    let components = (0..k)
        .map(|_| {
            levels
                .iter()
                .map(|&d| (rng.random::<f64>() < active_prob).then(|| random_simplex(d, rng)))
                .collect()
        })
        .collect();
    SpParafacParams::from_weights(&weights, baseline, components).unwrap()
}

/// Random model whose active variables all lie in `support`.
pub fn random_model_on(k: usize, levels: &[usize], support: &[usize], rng: &mut impl Rng) -> SpParafacParams {
    let weights = random_simplex(k, rng).into_inner();
    let baseline: Vec<SimplexVector> = levels.iter().map(|&d| SimplexVector::uniform(d)).collect();
    let components = (0..k)
        .map(|_| {
            (0..levels.len())
                .map(|j| support.contains(&j).then(|| random_simplex(levels[j], rng)))
                .collect()
        })
        .collect();
    SpParafacParams::from_weights(&weights, baseline, components).unwrap()
}

/// `Σ_h ν_h Π_j λ_h^(j)[c_j]` by explicit loops (0-based codes).
pub fn brute_cell(m: &SpParafacParams, codes: &[usize]) -> f64 {
    let mut total = 0.0;
    for h in 0..m.num_components() {
        let mut t = m.weights()[h];
        for (j, &c) in codes.iter().enumerate() {
            t *= m.lambda(h, j)[c];
        }
        total += t;
    }
    total
}

/// All 0-based code vectors in first-axis-fastest order.
pub fn all_cells(dims: &[usize]) -> Vec<Vec<usize>> {
    let count: usize = dims.iter().product();
    let mut out = Vec::with_capacity(count);
    let mut c = vec![0; dims.len()];
    for _ in 0..count {
        out.push(c.clone());
        for (x, &d) in c.iter_mut().zip(dims) {
            *x += 1;
            if *x < d {
                break;
            }
            *x = 0;
        }
    }
    out
}

/// Right-hand side of the L1 perturbation bound between two mixtures with
/// the same number of components and dimensions.
pub fn l1_bound(a: &SpParafacParams, b: &SpParafacParams) -> f64 {
    let mut bound = 0.0;
    for h in 0..a.num_components() {
        bound += (a.weights()[h] - b.weights()[h]).abs();
        let mut inner = 0.0;
        for j in 0..a.num_variables() {
            inner += a.lambda(h, j).iter().zip(b.lambda(h, j)).map(|(x, y)| (x - y).abs()).sum::<f64>();
        }
        bound += b.weights()[h] * inner;
    }
    bound
}

/// Mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
