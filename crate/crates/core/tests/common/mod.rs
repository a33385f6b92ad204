#![allow(dead_code)]

use gwnorm::SignedMeasure;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn measure_1d(atoms: &[(f64, f64)]) -> SignedMeasure {
    SignedMeasure::from_flat(
        1,
        atoms.iter().map(|a| a.0).collect(),
        atoms.iter().map(|a| a.1).collect(),
    )
    .unwrap()
}

/// Atoms uniform in [-1, 1]^d; weights uniform in [-2, 2] or (0, 2].
pub fn random_measure(
    rng: &mut ChaCha8Rng,
    dim: usize,
    atoms: usize,
    positive: bool,
) -> SignedMeasure {
    let mut pos = Vec::with_capacity(atoms * dim);
    let mut w = Vec::with_capacity(atoms);
    for _ in 0..atoms {
        for _ in 0..dim {
            pos.push(rng.random_range(-1.0..1.0));
        }
        w.push(if positive {
            rng.random_range(0.01..2.0)
        } else {
            rng.random_range(-2.0..2.0)
        });
    }
    SignedMeasure::from_flat(dim, pos, w).unwrap()
}

/// Solves the square system `m x = r` by Gaussian elimination with partial
/// pivoting; `None` when singular.
#[allow(clippy::needless_range_loop)]
pub fn solve_square(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                r[row] -= f * r[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (r[row] - s) / m[row][row];
    }
    Some(x)
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Minimum of `c.x` over the vertices of `{x : g x <= h}`, found by trying
/// every choice of `n` active constraints.
pub fn min_over_vertices(c: &[f64], g: &[Vec<f64>], h: &[f64]) -> f64 {
    let n = c.len();
    let mut best = f64::INFINITY;
    for_each_subset(g.len(), n, &mut |active| {
        let m: Vec<Vec<f64>> = active.iter().map(|&i| g[i].clone()).collect();
        let r: Vec<f64> = active.iter().map(|&i| h[i]).collect();
        if let Some(x) = solve_square(m, r) {
            let feasible = g
                .iter()
                .zip(h)
                .all(|(row, hi)| row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() <= hi + 1e-9);
            if feasible {
                best = best.min(c.iter().zip(&x).map(|(a, b)| a * b).sum());
            }
        }
    });
    best
}

/// Minimum of `c.x` over basic feasible solutions of `{a x = b, x >= 0}`,
/// where `a` has full row rank.
pub fn min_over_bases(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let rows = a.len();
    let mut best = f64::INFINITY;
    for_each_subset(c.len(), rows, &mut |basis| {
        let m: Vec<Vec<f64>> = a
            .iter()
            .map(|row| basis.iter().map(|&j| row[j]).collect())
            .collect();
        if let Some(x) = solve_square(m, b.to_vec()) {
            if x.iter().all(|v| *v >= -1e-9) {
                best = best.min(basis.iter().zip(&x).map(|(&j, v)| c[j] * v).sum());
            }
        }
    });
    best
}

/// Inequality form of transport with cancellation, straight from its
/// definition: plan entries are the variables, marginals bounded above.
pub fn cancellation_lp_by_vertices(mu: &SignedMeasure, nu: &SignedMeasure, a: f64, b: f64) -> f64 {
    let (m, n) = (mu.len(), nu.len());
    let vars = m * n;
    let constant = a * (mu.mass() + nu.mass());
    if vars == 0 {
        return constant;
    }
    let mut c = vec![0.0; vars];
    for i in 0..m {
        for j in 0..n {
            let d: f64 = mu
                .position(i)
                .iter()
                .zip(nu.position(j))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            c[i * n + j] = b * d - 2.0 * a;
        }
    }
    let mut g = Vec::new();
    let mut h = Vec::new();
    for k in 0..vars {
        let mut row = vec![0.0; vars];
        row[k] = -1.0;
        g.push(row);
        h.push(0.0);
    }
    for i in 0..m {
        let mut row = vec![0.0; vars];
        (0..n).for_each(|j| row[i * n + j] = 1.0);
        g.push(row);
        h.push(mu.weight(i));
    }
    for j in 0..n {
        let mut row = vec![0.0; vars];
        (0..m).for_each(|i| row[i * n + j] = 1.0);
        g.push(row);
        h.push(nu.weight(j));
    }
    constant + min_over_vertices(&c, &g, &h)
}
