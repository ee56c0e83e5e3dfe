//! Naive reimplementations of the core kernels and drivers that compare them
//! with the library on random small instances. Each driver returns the
//! largest discrepancy seen.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use trimboot::bootstrap::{bootstrap_statistic, BootstrapKind};
use trimboot::contamination::ContaminatedSample;
use trimboot::diagnostics::count_exceedances;
use trimboot::experiments::two_sample_ks;
use trimboot::gaussian::NormSpecFinite;
use trimboot::vecmean::minimax_mean;
use trimboot::{trimmed_mean_matrix, SampleMatrix, Stream, TrimPlan};

fn random_matrix(rng: &mut impl Rng, n: usize, d: usize) -> SampleMatrix {
    let t = StudentT::new(5.0).unwrap();
    let vals: Vec<f64> = (0..n * d).map(|_| if rng.random::<f64>() < 0.5 { rng.sample(StandardNormal) } else { t.sample(rng) }).collect();
    SampleMatrix::from_rows(n, d, vals, Stream(0))
}

pub fn naive_trimmed(col: &[f64], k: usize) -> f64 {
    let mut s = col.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    for x in &s[k..s.len() - k] {
        total += x;
    }
    total / (s.len() - 2 * k) as f64
}

pub fn trimmed_mean_discrepancy(instances: usize, seed: u64) -> f64 {
    let mut rng = Stream(seed).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = rng.random_range(3..=100);
        let d = rng.random_range(1..=10);
        let k = rng.random_range(0..=(n - 1) / 2);
        let x = random_matrix(&mut rng, n, d);
        let fast = trimmed_mean_matrix(&x, k).unwrap();
        for j in 0..d {
            let col: Vec<f64> = (0..n).map(|i| x.get(i, j)).collect();
            worst = worst.max((fast[j] - naive_trimmed(&col, k)).abs());
        }
    }
    worst
}

/// Rebuilds the draw from the documented stream contract: the empirical kind
/// takes `n` calls of `random_range(0..n)`, the multiplier kind `n` standard
/// normals, both from `stream.rng()`.
pub fn naive_bootstrap(x: &SampleMatrix, k: usize, kind: BootstrapKind, stream: Stream) -> f64 {
    let (n, d) = (x.n(), x.d());
    let mut rng = stream.rng();
    let (idx, xi): (Vec<usize>, Vec<f64>) = match kind {
        BootstrapKind::Empirical => ((0..n).map(|_| rng.random_range(0..n)).collect(), vec![1.0; n]),
        BootstrapKind::GaussianMultiplier => ((0..n).collect(), (0..n).map(|_| rng.sample(StandardNormal)).collect()),
    };
    let mut best = f64::NEG_INFINITY;
    for j in 0..d {
        let col: Vec<f64> = (0..n).map(|i| x.get(i, j)).collect();
        let center = naive_trimmed(&col, k);
        let mut prods: Vec<f64> = (0..n).map(|i| xi[i] * (col[idx[i]] - center)).collect();
        prods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut total = 0.0;
        for v in &prods[k..n - k] {
            total += v;
        }
        best = best.max((n as f64).sqrt() / (n - 2 * k) as f64 * total);
    }
    best
}

pub fn bootstrap_discrepancy(instances: usize, seed: u64) -> f64 {
    let mut rng = Stream(seed).rng();
    let mut worst: f64 = 0.0;
    for inst in 0..instances {
        let n = rng.random_range(5..=100);
        let d = rng.random_range(1..=10);
        let k = rng.random_range(0..=(n - 1) / 2);
        let x = random_matrix(&mut rng, n, d);
        let plan = TrimPlan::manual(n, d, 0.0, 4.0, k, 1.0, 1.0).unwrap();
        let data = ContaminatedSample::clean(x.clone());
        for kind in [BootstrapKind::Empirical, BootstrapKind::GaussianMultiplier] {
            let s = Stream(seed ^ inst as u64);
            let fast = bootstrap_statistic(&data, &plan, kind, s).unwrap();
            worst = worst.max((fast - naive_bootstrap(&x, k, kind, s)).abs());
        }
    }
    worst
}

/// Number of instances where the exceedance count differs.
pub fn exceedance_mismatches(instances: usize, seed: u64) -> usize {
    let mut rng = Stream(seed).rng();
    let mut bad = 0;
    for _ in 0..instances {
        let n = rng.random_range(1..=100);
        let d = rng.random_range(1..=10);
        let x = random_matrix(&mut rng, n, d);
        let m = rng.random_range(0.0..3.0);
        let mut slow = 0;
        for j in 0..d {
            let mut c = 0;
            for i in 0..n {
                if x.get(i, j).abs() > m {
                    c += 1;
                }
            }
            slow = slow.max(c);
        }
        bad += (count_exceedances(&x, m) != slow) as usize;
    }
    bad
}

pub fn naive_ks(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], x: f64| s.iter().filter(|v| **v <= x).count() as f64 / s.len() as f64;
    a.iter().chain(b).map(|&x| (cdf(a, x) - cdf(b, x)).abs()).fold(0.0, f64::max)
}

pub fn ks_discrepancy(instances: usize, seed: u64) -> f64 {
    let mut rng = Stream(seed).rng();
    let mut worst: f64 = 0.0;
    for inst in 0..instances {
        let na = rng.random_range(1..=100);
        let nb = rng.random_range(1..=100);
        let shift = rng.random_range(-1.0..1.0);
        // Rounded values create ties in half the instances.
        let round = inst % 2 == 0;
        let mut draw = |s: f64| {
            let v: f64 = rng.sample::<f64, _>(StandardNormal) + s;
            if round {
                (v * 4.0).round() / 4.0
            } else {
                v
            }
        };
        let a: Vec<f64> = (0..na).map(|_| draw(0.0)).collect();
        let b: Vec<f64> = (0..nb).map(|_| draw(shift)).collect();
        worst = worst.max((two_sample_ks(&a, &b) - naive_ks(&a, &b)).abs());
    }
    worst
}

/// `min t` over `|T_v - <v, mu>| <= t` by enumerating every vertex: each
/// choice of `d + 1` active constraints, solved by Gaussian elimination.
pub fn vertex_enumeration(tvals: &[f64], s: &[Vec<f64>]) -> f64 {
    let d = s[0].len();
    // Rows a . (mu, t) >= b.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (v, &tv) in s.iter().zip(tvals) {
        let mut plus = v.clone();
        plus.push(1.0);
        rows.push((plus, tv));
        let mut minus: Vec<f64> = v.iter().map(|x| -x).collect();
        minus.push(1.0);
        rows.push((minus, -tv));
    }
    let m = rows.len();
    let mut best = f64::INFINITY;
    let mut choice: Vec<usize> = (0..=d).collect();
    loop {
        if let Some(z) = solve_square(&choice.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>()) {
            let feasible = rows.iter().all(|(a, b)| a.iter().zip(&z).map(|(x, y)| x * y).sum::<f64>() >= b - 1e-9);
            if feasible {
                best = best.min(z[d]);
            }
        }
        let mut i = d as isize;
        while i >= 0 && choice[i as usize] == m - (d + 1) + i as usize {
            i -= 1;
        }
        if i < 0 {
            return best;
        }
        let i = i as usize;
        choice[i] += 1;
        for j in i + 1..=d {
            choice[j] = choice[j - 1] + 1;
        }
    }
}

fn solve_square(rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let k = rows.len();
    let mut a: Vec<Vec<f64>> = rows.iter().map(|(r, b)| r.iter().copied().chain(std::iter::once(*b)).collect()).collect();
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, piv);
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for q in c..=k {
                    a[r][q] -= f * a[c][q];
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

/// General dual sets in `d <= 3` against vertex enumeration.
pub fn minimax_vertex_discrepancy(instances: usize, seed: u64) -> f64 {
    let mut rng = Stream(seed).rng();
    let mut worst: f64 = 0.0;
    for inst in 0..instances {
        let d = 1 + inst % 3;
        let max_half = if d == 3 { 6 } else { 10 };
        let half_len = rng.random_range(d..=max_half);
        let half: Vec<Vec<f64>> = (0..half_len).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let s = NormSpecFinite::symmetrized(half).unwrap();
        assert!(s.len() <= 20);
        let tvals: Vec<f64> = (0..s.len()).map(|_| rng.sample(StandardNormal)).collect();
        let sol = minimax_mean(&tvals, &s).unwrap();
        worst = worst.max((sol.objective - vertex_enumeration(&tvals, s.vectors())).abs());
    }
    worst
}

/// Sup-norm dual sets in `d <= 10` against the per-coordinate midpoint.
pub fn minimax_axis_discrepancy(instances: usize, seed: u64) -> f64 {
    let mut rng = Stream(seed).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let d = rng.random_range(1..=10);
        let s = NormSpecFinite::linf(d);
        let tvals: Vec<f64> = (0..2 * d).map(|_| rng.sample(StandardNormal)).collect();
        let sol = minimax_mean(&tvals, &s).unwrap();
        // linf(d) is ordered +e_1, -e_1, +e_2, ...; the best mu_j is the
        // midpoint of T_{+e_j} and -T_{-e_j}.
        let mut obj: f64 = 0.0;
        for j in 0..d {
            let (hi, lo) = (tvals[2 * j], -tvals[2 * j + 1]);
            obj = obj.max((hi - lo).abs() / 2.0);
            worst = worst.max((sol.mu_hat[j] - (hi + lo) / 2.0).abs());
        }
        worst = worst.max((sol.objective - obj).abs());
    }
    worst
}
