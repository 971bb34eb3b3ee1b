//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::cell::RefCell;
use std::path::PathBuf;

use clipvrg::oracles::{gradient_descent, Dataset};
use clipvrg::topology::{build_complete, build_cycle_k, build_grid, build_random_geometric, is_connected, Graph};
use clipvrg::{Execution, Experiment, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn load_config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(n: usize, mut a: Vec<f64>) -> Vec<f64> {
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

/// Second-largest eigenvalue magnitude of a symmetric stochastic matrix,
/// found by discarding the eigenvalue closest to 1 (the all-ones vector).
pub fn reference_beta(n: usize, w: &[f64]) -> f64 {
    let mut ev = jacobi_eigenvalues(n, w.to_vec());
    let top = ev
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).abs().partial_cmp(&(b.1 - 1.0).abs()).unwrap())
        .map(|(k, _)| k)
        .unwrap();
    ev.remove(top);
    ev.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Metropolis weights built from the degree formula directly.
pub fn reference_metropolis(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let deg: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| g.has_edge(i, j)).count()).collect();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j && g.has_edge(i, j) {
                w[i * n + j] = 1.0 / (1 + deg[i].max(deg[j])) as f64;
            }
        }
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[i * n + j]).sum();
        w[i * n + i] = 1.0 - off;
    }
    w
}

/// Lattice pairs within `radius`, by enumeration of all pairs.
pub fn brute_force_grid_edges(rows: usize, cols: usize, radius: f64) -> Vec<(usize, usize)> {
    let pos = |k: usize| ((k % cols) as f64, (k / cols) as f64);
    let n = rows * cols;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (pos(i), pos(j));
            if ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() <= radius + 1e-12 {
                out.push((i, j));
            }
        }
    }
    out
}

/// Minimizer of the regularized logistic loss by damped Newton with a
/// backtracking line search and a dense Cholesky solve.
pub fn newton_logistic(data: &Dataset, lambda: f64, tol: f64) -> Vec<f64> {
    let d = data.dim();
    let m = data.len() as f64;
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let loss = |x: &[f64]| {
        let mut s = 0.0;
        for k in 0..data.len() {
            let z = data.label(k) * dot(data.point(k), x);
            s += if z > 0.0 { (-z).exp().ln_1p() } else { -z + z.exp().ln_1p() };
        }
        s / m + 0.5 * lambda * dot(x, x)
    };
    let mut x = vec![0.0; d];
    for _ in 0..200 {
        let mut g: Vec<f64> = x.iter().map(|v| lambda * v).collect();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = lambda;
        }
        for k in 0..data.len() {
            let th = data.point(k);
            let y = data.label(k);
            let z = y * dot(th, &x);
            let p = sig(-z);
            for i in 0..d {
                g[i] -= y * th[i] * p / m;
            }
            let wgt = p * (1.0 - p) / m;
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] += wgt * th[i] * th[j];
                }
            }
        }
        if dot(&g, &g).sqrt() <= tol {
            break;
        }
        let step = cholesky_solve(d, h, &g);
        let f0 = loss(&x);
        let slope = dot(&g, &step);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a - t * b).collect();
            if loss(&cand) <= f0 - 0.25 * t * slope || t < 1e-12 {
                x = cand;
                break;
            }
            t *= 0.5;
        }
    }
    x
}

fn cholesky_solve(d: usize, mut a: Vec<f64>, b: &[f64]) -> Vec<f64> {
    for j in 0..d {
        let mut s = a[j * d + j];
        for k in 0..j {
            s -= a[j * d + k].powi(2);
        }
        let ljj = s.sqrt();
        a[j * d + j] = ljj;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = s / ljj;
        }
    }
    let mut y = b.to_vec();
    for i in 0..d {
        for k in 0..i {
            y[i] -= a[i * d + k] * y[k];
        }
        y[i] /= a[i * d + i];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            y[i] -= a[k * d + i] * y[k];
        }
        y[i] /= a[i * d + i];
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Random symmetric positive definite matrix with spectrum in `[mu, l]`
/// (both endpoints attained), via Gram-Schmidt on a Gaussian matrix.
pub fn random_quadratic(rng: &mut ChaCha8Rng, d: usize, mu: f64, l: f64) -> Vec<f64> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for u in &q {
            let p = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            v.iter_mut().for_each(|a| *a /= nv);
            q.push(v);
        }
    }
    let lambdas: Vec<f64> = (0..d)
        .map(|k| match k {
            0 => mu,
            1 => l,
            _ => rng.random_range(mu..=l),
        })
        .collect();
    let mut a = vec![0.0; d * d];
    for (u, lam) in q.iter().zip(&lambdas) {
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] += lam * u[i] * u[j];
            }
        }
    }
    a
}

/// Runs library gradient descent on `cases` random strongly convex
/// quadratics with random `alpha` in `(0, 2/(L+mu)]` and returns the largest
/// `||x' - x*|| - (1 - alpha mu) ||x - x*||` over all consecutive iterates.
pub fn gd_contraction_worst_excess(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let d = rng.random_range(1..=8);
        let mu = rng.random_range(0.05..2.0);
        let l = if d == 1 { mu } else { mu * rng.random_range(1.0..50.0) };
        let a = random_quadratic(&mut rng, d, mu, l);
        let x_star: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let alpha = rng.random_range(0.0..1.0f64).max(1e-3) * 2.0 / (l + mu);
        let x0: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();

        let iterates = RefCell::new(Vec::new());
        let grad = |x: &[f64]| {
            iterates.borrow_mut().push(x.to_vec());
            let r: Vec<f64> = x.iter().zip(&x_star).map(|(p, q)| p - q).collect();
            Ok((0..d).map(|i| (0..d).map(|j| a[i * d + j] * r[j]).sum()).collect())
        };
        let _ = gradient_descent(grad, x0, alpha, 1e-9, 40);
        let dist = |x: &[f64]| {
            x.iter()
                .zip(&x_star)
                .map(|(p, q)| (p - q).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        for pair in iterates.into_inner().windows(2) {
            let excess = dist(&pair[1]) - (1.0 - alpha * mu) * dist(&pair[0]);
            worst = worst.max(excess);
        }
    }
    worst
}

/// Connected test graphs with at most 20 nodes.
pub fn small_graphs() -> Vec<(String, Graph)> {
    let mut out = Vec::new();
    for n in 2..=20 {
        out.push((format!("path-{n}"), Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()));
        out.push((format!("complete-{n}"), build_complete(n).unwrap()));
        out.push((format!("star-{n}"), Graph::from_edges(n, (1..n).map(|i| (0, i))).unwrap()));
        if n >= 3 {
            out.push((format!("cycle-{n}"), build_cycle_k(n, 2).unwrap()));
        }
        if n >= 7 {
            out.push((format!("cycle_k-{n}-6"), build_cycle_k(n, 6).unwrap()));
        }
    }
    for (r, c, rad) in [(2, 2, 1.0), (3, 3, 1.0), (3, 3, 1.5), (4, 4, 1.5), (4, 5, 1.0), (2, 10, 1.5)] {
        out.push((format!("grid-{r}x{c}-{rad}"), build_grid(r, c, rad).unwrap()));
    }
    for seed in 0..40 {
        let g = build_random_geometric(12 + (seed as usize % 9), 0.45, seed).unwrap();
        if is_connected(&g) {
            out.push((format!("geometric-seed{seed}"), g));
        }
    }
    out
}

/// Full CSV output of one run.
pub fn csv_of(cfg: &ExperimentConfig, exec: Execution) -> Vec<u8> {
    let exp = Experiment::build(cfg).unwrap();
    let mut out = Vec::new();
    exp.run(exec, Some(&mut out)).unwrap();
    out
}
