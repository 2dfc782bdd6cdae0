//! Restarted GMRES with right preconditioning on real vectors.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Chunk sums are combined in a fixed order so results do not depend on the thread count.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let parts: Vec<f64> =
        a.par_chunks(4096).zip(b.par_chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).collect();
    parts.iter().sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(y, x)| *y += alpha * x);
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// ‖b − Ax‖/‖b‖ after each iteration, starting with the initial guess
    pub history: Vec<f64>,
}

/// Solves A x = b to ‖b − Ax‖ ≤ tol‖b‖, starting from the contents of `x`.
///
/// Right preconditioning keeps the monitored residual equal to the true one.
pub fn gmres(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<KrylovReport> {
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovReport { iterations: 0, history: vec![0.0] });
    }
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let ax = apply(x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        let rel = beta / bn;
        history.push(rel);
        if rel <= tol {
            return Ok(KrylovReport { iterations, history });
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence { iterations, residual: rel, history });
        }
        r.iter_mut().for_each(|v| *v /= beta);
        let m = restart.min(max_iter - iterations);
        let mut basis = vec![r];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m {
            let zk = precond(&basis[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i][k] = hij;
                axpy(&mut w, -hij, v);
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            iterations += 1;
            let est = g[k].abs() / bn;
            history.push(est);
            if est <= tol || wn == 0.0 {
                break;
            }
            w.iter_mut().for_each(|v| *v /= wn);
            basis.push(w);
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            axpy(x, *yi, zi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_tridiagonal() {
        let n = 200;
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let l = if i > 0 { v[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { v[i + 1] } else { 0.0 };
                    3.0 * v[i] - 1.2 * l - 0.5 * r
                })
                .collect()
        };
        let id = |v: &[f64]| v.to_vec();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut x = vec![0.0; n];
        let rep = gmres(&apply, &id, &b, &mut x, 1e-10, 30, 1000).unwrap();
        let r: f64 = apply(&x).iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(r <= 1e-10 * norm(&b) * 1.01, "{r} after {}", rep.iterations);
    }

    #[test]
    fn budget_exhaustion_reports_history() {
        let apply = |v: &[f64]| -> Vec<f64> { v.iter().enumerate().map(|(i, x)| (1.0 + i as f64) * x).collect() };
        let id = |v: &[f64]| v.to_vec();
        let b = vec![1.0; 50];
        let mut x = vec![0.0; 50];
        match gmres(&apply, &id, &b, &mut x, 1e-14, 3, 6) {
            Err(Error::NoConvergence { iterations, history, .. }) => {
                assert_eq!(iterations, 6);
                assert!(history.len() >= 6);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
