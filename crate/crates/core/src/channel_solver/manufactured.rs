//! Manufactured solutions for convergence studies of the mapped solver.

use num_complex::Complex64 as C64;

use super::{ChannelGeometry, ChannelSolution, Forcing};
use crate::dtn_operator::grid_symbol;
use crate::error::{Error, Result};
use crate::grid::{Fft2, FieldGrid, Torus};

/// Σ_t a_t(x_h) q_t(x₃) with a_t sampled on the torus and q_t polynomials
/// (ascending coefficients).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Separable {
    pub terms: Vec<(Vec<f64>, Vec<f64>)>,
}

fn poly_eval(q: &[f64], x: f64) -> f64 {
    q.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl Separable {
    pub fn term(field: Vec<f64>, poly: Vec<f64>) -> Self {
        Self { terms: vec![(field, poly)] }
    }

    pub fn eval(&self, idx: usize, x3: f64) -> f64 {
        self.terms.iter().map(|(a, q)| a[idx] * poly_eval(q, x3)).sum()
    }

    pub fn plus(mut self, other: &Separable, scale: f64) -> Self {
        self.terms.extend(other.terms.iter().map(|(a, q)| (a.clone(), q.iter().map(|c| c * scale).collect())));
        self
    }

    /// Product with a field and a polynomial.
    pub fn times(&self, field: &[f64], poly: &[f64]) -> Self {
        let terms =
            self.terms.iter().map(|(a, q)| (a.iter().zip(field).map(|(x, y)| x * y).collect(), poly_mul(q, poly))).collect();
        Self { terms }
    }

    pub fn d3(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(a, q)| {
                let dq: Vec<f64> = q.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
                (a.clone(), if dq.is_empty() { vec![0.0] } else { dq })
            })
            .collect();
        Self { terms }
    }

    /// Spectral horizontal derivative along `axis`.
    pub fn dh(&self, torus: &Torus, axis: usize) -> Self {
        let n = torus.n;
        let fft = Fft2::new(n);
        let terms = self
            .terms
            .iter()
            .map(|(a, q)| {
                let s: Vec<C64> =
                    fft.forward_real(a).iter().enumerate().map(|(i, z)| z * torus.deriv_factor(i / n, i % n, axis)).collect();
                (fft.inverse_real(s).0, q.clone())
            })
            .collect();
        Self { terms }
    }

    pub fn laplacian(&self, torus: &Torus) -> Self {
        let d3 = self.d3().d3();
        self.dh(torus, 0).dh(torus, 0).plus(&self.dh(torus, 1).dh(torus, 1), 1.0).plus(&d3, 1.0)
    }
}

/// A solenoidal velocity vanishing on the bottom, with its pressure and the
/// body and top forcing that make it an exact solution of the channel problem.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub torus: Torus,
    pub velocity: [Separable; 3],
    pub pressure: Separable,
    body: [Separable; 3],
    top: [Vec<f64>; 3],
}

impl Manufactured {
    /// u = ∇×ψ with ψ = (x₃ − ω)² (…) a trigonometric potential, p = cos(κx₁)(0.3 + x₃).
    pub fn standard(geometry: &ChannelGeometry) -> Result<Self> {
        let t = geometry.torus;
        let n = t.n;
        let k = 2.0 * std::f64::consts::PI / t.period;
        let om = &geometry.omega;
        let samp = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> { (0..n * n).map(|i| f(t.coord(i / n), t.coord(i % n))).collect() };
        let one = vec![1.0; n * n];
        let sq = Separable::term(one.clone(), vec![0.0, 0.0, 1.0])
            .plus(&Separable::term(om.iter().map(|w| -2.0 * w).collect(), vec![0.0, 1.0]), 1.0)
            .plus(&Separable::term(om.iter().map(|w| w * w).collect(), vec![1.0]), 1.0);
        let psi = [
            sq.times(&samp(&|_, y| (k * y).sin()), &[1.0, 1.0]),
            sq.times(&samp(&|x, _| (k * x).cos()), &[1.0, -0.5]),
            sq.times(&samp(&|x, y| 0.5 * (k * (x + y)).sin()), &[1.0]),
        ];
        let velocity = [
            psi[2].dh(&t, 1).plus(&psi[1].d3(), -1.0),
            psi[0].d3().plus(&psi[2].dh(&t, 0), -1.0),
            psi[1].dh(&t, 0).plus(&psi[0].dh(&t, 1), -1.0),
        ];
        let pressure = Separable::term(samp(&|x, _| (k * x).cos()), vec![0.3, 1.0]);
        let zero = Separable::default();
        let coriolis = [velocity[1].clone(), velocity[0].clone(), zero.clone()];
        let grad_p = [pressure.dh(&t, 0), pressure.dh(&t, 1), pressure.d3()];
        let body: [Separable; 3] = std::array::from_fn(|c| {
            let cor_sign = if c == 0 { -1.0 } else { 1.0 };
            Separable::default().plus(&velocity[c].laplacian(&t), -1.0).plus(&coriolis[c], cor_sign).plus(&grad_p[c], 1.0)
        });
        // F = −∂₃u + p e₃ − DtN(u|₀) on x₃ = 0
        let trace: [Vec<f64>; 3] = std::array::from_fn(|c| (0..n * n).map(|i| velocity[c].eval(i, 0.0)).collect());
        let dtn = apply_dtn(&t, &trace)?;
        let top = std::array::from_fn(|c| {
            let d3 = velocity[c].d3();
            (0..n * n)
                .map(|i| -d3.eval(i, 0.0) + if c == 2 { pressure.eval(i, 0.0) } else { 0.0 } - dtn[c][i])
                .collect()
        });
        Ok(Self { torus: t, velocity, pressure, body, top })
    }

    pub fn exact(&self, idx: usize, x3: f64) -> [f64; 3] {
        std::array::from_fn(|c| self.velocity[c].eval(idx, x3))
    }

    /// Exact velocity on the σ nodes of `geometry`.
    pub fn field(&self, geometry: &ChannelGeometry) -> FieldGrid {
        let sigma = geometry.sigma_nodes();
        let n2 = self.torus.len();
        let mut out = FieldGrid::zeros(self.torus, sigma.clone(), &["u1", "u2", "u3"]);
        for (k, &s) in sigma.iter().enumerate() {
            for idx in 0..n2 {
                let u = self.exact(idx, geometry.height(idx, s));
                for c in 0..3 {
                    out.data[c][k * n2 + idx] = u[c];
                }
            }
        }
        out
    }

    /// Relative nodal L² error of the velocity on σ ∈ [0, 1], weighted by the column depth.
    pub fn l2_error(&self, solution: &ChannelSolution) -> Result<f64> {
        let g = &solution.geometry;
        let n2 = self.torus.len();
        let kt = g.cells();
        if solution.velocity.levels.len() < kt + 1 {
            return Err(Error::Input("solution has fewer σ nodes than its geometry".into()));
        }
        let (mut err, mut norm) = (0.0, 0.0);
        for k in 0..=kt {
            let s = solution.velocity.levels[k];
            let wk = if k == 0 || k == kt { 0.5 } else { 1.0 };
            for idx in 0..n2 {
                let u = self.exact(idx, g.height(idx, s));
                let w = wk * (-g.omega[idx]);
                for c in 0..3 {
                    let e = solution.velocity.data[c][k * n2 + idx] - u[c];
                    err += w * e * e;
                    norm += w * u[c] * u[c];
                }
            }
        }
        Ok((err / norm).sqrt())
    }
}

impl Forcing for Manufactured {
    fn body(&self, idx: usize, x3: f64) -> [f64; 3] {
        std::array::from_fn(|c| self.body[c].eval(idx, x3))
    }

    fn top(&self) -> &[Vec<f64>; 3] {
        &self.top
    }

    fn offset(&self, _idx: usize, _x3: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

fn apply_dtn(t: &Torus, v: &[Vec<f64>; 3]) -> Result<[Vec<f64>; 3]> {
    let n = t.n;
    let fft = Fft2::new(n);
    let spec: Vec<Vec<C64>> = v.iter().map(|f| fft.forward_real(f)).collect();
    let mut out = [vec![C64::new(0.0, 0.0); n * n], vec![C64::new(0.0, 0.0); n * n], vec![C64::new(0.0, 0.0); n * n]];
    for idx in 0..n * n {
        let m = grid_symbol(t, idx / n, idx % n)?;
        for i in 0..3 {
            out[i][idx] = (0..3).map(|j| m[(i, j)] * spec[j][idx]).sum();
        }
    }
    Ok(out.map(|s| fft.inverse_real(s).0))
}
