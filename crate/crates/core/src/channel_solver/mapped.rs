//! Terrain-following discretisation of the channel problem.
//!
//! With σ = (x₃ − ω)/(−ω) each column is split into uniform cells. Velocity is
//! continuous piecewise linear in σ (nodes), pressure piecewise constant (cell
//! centres); all horizontal dependence is collocated on the torus grid with
//! spectral derivatives. The equations are the Galerkin form of the weak
//! problem, integrated in σ by two-point Gauss rules per cell, so the discrete
//! operator is exactly the weak residual against nodal test functions. Rows are
//! densities per unit horizontal area.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::banded::BandMatrix;
use super::krylov::gmres;
use super::{ChannelGeometry, ChannelProblem, ChannelSolution, Diagnostics, Forcing};
use crate::dtn_operator::{grid_symbol, CMat3};
use crate::error::{Error, Result};
use crate::grid::{Fft2, FieldGrid, Torus};

/// Condition on the top of the column.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Top {
    /// −∂₃u + pe₃ = DtN(u|₀) on σ = 1
    Transparent,
    /// u = 0 on σ = 1 + extra_cells/(n_v − 1)
    Wall { extra_cells: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// relative residual ‖b − Ax‖/‖b‖
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: usize,
    pub top: Top,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 10_000, restart: 40, top: Top::Transparent }
    }
}

/// Relative discrete divergence above which a test field is rejected.
pub const DIV_TOL: f64 = 0.05;

const GAUSS_T: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];

fn grad2(t: &Torus, fft: &Fft2, f: &[f64]) -> [Vec<f64>; 2] {
    let n = t.n;
    let s = fft.forward_real(f);
    let mk = |axis: usize| {
        let v: Vec<C64> = s.iter().enumerate().map(|(i, z)| z * t.deriv_factor(i / n, i % n, axis)).collect();
        fft.inverse_real(v).0
    };
    [mk(0), mk(1)]
}

/// −(∂₁f₁ + ∂₂f₂), the grid-sum adjoint of the spectral gradient.
fn grad2_adjoint(t: &Torus, fft: &Fft2, f1: &[f64], f2: &[f64]) -> Vec<f64> {
    let n = t.n;
    let (a, b) = (fft.forward_real(f1), fft.forward_real(f2));
    let v: Vec<C64> = (0..n * n)
        .map(|i| -(a[i] * t.deriv_factor(i / n, i % n, 0) + b[i] * t.deriv_factor(i / n, i % n, 1)))
        .collect();
    fft.inverse_real(v).0
}

struct CellOut {
    lo: [Vec<f64>; 3],
    hi: [Vec<f64>; 3],
    lo_h: [[Vec<f64>; 2]; 3],
    hi_h: [[Vec<f64>; 2]; 3],
    cont: Vec<f64>,
}

pub(crate) struct Operator<'a> {
    geom: &'a ChannelGeometry,
    torus: Torus,
    fft: Fft2,
    pub cells: usize,
    ds: f64,
    top: Top,
    depth: Vec<f64>,
    symbols: Vec<CMat3>,
}

impl<'a> Operator<'a> {
    pub fn new(geom: &'a ChannelGeometry, top: Top) -> Result<Self> {
        let torus = geom.torus;
        let base = geom.cells();
        let cells = match top {
            Top::Transparent => base,
            Top::Wall { extra_cells } => base + extra_cells,
        };
        let n = torus.n;
        let symbols = match top {
            Top::Transparent => {
                (0..n * n).into_par_iter().map(|i| grid_symbol(&torus, i / n, i % n)).collect::<Result<Vec<_>>>()?
            }
            Top::Wall { .. } => Vec::new(),
        };
        Ok(Self {
            geom,
            torus,
            fft: Fft2::new(n),
            cells,
            ds: 1.0 / base as f64,
            top,
            depth: geom.omega.iter().map(|w| -w).collect(),
            symbols,
        })
    }

    fn n2(&self) -> usize {
        self.torus.len()
    }

    fn nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn len(&self) -> usize {
        (3 * self.nodes() + self.cells) * self.n2()
    }

    fn vel(&self, c: usize, k: usize) -> std::ops::Range<usize> {
        let o = (c * self.nodes() + k) * self.n2();
        o..o + self.n2()
    }

    fn pres(&self, m: usize) -> std::ops::Range<usize> {
        let o = (3 * self.nodes() + m) * self.n2();
        o..o + self.n2()
    }

    fn sigma(&self, k: f64) -> f64 {
        k * self.ds
    }

    fn dirichlet(&self, k: usize) -> bool {
        k == 0 || (k == self.cells && matches!(self.top, Top::Wall { .. }))
    }

    pub fn height(&self, idx: usize, sigma: f64) -> f64 {
        self.geom.height(idx, sigma)
    }

    /// Gradient data at the Gauss points of cell m, column idx:
    /// (weight, value, physical gradient) per point and component.
    #[inline]
    fn local(&self, x: &[f64], du: &[[Vec<f64>; 2]], m: usize, idx: usize) -> [(f64, [f64; 3], [[f64; 3]; 3], [f64; 2]); 2] {
        let d = self.depth[idx];
        let g = [self.geom.grad[0][idx], self.geom.grad[1][idx]];
        let nodes = self.nodes();
        let mut out = [(0.0, [0.0; 3], [[0.0; 3]; 3], [0.0; 2]); 2];
        for (q, &t) in GAUSS_T.iter().enumerate() {
            let sig = self.sigma(m as f64 + t);
            let s = [(sig - 1.0) * g[0] / d, (sig - 1.0) * g[1] / d];
            let mut val = [0.0; 3];
            let mut grad = [[0.0; 3]; 3];
            for c in 0..3 {
                let (lo, hi) = (x[self.vel(c, m)][idx], x[self.vel(c, m + 1)][idx]);
                let der = (hi - lo) / self.ds;
                val[c] = (1.0 - t) * lo + t * hi;
                let h = &du[c * nodes + m..];
                let d1 = (1.0 - t) * h[0][0][idx] + t * h[1][0][idx];
                let d2 = (1.0 - t) * h[0][1][idx] + t * h[1][1][idx];
                grad[c] = [d1 + s[0] * der, d2 + s[1] * der, der / d];
            }
            out[q] = (0.5 * d * self.ds, val, grad, s);
        }
        out
    }

    fn node_gradients(&self, x: &[f64]) -> Vec<[Vec<f64>; 2]> {
        (0..3 * self.nodes()).into_par_iter().map(|ck| grad2(&self.torus, &self.fft, &x[self.vel(ck / self.nodes(), ck % self.nodes())])).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n2 = self.n2();
        let nodes = self.nodes();
        let du = self.node_gradients(x);
        let cells: Vec<CellOut> = (0..self.cells)
            .into_par_iter()
            .map(|m| {
                let z = || vec![0.0; n2];
                let mut o = CellOut {
                    lo: [z(), z(), z()],
                    hi: [z(), z(), z()],
                    lo_h: [[z(), z()], [z(), z()], [z(), z()]],
                    hi_h: [[z(), z()], [z(), z()], [z(), z()]],
                    cont: z(),
                };
                let pr = &x[self.pres(m)];
                for idx in 0..n2 {
                    let d = self.depth[idx];
                    let p = pr[idx];
                    for (q, (w, val, grad, s)) in self.local(x, &du, m, idx).into_iter().enumerate() {
                        let t = GAUSS_T[q];
                        let div = grad[0][0] + grad[1][1] + grad[2][2];
                        let cor = [-val[1], val[0], 0.0];
                        o.cont[idx] -= w * div;
                        for c in 0..3 {
                            let mut f = [w * grad[c][0], w * grad[c][1], w * grad[c][2]];
                            f[c] -= w * p;
                            let dcoef = (f[0] * s[0] + f[1] * s[1] + f[2] / d) / self.ds;
                            o.lo[c][idx] += (1.0 - t) * w * cor[c] - dcoef;
                            o.hi[c][idx] += t * w * cor[c] + dcoef;
                            for i in 0..2 {
                                o.lo_h[c][i][idx] += (1.0 - t) * f[i];
                                o.hi_h[c][i][idx] += t * f[i];
                            }
                        }
                    }
                }
                o
            })
            .collect();
        let mut out = vec![0.0; self.len()];
        let vel_rows: Vec<Vec<f64>> = (0..3 * nodes)
            .into_par_iter()
            .map(|ck| {
                let (c, k) = (ck / nodes, ck % nodes);
                let mut v = vec![0.0; n2];
                let mut h = [vec![0.0; n2], vec![0.0; n2]];
                let mut add = |src: &[f64], hs: &[Vec<f64>; 2]| {
                    for i in 0..n2 {
                        v[i] += src[i];
                        h[0][i] += hs[0][i];
                        h[1][i] += hs[1][i];
                    }
                };
                if k < self.cells {
                    add(&cells[k].lo[c], &cells[k].lo_h[c]);
                }
                if k > 0 {
                    add(&cells[k - 1].hi[c], &cells[k - 1].hi_h[c]);
                }
                let adj = grad2_adjoint(&self.torus, &self.fft, &h[0], &h[1]);
                v.iter_mut().zip(&adj).for_each(|(a, b)| *a += b);
                v
            })
            .collect();
        for (ck, v) in vel_rows.into_iter().enumerate() {
            out[self.vel(ck / nodes, ck % nodes)].copy_from_slice(&v);
        }
        if self.top == Top::Transparent {
            let k = self.cells;
            let tr = self.top_dtn(&[&x[self.vel(0, k)], &x[self.vel(1, k)], &x[self.vel(2, k)]]);
            for c in 0..3 {
                out[self.vel(c, k)].iter_mut().zip(&tr[c]).for_each(|(a, b)| *a += b);
            }
        }
        for k in 0..nodes {
            if self.dirichlet(k) {
                for c in 0..3 {
                    let r = self.vel(c, k);
                    let src = x[r.clone()].to_vec();
                    out[r].copy_from_slice(&src);
                }
            }
        }
        for (m, cell) in cells.iter().enumerate() {
            out[self.pres(m)].copy_from_slice(&cell.cont);
        }
        if matches!(self.top, Top::Wall { .. }) {
            // a closed column fixes pressure only up to column constants on the
            // modes where the spectral gradient vanishes
            let n = self.torus.n;
            let mut s = self.fft.forward_real(&x[self.pres(0)]);
            for (i, z) in s.iter_mut().enumerate() {
                if !(self.torus.deriv_factor(i / n, i % n, 0).im == 0.0 && self.torus.deriv_factor(i / n, i % n, 1).im == 0.0) {
                    *z = C64::new(0.0, 0.0);
                }
            }
            let pin = self.fft.inverse_real(s).0;
            out[self.pres(0)].iter_mut().zip(&pin).for_each(|(v, q)| *v += q);
        }
        out
    }

    /// DtN traction of a top trace, per unit area.
    fn top_dtn(&self, v: &[&[f64]; 3]) -> [Vec<f64>; 3] {
        let spec: Vec<Vec<C64>> = v.iter().map(|f| self.fft.forward_real(f)).collect();
        let mut out = [vec![C64::new(0.0, 0.0); self.n2()], vec![C64::new(0.0, 0.0); self.n2()], vec![C64::new(0.0, 0.0); self.n2()]];
        for (idx, m) in self.symbols.iter().enumerate() {
            for i in 0..3 {
                out[i][idx] = m[(i, 0)] * spec[0][idx] + m[(i, 1)] * spec[1][idx] + m[(i, 2)] * spec[2][idx];
            }
        }
        out.map(|s| self.fft.inverse_real(s).0)
    }

    /// Right-hand side for the correction: ∫f·φ − ⟨F, φ⟩ on free rows, boundary values on Dirichlet rows.
    pub fn rhs(&self, forcing: &dyn Forcing) -> Vec<f64> {
        let n2 = self.n2();
        let nodes = self.nodes();
        let parts: Vec<([Vec<f64>; 3], [Vec<f64>; 3])> = (0..self.cells)
            .into_par_iter()
            .map(|m| {
                let mut lo = [vec![0.0; n2], vec![0.0; n2], vec![0.0; n2]];
                let mut hi = lo.clone();
                for idx in 0..n2 {
                    let w = 0.5 * self.depth[idx] * self.ds;
                    for &t in &GAUSS_T {
                        let f = forcing.body(idx, self.height(idx, self.sigma(m as f64 + t)));
                        for c in 0..3 {
                            lo[c][idx] += (1.0 - t) * w * f[c];
                            hi[c][idx] += t * w * f[c];
                        }
                    }
                }
                (lo, hi)
            })
            .collect();
        let mut b = vec![0.0; self.len()];
        for k in 0..nodes {
            for c in 0..3 {
                let r = self.vel(c, k);
                let row = &mut b[r];
                if k < self.cells {
                    row.iter_mut().zip(&parts[k].0[c]).for_each(|(a, v)| *a += v);
                }
                if k > 0 {
                    row.iter_mut().zip(&parts[k - 1].1[c]).for_each(|(a, v)| *a += v);
                }
                if k == self.cells && self.top == Top::Transparent {
                    row.iter_mut().zip(&forcing.top()[c]).for_each(|(a, v)| *a -= v);
                }
                if self.dirichlet(k) {
                    let s = self.sigma(k as f64);
                    for (idx, a) in row.iter_mut().enumerate() {
                        *a = if k == 0 { 0.0 } else { -forcing.offset(idx, self.height(idx, s))[c] };
                    }
                }
            }
        }
        b
    }

    /// Per-unit-area ∫|∇w|², ∫|w|², ∫p ∇·w and ⟨DtN w, w⟩.
    pub fn forms(&self, x: &[f64]) -> (f64, f64, f64, f64) {
        let n2 = self.n2();
        let du = self.node_gradients(x);
        let (g2, l2, pw) = (0..self.cells)
            .into_par_iter()
            .map(|m| {
                let mut acc = (0.0, 0.0, 0.0);
                let pr = &x[self.pres(m)];
                for idx in 0..n2 {
                    for (w, val, grad, _) in self.local(x, &du, m, idx) {
                        acc.0 += w * grad.iter().flatten().map(|v| v * v).sum::<f64>();
                        acc.1 += w * val.iter().map(|v| v * v).sum::<f64>();
                        acc.2 += w * pr[idx] * (grad[0][0] + grad[1][1] + grad[2][2]);
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        let dtn = if self.top == Top::Transparent {
            let k = self.cells;
            let v = [&x[self.vel(0, k)], &x[self.vel(1, k)], &x[self.vel(2, k)]];
            let t = self.top_dtn(&v);
            (0..3).map(|c| t[c].iter().zip(v[c]).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>()
        } else {
            0.0
        };
        let s = 1.0 / n2 as f64;
        (g2 * s, l2 * s, pw * s, dtn * s)
    }

    /// Velocity rows of `r` paired with `phi`, skipping Dirichlet rows, per unit area.
    pub fn pair_velocity(&self, r: &[f64], phi: &[f64]) -> f64 {
        let mut sum = 0.0;
        for k in (0..self.nodes()).filter(|k| !self.dirichlet(*k)) {
            for c in 0..3 {
                let rg = self.vel(c, k);
                sum += r[rg.clone()].iter().zip(&phi[rg]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        sum / self.n2() as f64
    }

    fn unpack(&self, x: &[f64], forcing: &dyn Forcing) -> (FieldGrid, FieldGrid) {
        let n2 = self.n2();
        let sigma: Vec<f64> = (0..self.nodes()).map(|k| self.sigma(k as f64)).collect();
        let mut vel = FieldGrid::zeros(self.torus, sigma.clone(), &["u1", "u2", "u3"]);
        for (k, &s) in sigma.iter().enumerate() {
            for idx in 0..n2 {
                let off = forcing.offset(idx, self.height(idx, s));
                for c in 0..3 {
                    vel.data[c][k * n2 + idx] = x[self.vel(c, k)][idx] + off[c];
                }
            }
        }
        let centres: Vec<f64> = sigma.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut pres = FieldGrid::zeros(self.torus, centres, &["p"]);
        for m in 0..self.cells {
            pres.data[0][m * n2..(m + 1) * n2].copy_from_slice(&x[self.pres(m)]);
        }
        (vel, pres)
    }

    fn pack(&self, vel: &FieldGrid, pres: &FieldGrid, forcing: &dyn Forcing) -> Vec<f64> {
        let n2 = self.n2();
        let mut x = vec![0.0; self.len()];
        for k in 0..self.nodes() {
            let s = self.sigma(k as f64);
            for idx in 0..n2 {
                let off = forcing.offset(idx, self.height(idx, s));
                for c in 0..3 {
                    x[self.vel(c, k).start + idx] = vel.data[c][k * n2 + idx] - off[c];
                }
            }
        }
        for m in 0..self.cells {
            x[self.pres(m)].copy_from_slice(&pres.data[0][m * n2..(m + 1) * n2]);
        }
        x
    }
}

/// Exact inverse of the operator with the bottom flattened to its mean depth,
/// which is diagonal in horizontal frequency and banded in the column.
pub(crate) struct FlatPreconditioner<'a> {
    op: &'a Operator<'a>,
    blocks: Vec<BandMatrix>,
}

impl<'a> FlatPreconditioner<'a> {
    pub fn new(op: &'a Operator<'a>) -> Result<Self> {
        let t = op.torus;
        let n = t.n;
        let d = op.geom.mean_depth();
        let blocks = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let mut m = flat_block(op, idx / n, idx % n, d);
                if m.factor() { Ok(m) } else { Err(Error::Numerical(format!("singular column block at index {idx}"))) }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { op, blocks })
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let op = self.op;
        let (n2, nodes, cells) = (op.n2(), op.nodes(), op.cells);
        let slots = 3 * nodes + cells;
        let range = |s: usize| if s < 3 * nodes { op.vel(s / nodes, s % nodes) } else { op.pres(s - 3 * nodes) };
        let pos = |s: usize| if s < 3 * nodes { 4 * (s % nodes) + s / nodes } else { 4 * (s - 3 * nodes) + 3 };
        let spec: Vec<Vec<C64>> = (0..slots).into_par_iter().map(|s| op.fft.forward_real(&r[range(s)])).collect();
        let size = 4 * cells + 3;
        let sols: Vec<Vec<C64>> = (0..n2)
            .into_par_iter()
            .map(|idx| {
                let mut b = vec![C64::new(0.0, 0.0); size];
                for s in 0..slots {
                    b[pos(s)] = spec[s][idx];
                }
                self.blocks[idx].solve(&mut b);
                b
            })
            .collect();
        let fields: Vec<Vec<f64>> =
            (0..slots).into_par_iter().map(|s| op.fft.inverse_real(sols.iter().map(|v| v[pos(s)]).collect()).0).collect();
        let mut out = vec![0.0; r.len()];
        for (s, f) in fields.into_iter().enumerate() {
            out[range(s)].copy_from_slice(&f);
        }
        out
    }
}

/// Column matrix of the constant-depth operator at grid index (a, b), ordered
/// (u₁, u₂, u₃, p) per node with p of the cell above.
fn flat_block(op: &Operator, a: usize, b: usize, d: f64) -> BandMatrix {
    let t = &op.torus;
    let cells = op.cells;
    let ds = op.ds;
    let size = 4 * cells + 3;
    let mut m = BandMatrix::zeros(size, 6, 6);
    let dv = [t.deriv_factor(a, b, 0), t.deriv_factor(a, b, 1)];
    let k2 = dv[0].norm_sqr() + dv[1].norm_sqr();
    let u = |c: usize, k: usize| 4 * k + c;
    let mass = [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]];
    let stiff = [[1.0, -1.0], [-1.0, 1.0]];
    let r = |x: f64| C64::new(x, 0.0);
    for cell in 0..cells {
        let p = 4 * cell + 3;
        for al in 0..2 {
            for be in 0..2 {
                let (ka, kb) = (cell + al, cell + be);
                let me = d * ds * mass[al][be];
                for c in 0..3 {
                    m.add(u(c, ka), u(c, kb), r(k2 * me + stiff[al][be] / (d * ds)));
                }
                m.add(u(0, ka), u(1, kb), r(-me));
                m.add(u(1, ka), u(0, kb), r(me));
            }
            let k = cell + al;
            for c in 0..2 {
                m.add(u(c, k), p, dv[c] * (0.5 * d * ds));
                m.add(p, u(c, k), -dv[c] * (0.5 * d * ds));
            }
            let sgn = if al == 0 { 1.0 } else { -1.0 };
            m.add(u(2, k), p, r(sgn));
            m.add(p, u(2, k), r(sgn));
        }
    }
    if op.top == Top::Transparent {
        let sym = &op.symbols[a * t.n + b];
        for i in 0..3 {
            for j in 0..3 {
                m.add(u(i, cells), u(j, cells), sym[(i, j)]);
            }
        }
    }
    if matches!(op.top, Top::Wall { .. }) && k2 == 0.0 {
        m.add(3, 3, r(1.0));
    }
    for k in 0..=cells {
        if op.dirichlet(k) {
            for c in 0..3 {
                m.set_identity_row(u(c, k));
            }
        }
    }
    m
}

/// Terms of ∫|∇w|² + ⟨DtN w, w⟩ − ∫p∇·w = ∫f·w − ⟨F, w⟩ for a converged correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBalance {
    pub dirichlet: f64,
    pub dtn: f64,
    pub pressure_work: f64,
    pub source: f64,
}

impl EnergyBalance {
    pub fn identity_gap(&self) -> f64 {
        self.dirichlet + self.dtn - self.pressure_work - self.source
    }

    /// ∫|∇w|² ≤ ∫f·w − ⟨F, w⟩ up to `tol` relative to the largest term.
    pub fn inequality_holds(&self, tol: f64) -> bool {
        let scale = self.dirichlet.abs().max(self.dtn.abs()).max(self.source.abs());
        self.dtn >= -tol * scale && self.dirichlet <= self.source + self.pressure_work + tol * scale
    }
}

fn balance(op: &Operator, x: &[f64], b: &[f64]) -> EnergyBalance {
    let (g2, _, pw, dtn) = op.forms(x);
    EnergyBalance { dirichlet: g2, dtn, pressure_work: pw, source: op.pair_velocity(b, x) }
}

/// Solves for the correction w driven by `forcing` and returns u = w + offset.
pub fn solve_forced(geometry: &ChannelGeometry, forcing: &dyn Forcing, options: &SolverOptions) -> Result<ChannelSolution> {
    let op = Operator::new(geometry, options.top)?;
    let pre = FlatPreconditioner::new(&op)?;
    let b = op.rhs(forcing);
    let mut x = vec![0.0; op.len()];
    let rep = gmres(&|v| op.apply(v), &|v| pre.apply(v), &b, &mut x, options.tolerance, options.restart, options.max_iterations)?;
    let (velocity, pressure) = op.unpack(&x, forcing);
    let n2 = geometry.torus.len();
    let kt = geometry.cells();
    let trace = std::array::from_fn(|c| velocity.data[c][kt * n2..(kt + 1) * n2].to_vec());
    let energy = (options.top == Top::Transparent).then(|| balance(&op, &x, &b));
    Ok(ChannelSolution {
        geometry: geometry.clone(),
        top: options.top,
        velocity,
        pressure,
        trace,
        diagnostics: Diagnostics {
            iterations: rep.iterations,
            relative_residual: *rep.history.last().unwrap_or(&0.0),
            history: rep.history,
            warnings: Vec::new(),
            energy,
        },
        exact: None,
    })
}

/// Bumpy channel with the transparent top condition.
pub fn solve_channel_bumpy(problem: &ChannelProblem, tolerance: f64) -> Result<ChannelSolution> {
    solve_forced(&problem.geometry, &problem.lift, &SolverOptions { tolerance, ..Default::default() })
}

/// Reference solve with the column extended by `extra_cells` and u = 0 on the cap.
pub fn solve_capped(problem: &ChannelProblem, extra_cells: usize, options: &SolverOptions) -> Result<ChannelSolution> {
    solve_forced(&problem.geometry, &problem.lift, &SolverOptions { top: Top::Wall { extra_cells }, ..*options })
}

fn check_test_field(op: &Operator, geometry: &ChannelGeometry, test: &FieldGrid) -> Result<Vec<f64>> {
    let n2 = geometry.torus.len();
    let nodes = op.nodes();
    if test.torus != geometry.torus || test.levels.len() != nodes || test.data.len() != 3 {
        return Err(Error::Precondition(format!("test field must have 3 components on {nodes} σ nodes")));
    }
    let size = test.max_abs();
    let bottom = (0..3).flat_map(|c| test.data[c][..n2].iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    if bottom > 1e-12 * size.max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition(format!("test field does not vanish on the bottom (max {bottom:.3e})")));
    }
    let mut x = vec![0.0; op.len()];
    for k in 0..nodes {
        for c in 0..3 {
            x[op.vel(c, k)].copy_from_slice(&test.data[c][k * n2..(k + 1) * n2]);
        }
    }
    let (g2, _, _, _) = op.forms(&x);
    let ax = op.apply(&x);
    let mut div2 = 0.0;
    for m in 0..op.cells {
        for (idx, v) in ax[op.pres(m)].iter().enumerate() {
            // −∫ div over the cell, per column
            let vol = op.depth[idx] * op.ds;
            div2 += v * v / vol;
        }
    }
    let rel = (div2 / n2 as f64).sqrt() / g2.sqrt().max(f64::MIN_POSITIVE);
    if rel > DIV_TOL {
        return Err(Error::Precondition(format!("test field is not divergence-free (relative divergence {rel:.3e})")));
    }
    Ok(x)
}

/// Weak-form residual ∫∇w:∇φ + ∫e₃×w·φ + ⟨DtN w, φ⟩ − ∫p∇·φ − ∫f·φ + ⟨F, φ⟩
/// per unit area, for a test field sampled on the σ nodes of the solution.
///
/// The pressure pairing vanishes for solenoidal φ; keeping it makes the value
/// the exact discrete residual rather than one polluted by the O(Δσ²)
/// divergence of a sampled φ.
pub fn weak_residual(solution: &ChannelSolution, forcing: &dyn Forcing, test: &FieldGrid) -> Result<f64> {
    let op = Operator::new(&solution.geometry, solution.top)?;
    let phi = check_test_field(&op, &solution.geometry, test)?;
    let x = op.pack(&solution.velocity, &solution.pressure, forcing);
    let ax = op.apply(&x);
    let b = op.rhs(forcing);
    let r: Vec<f64> = ax.iter().zip(&b).map(|(a, b)| a - b).collect();
    Ok(op.pair_velocity(&r, &phi))
}

/// Energy balance of the correction of a solution (transparent top only).
pub fn energy_balance(solution: &ChannelSolution, forcing: &dyn Forcing) -> Result<EnergyBalance> {
    if solution.top != Top::Transparent {
        return Err(Error::Precondition("energy balance needs the transparent top".into()));
    }
    let op = Operator::new(&solution.geometry, solution.top)?;
    let x = op.pack(&solution.velocity, &solution.pressure, forcing);
    Ok(balance(&op, &x, &op.rhs(forcing)))
}

/// (∫|∇φ|² + |φ|²)^{1/2} per unit area for a field on the σ nodes of `geometry`.
pub fn h1_norm(geometry: &ChannelGeometry, field: &FieldGrid) -> Result<f64> {
    let op = Operator::new(geometry, Top::Wall { extra_cells: field.levels.len().saturating_sub(geometry.n_v) })?;
    let n2 = geometry.torus.len();
    if field.levels.len() != op.nodes() || field.data.len() < 3 {
        return Err(Error::Input("field does not match the mapped grid".into()));
    }
    let mut x = vec![0.0; op.len()];
    for k in 0..op.nodes() {
        for c in 0..3 {
            x[op.vel(c, k)].copy_from_slice(&field.data[c][k * n2..(k + 1) * n2]);
        }
    }
    let (g2, l2, _, _) = op.forms(&x);
    Ok((g2 + l2).sqrt())
}
