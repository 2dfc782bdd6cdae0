//! Exact per-frequency solve in the flat channel −d < x₃ < 0.
//!
//! Modes e^{−λx₃} with all six roots ±λ_k. Decaying modes are normalised at the
//! bottom, growing ones at the top, so every profile is bounded by one. Rows are
//! written in the basis (v₃, iξ·v_h, −iξ⊥·v_h) in which a mode with exponent μ
//! has velocity (1, μ, μ/w) and traction (|ξ|²/μ, μ², μ²/w).

use nalgebra::{Matrix4, SMatrix, SVector, Vector4};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{ChannelGeometry, ChannelSolution, Diagnostics, Top};
use crate::dtn_operator::{dtn_symbol, mbar_h, CMat3};
use crate::error::{Error, Result};
use crate::grid::{Fft2, FieldGrid, Torus};
use crate::halfspace_solver::{check_fields, mode_rhs, CVec3, TRACE_TOL};
use crate::numerics::cdot2;
use crate::spectral_core::{characteristic_roots, Frequency, SpectralRoots};

type CMat6 = SMatrix<C64, 6, 6>;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Condition number of the equilibrated 6×6 system above which a warning is recorded.
pub const CONDITION_WARNING: f64 = 1e12;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn exp_c(z: C64) -> C64 {
    C64::from_polar(z.re.exp(), z.im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModes {
    pub xi: Frequency,
    pub depth: f64,
    pub roots: SpectralRoots,
    /// amplitudes of e^{−λ_k(x₃+d)} (k < 3) and e^{λ_k x₃} (k ≥ 3)
    pub coeffs: [C64; 6],
    pub condition: f64,
}

impl ChannelModes {
    fn exponent(&self, k: usize) -> C64 {
        if k < 3 { self.roots.lambda[k] } else { -self.roots.lambda[k - 3] }
    }

    fn w(&self, k: usize) -> C64 {
        self.roots.w[k % 3]
    }

    fn profile(&self, k: usize, x3: f64) -> C64 {
        let l = self.roots.lambda[k % 3];
        if k < 3 { exp_c(-l * (x3 + self.depth)) } else { exp_c(l * x3) }
    }

    fn check(&self, x3: f64) -> Result<()> {
        if !(x3 >= -self.depth * (1.0 + 1e-14) && x3 <= 0.0) {
            return Err(Error::Domain(format!("x3 = {x3} outside the channel (−{}, 0)", self.depth)));
        }
        Ok(())
    }

    fn to_physical(&self, r: [C64; 3]) -> CVec3 {
        let xi = &self.xi;
        let s = xi.modulus_sq();
        let p = xi.perp();
        [I / s * (-r[1] * xi.xi1 + r[2] * p.xi1), I / s * (-r[1] * xi.xi2 + r[2] * p.xi2), r[0]]
    }

    fn sums(&self, amp: &[C64; 6]) -> [C64; 3] {
        let one = [c(1.0); 6];
        let mu: [C64; 6] = std::array::from_fn(|k| self.exponent(k));
        let g: [C64; 6] = std::array::from_fn(|k| self.exponent(k) / self.w(k));
        [cdot2(amp, &one), cdot2(amp, &mu), cdot2(amp, &g)]
    }

    /// Velocity, its vertical derivative and pressure at height x₃ ∈ [−d, 0].
    pub fn evaluate(&self, x3: f64) -> Result<(CVec3, CVec3, C64)> {
        self.check(x3)?;
        let amp: [C64; 6] = std::array::from_fn(|k| self.coeffs[k] * self.profile(k, x3));
        let damp: [C64; 6] = std::array::from_fn(|k| -self.exponent(k) * amp[k]);
        let p = (0..6).map(|k| amp[k] * self.w(k) / self.exponent(k)).sum();
        Ok((self.to_physical(self.sums(&amp)), self.to_physical(self.sums(&damp)), p))
    }

    /// −∂₃u + pe₃ at x₃ = 0 from the mode tractions.
    pub fn traction_top(&self) -> CVec3 {
        let s = self.xi.modulus_sq();
        let mut r = [c(0.0); 3];
        for k in 0..6 {
            let (mu, w) = (self.exponent(k), self.w(k));
            let a = self.coeffs[k] * self.profile(k, 0.0);
            r[0] += a * s / mu;
            r[1] += a * mu * mu;
            r[2] += a * mu * mu / w;
        }
        self.to_physical(r)
    }
}

/// R M_SC R⁻¹ with R v = (v₃, iξ·v_h, −iξ⊥·v_h).
fn dtn_in_mode_basis(xi: &Frequency) -> Result<CMat3> {
    let m = dtn_symbol(xi)?;
    let s = xi.modulus_sq();
    let p = xi.perp();
    let r = CMat3::new(c(0.0), c(0.0), c(1.0), I * xi.xi1, I * xi.xi2, c(0.0), -I * p.xi1, -I * p.xi2, c(0.0));
    let k = -I / s;
    let rinv = CMat3::new(c(0.0), k * xi.xi1, -k * p.xi1, c(0.0), k * xi.xi2, -k * p.xi2, c(1.0), c(0.0), c(0.0));
    Ok(r * m * rinv)
}

/// Six-mode solve at ξ ≠ 0: Dirichlet rows at x₃ = −d, traction-minus-DtN rows at x₃ = 0.
pub fn channel_modes(xi: &Frequency, depth: f64, v0hat: &CVec3) -> Result<ChannelModes> {
    if xi.is_zero() {
        return Err(Error::SingularFrequency);
    }
    if !(depth > 0.0) {
        return Err(Error::Domain(format!("depth {depth} must be positive")));
    }
    let roots = characteristic_roots(xi);
    let mt = dtn_in_mode_basis(xi)?;
    let r = xi.modulus();
    let s = xi.modulus_sq();
    let mut me = ChannelModes { xi: *xi, depth, roots, coeffs: [c(0.0); 6], condition: 1.0 };
    let mut raw = CMat6::zeros();
    let mut red = CMat6::zeros();
    for k in 0..6 {
        let (mu, w) = (me.exponent(k), me.w(k));
        let (eb, et) = (me.profile(k, -depth), me.profile(k, 0.0));
        let vel = [c(1.0), mu, mu / w];
        let tr = [s / mu, mu * mu, mu * mu / w];
        for i in 0..3 {
            raw[(i, k)] = vel[i] * eb;
            let dtn = mt[(i, 0)] * vel[0] + mt[(i, 1)] * vel[1] + mt[(i, 2)] * vel[2];
            raw[(3 + i, k)] = (tr[i] - dtn) * et;
        }
        // μ − |ξ| without cancellation for the decaying modes
        let shifted = if k < 3 { -w / (mu + r) } else { mu - r };
        for i in 0..6 {
            red[(i, k)] = raw[(i, k)];
        }
        red[(1, k)] = shifted * eb;
    }
    let mut scale = [1.0; 6];
    for (i, sc) in scale.iter_mut().enumerate() {
        let m = (0..6).map(|k| red[(i, k)].norm()).fold(0.0, f64::max);
        *sc = if m > 0.0 { 1.0 / m } else { 1.0 };
        for k in 0..6 {
            red[(i, k)] *= *sc;
        }
    }
    let sv = red.singular_values();
    me.condition = sv.max() / sv.min();
    let lu = red.full_piv_lu();
    let solve = |b: &[C64; 6]| -> Result<[C64; 6]> {
        let mut v = SVector::<C64, 6>::from_fn(|i, _| b[i]);
        v[1] -= b[0] * r;
        for i in 0..6 {
            v[i] *= scale[i];
        }
        let x = lu.solve(&v).ok_or_else(|| Error::Numerical("singular channel system".into()))?;
        Ok(std::array::from_fn(|k| x[k]))
    };
    let h = mode_rhs(xi, v0hat);
    let b = [h[0], h[1], h[2], c(0.0), c(0.0), c(0.0)];
    let mut x = solve(&b)?;
    for _ in 0..2 {
        let res: [C64; 6] = std::array::from_fn(|i| {
            let mut vals = vec![b[i]];
            let mut row = vec![c(1.0)];
            for k in 0..6 {
                vals.push(-x[k]);
                row.push(raw[(i, k)]);
            }
            cdot2(&vals, &row)
        });
        let d = solve(&res)?;
        for k in 0..6 {
            x[k] += d[k];
        }
    }
    me.coeffs = x;
    Ok(me)
}

/// Ekman problem at ξ = 0: w = û₁ + iû₂ solves w'' = iw and z = û₁ − iû₂ solves
/// z'' = −iz, with Dirichlet data at −d and −∂₃û_h = M̄_h û_h at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct EkmanChannel {
    pub depth: f64,
    /// amplitudes of e^{−a(x₃+d)}, e^{a x₃} for w (a = e^{iπ/4}), then of the same with ā for z
    pub coeffs: [C64; 4],
}

impl EkmanChannel {
    fn rates() -> [C64; 4] {
        let a = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        [a, a, a.conj(), a.conj()]
    }

    fn terms(&self, x3: f64) -> ([C64; 4], [C64; 4]) {
        let r = Self::rates();
        let val: [C64; 4] = std::array::from_fn(|k| {
            if k % 2 == 0 { exp_c(-r[k] * (x3 + self.depth)) } else { exp_c(r[k] * x3) }
        });
        let der: [C64; 4] = std::array::from_fn(|k| if k % 2 == 0 { -r[k] * val[k] } else { r[k] * val[k] });
        (val, der)
    }

    fn horizontal(wz: [C64; 2]) -> [C64; 2] {
        [(wz[0] + wz[1]) * 0.5, (wz[0] - wz[1]) / (2.0 * I)]
    }

    fn combine(&self, t: &[C64; 4]) -> [C64; 2] {
        Self::horizontal([self.coeffs[0] * t[0] + self.coeffs[1] * t[1], self.coeffs[2] * t[2] + self.coeffs[3] * t[3]])
    }

    pub fn solve(depth: f64, vh: [C64; 2]) -> Result<Self> {
        let mut me = Self { depth, coeffs: [c(0.0); 4] };
        let mb = mbar_h();
        let mut a = Matrix4::<C64>::zeros();
        let mut rhs = Vector4::<C64>::zeros();
        for k in 0..4 {
            let mut e = [c(0.0); 4];
            e[k] = c(1.0);
            me.coeffs = e;
            let (vb, _) = me.terms(-depth);
            let ub = me.combine(&vb);
            let (v0, d0) = me.terms(0.0);
            let (u0, du0) = (me.combine(&v0), me.combine(&d0));
            a[(0, k)] = ub[0];
            a[(1, k)] = ub[1];
            for i in 0..2 {
                a[(2 + i, k)] = -du0[i] - (mb[(i, 0)] * u0[0] + mb[(i, 1)] * u0[1]);
            }
        }
        rhs[0] = vh[0];
        rhs[1] = vh[1];
        let x = a.full_piv_lu().solve(&rhs).ok_or_else(|| Error::Numerical("singular Ekman channel system".into()))?;
        me.coeffs = [x[0], x[1], x[2], x[3]];
        Ok(me)
    }

    pub fn velocity(&self, x3: f64) -> (CVec3, CVec3) {
        let (v, d) = self.terms(x3);
        let (u, du) = (self.combine(&v), self.combine(&d));
        ([u[0], u[1], c(0.0)], [du[0], du[1], c(0.0)])
    }

    pub fn traction_top(&self) -> CVec3 {
        let (_, du) = self.velocity(0.0);
        [-du[0], -du[1], c(0.0)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Zero(EkmanChannel),
    /// one solve per Nyquist alias
    Modes(Vec<ChannelModes>),
}

impl Column {
    /// (u, ∂₃u, p) averaged over aliases.
    fn evaluate(&self, x3: f64) -> Result<(CVec3, CVec3, C64)> {
        match self {
            Column::Zero(e) => {
                let (u, du) = e.velocity(x3);
                Ok((u, du, c(0.0)))
            }
            Column::Modes(ms) => {
                let w = 1.0 / ms.len() as f64;
                let mut out = ([c(0.0); 3], [c(0.0); 3], c(0.0));
                for m in ms {
                    let (u, du, p) = m.evaluate(x3)?;
                    for i in 0..3 {
                        out.0[i] += u[i] * w;
                        out.1[i] += du[i] * w;
                    }
                    out.2 += p * w;
                }
                Ok(out)
            }
        }
    }

    fn traction_top(&self) -> CVec3 {
        match self {
            Column::Zero(e) => e.traction_top(),
            Column::Modes(ms) => {
                let w = 1.0 / ms.len() as f64;
                let mut t = [c(0.0); 3];
                for m in ms {
                    let v = m.traction_top();
                    for i in 0..3 {
                        t[i] += v[i] * w;
                    }
                }
                t
            }
        }
    }
}

/// Per-frequency flat-channel solution over a torus.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatChannel {
    pub torus: Torus,
    pub depth: f64,
    pub columns: Vec<Column>,
}

impl FlatChannel {
    pub fn solve(torus: Torus, depth: f64, u0: &[Vec<f64>; 3]) -> Result<(Self, Vec<String>)> {
        check_fields(&torus, u0)?;
        let size = u0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let mean = u0[2].iter().sum::<f64>() / torus.len() as f64;
        if mean.abs() > TRACE_TOL * size.max(f64::MIN_POSITIVE) {
            return Err(Error::Compatibility { mean });
        }
        let fft = Fft2::new(torus.n);
        let spec: Vec<Vec<C64>> = u0.iter().map(|f| fft.forward_real(f)).collect();
        let n = torus.n;
        let columns = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let v = [spec[0][idx], spec[1][idx], spec[2][idx]];
                if idx == 0 {
                    return Ok(Column::Zero(EkmanChannel::solve(depth, [v[0], v[1]])?));
                }
                let ms = torus.aliases(idx / n, idx % n).iter().map(|xi| channel_modes(xi, depth, &v)).collect::<Result<_>>()?;
                Ok(Column::Modes(ms))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut warnings = Vec::new();
        for col in &columns {
            if let Column::Modes(ms) = col {
                for m in ms.iter().filter(|m| m.condition > CONDITION_WARNING) {
                    warnings.push(format!(
                        "ill-conditioned channel system at ξ = ({:.6}, {:.6}): condition {:.3e}",
                        m.xi.xi1, m.xi.xi2, m.condition
                    ));
                }
            }
        }
        Ok((Self { torus, depth, columns }, warnings))
    }

    fn synthesize(&self, f: impl Fn(&Column) -> Result<[C64; 4]> + Sync + Send) -> Result<[Vec<f64>; 4]> {
        let vals = self.columns.par_iter().map(f).collect::<Result<Vec<_>>>()?;
        let fft = Fft2::new(self.torus.n);
        Ok(std::array::from_fn(|c| fft.inverse_real(vals.iter().map(|v| v[c]).collect()).0))
    }

    /// u1, u2, u3, p at the given heights in [−d, 0].
    pub fn field(&self, levels: &[f64]) -> Result<FieldGrid> {
        let mut g = FieldGrid::zeros(self.torus, levels.to_vec(), &["u1", "u2", "u3", "p"]);
        for (l, &x) in levels.iter().enumerate() {
            let comps = self.synthesize(|col| {
                let (u, _, p) = col.evaluate(x)?;
                Ok([u[0], u[1], u[2], p])
            })?;
            for (cix, v) in comps.iter().enumerate() {
                g.level_slice_mut(cix, l).copy_from_slice(v);
            }
        }
        Ok(g)
    }

    pub fn trace(&self) -> Result<[Vec<f64>; 3]> {
        let [a, b, c3, _] = self.synthesize(|col| {
            let (u, _, _) = col.evaluate(0.0)?;
            Ok([u[0], u[1], u[2], c(0.0)])
        })?;
        Ok([a, b, c3])
    }

    /// −∂₃u + pe₃ on x₃ = 0 from the channel side.
    pub fn traction_top(&self) -> Result<[Vec<f64>; 3]> {
        let [a, b, c3, _] = self.synthesize(|col| {
            let t = col.traction_top();
            Ok([t[0], t[1], t[2], c(0.0)])
        })?;
        Ok([a, b, c3])
    }
}

/// Exact flat-bottom channel solve, sampled on the mapped grid of `geometry`.
pub fn solve_channel_flat(geometry: &ChannelGeometry, u0: &[Vec<f64>; 3]) -> Result<ChannelSolution> {
    if !geometry.is_flat() {
        return Err(Error::Geometry("solve_channel_flat needs a constant bottom".into()));
    }
    let depth = geometry.mean_depth();
    let (exact, warnings) = FlatChannel::solve(geometry.torus, depth, u0)?;
    let sigma = geometry.sigma_nodes();
    let heights: Vec<f64> = sigma.iter().map(|s| -depth * (1.0 - s)).collect();
    let full = exact.field(&heights)?;
    let mut velocity = FieldGrid::zeros(geometry.torus, sigma.clone(), &["u1", "u2", "u3"]);
    velocity.data = full.data[..3].to_vec();
    let centres: Vec<f64> = sigma.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let ph: Vec<f64> = centres.iter().map(|s| -depth * (1.0 - s)).collect();
    let mut pressure = FieldGrid::zeros(geometry.torus, centres, &["p"]);
    pressure.data = vec![exact.field(&ph)?.data[3].clone()];
    let trace = exact.trace()?;
    Ok(ChannelSolution {
        geometry: geometry.clone(),
        top: Top::Transparent,
        velocity,
        pressure,
        trace,
        diagnostics: Diagnostics { warnings, ..Default::default() },
        exact: Some(exact),
    })
}
