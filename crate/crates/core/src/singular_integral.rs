//! Real-space form of the low-frequency multipliers ξᵢξⱼ/|ξ|.
//!
//! With F⁻¹ = (2π)⁻²∫e^{ix·ξ}(·)dξ one has F⁻¹(1/|ξ|) = C_I/|x|, C_I = 1/(2π), and
//! γᵢⱼ = −∂ᵢ∂ⱼ(C_I/|x|) = C_I(δᵢⱼ/|x|³ − 3xᵢxⱼ/|x|⁵). For smooth φ,
//!
//!   Op(ξᵢξⱼ/|ξ|)φ(x) = −∫ γᵢⱼ(x−y){φ(x) − φ(y) − ∇φ(x)·(x−y)𝟙_{|x−y|≤K}} dy
//!
//! for every K > 0.
//!
//! Fields live on a torus and are band-limited by the cutoff, so the integral is
//! evaluated by applying the quadrature to each Fourier mode e^{iξ·x}: the nodes
//! depend only on z = x − y, and the sum over modes is finite.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dtn_operator::standard_cutoff;
use crate::error::{Error, Result};
use crate::grid::{Fft2, Torus};
use crate::numerics::gauss_legendre;
use crate::spectral_core::Frequency;

/// Constant of F⁻¹(1/|ξ|) = C_I/|x| in the convention above.
pub const C_I: f64 = 1.0 / (2.0 * PI);

/// γᵢⱼ(x) for i, j ∈ {0, 1}.
pub fn kernel_gamma(i: usize, j: usize, x: [f64; 2]) -> Result<f64> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return Err(Error::Domain("kernel is singular at the origin".into()));
    }
    if i > 1 || j > 1 {
        return Err(Error::Input(format!("kernel index ({i}, {j}) out of range")));
    }
    let r = r2.sqrt();
    let d = if i == j { 1.0 } else { 0.0 };
    Ok(C_I * (d / (r2 * r) - 3.0 * x[i] * x[j] / (r2 * r2 * r)))
}

/// Mean of γᵢⱼ over the circle of radius r, by the n-point trapezoid rule.
pub fn gamma_angular_mean(i: usize, j: usize, r: f64, n: usize) -> Result<f64> {
    let mut s = 0.0;
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        s += kernel_gamma(i, j, [r * t.cos(), r * t.sin()])?;
    }
    Ok(s / n as f64)
}

/// L(ξ) = Σ aᵢⱼ ξᵢξⱼ/|ξ|.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderOneMultiplier {
    pub a: [[f64; 2]; 2],
}

impl OrderOneMultiplier {
    pub fn new(a: [[f64; 2]; 2]) -> Self {
        Self { a }
    }

    /// The multiplier ξᵢξⱼ/|ξ|.
    pub fn entry(i: usize, j: usize) -> Self {
        let mut a = [[0.0; 2]; 2];
        a[i][j] = 1.0;
        Self { a }
    }

    pub fn symbol(&self, xi: &Frequency) -> f64 {
        let r = xi.modulus();
        if r == 0.0 {
            return 0.0;
        }
        let x = [xi.xi1, xi.xi2];
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.a[i][j] * x[i] * x[j];
            }
        }
        s / r
    }

    /// True when L vanishes identically, the only case where the quadratic form
    /// over |ξ| is a polynomial.
    pub fn is_polynomial(&self) -> bool {
        self.a[0][0] == 0.0 && self.a[1][1] == 0.0 && self.a[0][1] + self.a[1][0] == 0.0
    }

    /// Coefficients on the symmetric basis (ξ₁², ξ₁ξ₂, ξ₂²)/|ξ|.
    fn basis(&self) -> [f64; 3] {
        [self.a[0][0], self.a[0][1] + self.a[1][0], self.a[1][1]]
    }
}

/// φ = ρ∗g on a torus, ρ̂ the standard cutoff, with the bounds used by the
/// interpolation estimate.
#[derive(Clone, Debug)]
pub struct SmoothedField {
    pub torus: Torus,
    pub values: Vec<f64>,
    pub spectrum: Vec<C64>,
    /// sup |φ| on the grid
    pub sup: f64,
    /// sup of the Frobenius norm of ∇²φ on the grid
    pub hessian_sup: f64,
}

impl SmoothedField {
    pub fn new(torus: Torus, g: &[f64]) -> Result<Self> {
        if g.len() != torus.len() {
            return Err(Error::Input(format!("field has {} samples, grid needs {}", g.len(), torus.len())));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite sample".into()));
        }
        let kmax = 2.0 * PI * (torus.n / 2) as f64 / torus.period;
        if kmax <= 2.0 {
            return Err(Error::Input(format!("grid resolves |xi| <= {kmax:.3}, the cutoff needs 2")));
        }
        let fft = Fft2::new(torus.n);
        let mut spec = fft.forward_real(g);
        let n = torus.n;
        for a in 0..n {
            for b in 0..n {
                spec[a * n + b] *= standard_cutoff(torus.frequency(a, b).modulus());
            }
        }
        Ok(Self::from_spectrum(torus, spec))
    }

    /// Field with the given (already band-limited) spectrum.
    pub fn from_spectrum(torus: Torus, spectrum: Vec<C64>) -> Self {
        let n = torus.n;
        let fft = Fft2::new(n);
        let (values, _) = fft.inverse_real(spectrum.clone());
        let deriv = |i: usize, j: usize| {
            let s: Vec<C64> = (0..n * n)
                .map(|p| spectrum[p] * torus.deriv_factor(p / n, p % n, i) * torus.deriv_factor(p / n, p % n, j))
                .collect();
            fft.inverse_real(s).0
        };
        let (h11, h12, h22) = (deriv(0, 0), deriv(0, 1), deriv(1, 1));
        let hessian_sup = (0..n * n)
            .map(|p| (h11[p] * h11[p] + 2.0 * h12[p] * h12[p] + h22[p] * h22[p]).sqrt())
            .fold(0.0, f64::max);
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self { torus, values, spectrum, sup, hessian_sup }
    }

    /// ∂ₖφ as a smoothed field.
    pub fn derivative(&self, axis: usize) -> Self {
        let n = self.torus.n;
        let s = (0..n * n).map(|p| self.spectrum[p] * self.torus.deriv_factor(p / n, p % n, axis)).collect();
        Self::from_spectrum(self.torus, s)
    }
}

/// Quadrature parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureRule {
    /// Gauss-Legendre nodes on [0, K]
    pub inner_nodes: usize,
    /// far-field truncation radius
    pub r_max: f64,
    /// radial panel width in the far field
    pub panel: f64,
    /// Gauss-Legendre nodes per panel
    pub panel_nodes: usize,
    /// tolerance on the gap between the rule and its coarsened copy
    pub tol: f64,
}

impl QuadratureRule {
    /// Far field truncated at eight torus periods.
    pub fn for_torus(torus: &Torus) -> Self {
        Self { inner_nodes: 32, r_max: 8.0 * torus.period, panel: 4.0, panel_nodes: 16, tol: 1e-8 }
    }
}

/// Angular trapezoid size resolving e^{−irξ·ω} up to radius r.
fn angular_nodes(r: f64, xi: f64) -> usize {
    let n = (r * xi).ceil() as usize + 40;
    n + n % 2
}

/// Trapezoid nodes (cos θ, sin θ) on the half circle [0, π), indexed by node count.
struct AngleTables(Vec<Vec<(f64, f64)>>);

impl AngleTables {
    fn up_to(n_max: usize) -> Self {
        Self(
            (0..=n_max)
                .map(|n| {
                    if n == 0 || n % 2 == 1 {
                        return Vec::new();
                    }
                    let h = 2.0 * PI / n as f64;
                    (0..n / 2).map(|k| (h * k as f64).cos()).zip((0..n / 2).map(|k| (h * k as f64).sin())).collect()
                })
                .collect(),
        )
    }
}

/// ∫₀^{2π} (δᵢⱼ − 3ωᵢωⱼ) f(ω) dθ on the symmetric basis (11, 12, 22) for even f.
/// Antipodal nodes carry the same value, so only the half circle is visited.
fn angular(tables: &AngleTables, n: usize, mut f: impl FnMut(f64, f64) -> f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    let h = 4.0 * PI / n as f64;
    for &(c, s) in &tables.0[n] {
        let v = f(c, s) * h;
        out[0] += (1.0 - 3.0 * c * c) * v;
        out[1] += -3.0 * c * s * v;
        out[2] += (1.0 - 3.0 * s * s) * v;
    }
    out
}

/// 1 − cos β.
fn one_minus_cos(b: f64) -> f64 {
    let s = (0.5 * b).sin();
    2.0 * s * s
}

/// Mode weights split into the inner (|z| ≤ K) and outer parts, on the basis (11, 12, 22):
/// Op(L)e^{iξ·x} ≈ (Σ coeff·(inner + outer)) e^{iξ·x}. For a mode the bracket is
/// 1 − e^{−iβ} − iβ𝟙 with β = ξ·z; its odd part cancels between antipodal nodes.
fn mode_weights(xi: &Frequency, k: f64, rule: &QuadratureRule, tables: &AngleTables, coarse: bool) -> ([f64; 3], [f64; 3]) {
    let q = xi.modulus();
    let nin = if coarse { rule.inner_nodes * 3 / 4 } else { rule.inner_nodes };
    let (x, w) = gauss_legendre(nin);
    let mut inner = [0.0; 3];
    for (xn, wn) in x.iter().zip(&w) {
        let r = 0.5 * k * (xn + 1.0);
        let wr = 0.5 * k * wn;
        let a = angular(tables, angular_nodes(r, q), |c, s| one_minus_cos(r * (xi.xi1 * c + xi.xi2 * s)));
        for i in 0..3 {
            // γ r dr dθ = C_I(δ − 3ωω) r⁻² dr dθ
            inner[i] += -C_I * wr * a[i] / (r * r);
        }
    }
    // constant term of the outer bracket: −∫_{|z|>K} γ = πC_I/K on the diagonal
    let mut outer = [PI * C_I / k, 0.0, PI * C_I / k];
    let pn = if coarse { rule.panel_nodes * 3 / 4 } else { rule.panel_nodes };
    let (x, w) = gauss_legendre(pn);
    let mut lo = k;
    while lo < rule.r_max {
        // panels grow geometrically from K until they reach rule.panel, so r⁻² stays resolved
        let hi = (lo + (0.5 * lo).min(rule.panel)).min(rule.r_max);
        let nth = angular_nodes(hi, q);
        for (xn, wn) in x.iter().zip(&w) {
            let r = lo + 0.5 * (hi - lo) * (xn + 1.0);
            let wr = 0.5 * (hi - lo) * wn;
            let a = angular(tables, nth, |c, s| (r * (xi.xi1 * c + xi.xi2 * s)).cos());
            for i in 0..3 {
                outer[i] += C_I * wr * a[i] / (r * r);
            }
        }
        lo = hi;
    }
    (inner, outer)
}

/// Precomputed quadrature weights for every mode inside the cutoff support.
#[derive(Clone, Debug)]
pub struct SingularIntegralPlan {
    pub torus: Torus,
    pub k: f64,
    pub rule: QuadratureRule,
    /// (grid index, inner weights, outer weights)
    modes: Vec<(usize, [f64; 3], [f64; 3])>,
    /// largest gap between the rule and its coarsened copy, relative to |ξ|
    pub quadrature_error: f64,
}

impl SingularIntegralPlan {
    pub fn new(torus: Torus, k: f64) -> Result<Self> {
        Self::with_rule(torus, k, QuadratureRule::for_torus(&torus))
    }

    pub fn with_rule(torus: Torus, k: f64, rule: QuadratureRule) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Precondition(format!("K must be positive, got {k}")));
        }
        let n = torus.n;
        let idx: Vec<usize> = (1..n * n).filter(|&p| standard_cutoff(torus.frequency(p / n, p % n).modulus()) > 0.0).collect();
        let q_max = idx.iter().map(|&p| torus.frequency(p / n, p % n).modulus()).fold(0.0, f64::max);
        let tables = AngleTables::up_to(angular_nodes(rule.r_max.max(k), q_max));
        let computed: Vec<(usize, [f64; 3], [f64; 3], f64)> = idx
            .par_iter()
            .map(|&p| {
                let xi = torus.frequency(p / n, p % n);
                let (i, o) = mode_weights(&xi, k, &rule, &tables, false);
                let (ic, oc) = mode_weights(&xi, k, &rule, &tables, true);
                let gap = (0..3).map(|t| ((i[t] + o[t]) - (ic[t] + oc[t])).abs()).fold(0.0, f64::max) / xi.modulus();
                (p, i, o, gap)
            })
            .collect();
        let quadrature_error = computed.iter().map(|c| c.3).fold(0.0, f64::max);
        if quadrature_error > rule.tol {
            return Err(Error::NoConvergence { iterations: 0, residual: quadrature_error, history: vec![] });
        }
        Ok(Self { torus, k, rule, modes: computed.into_iter().map(|(p, i, o, _)| (p, i, o)).collect(), quadrature_error })
    }

    fn apply_parts(&self, mult: &OrderOneMultiplier, field: &SmoothedField, inner: bool, outer: bool) -> Result<Vec<f64>> {
        if field.torus != self.torus {
            return Err(Error::Input("field and plan use different grids".into()));
        }
        let b = mult.basis();
        let n = self.torus.n;
        let mut spec = vec![C64::new(0.0, 0.0); n * n];
        for (p, wi, wo) in &self.modes {
            let mut s = 0.0;
            for t in 0..3 {
                s += b[t] * (if inner { wi[t] } else { 0.0 } + if outer { wo[t] } else { 0.0 });
            }
            spec[*p] = field.spectrum[*p] * s;
        }
        Ok(Fft2::new(n).inverse_real(spec).0)
    }

    /// I[L]φ on the grid.
    pub fn apply(&self, mult: &OrderOneMultiplier, field: &SmoothedField) -> Result<Vec<f64>> {
        self.apply_parts(mult, field, true, true)
    }

    /// Contributions of |x−y| ≤ K and |x−y| > K separately.
    pub fn apply_split(&self, mult: &OrderOneMultiplier, field: &SmoothedField) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.apply_parts(mult, field, true, false)?, self.apply_parts(mult, field, false, true)?))
    }

    /// Crude bound on the truncated far field, Σ|aᵢⱼ| · 4πC_I‖φ‖_∞/R_max.
    pub fn tail_bound(&self, mult: &OrderOneMultiplier, field: &SmoothedField) -> f64 {
        let s: f64 = mult.a.iter().flatten().map(|v| v.abs()).sum();
        s * 4.0 * PI * C_I * field.sup / self.rule.r_max
    }
}

/// I[L]φ by quadrature with split radius K.
pub fn apply_i(mult: &OrderOneMultiplier, field: &SmoothedField, k: f64) -> Result<Vec<f64>> {
    SingularIntegralPlan::new(field.torus, k)?.apply(mult, field)
}

/// ξ-space oracle: L(ξ)φ̂(ξ) on the grid.
pub fn apply_spectral(mult: &OrderOneMultiplier, field: &SmoothedField) -> Vec<f64> {
    let t = field.torus;
    let n = t.n;
    let spec = (0..n * n).map(|p| field.spectrum[p] * mult.symbol(&t.frequency(p / n, p % n))).collect();
    Fft2::new(n).inverse_real(spec).0
}

/// Report of ‖I[ξᵢξⱼ/|ξ|]φ‖_∞ ≤ C‖φ‖_∞^{1/2}‖∇²φ‖_∞^{1/2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// K* = ‖φ‖^{1/2}/‖∇²φ‖^{1/2}
    pub k_star: f64,
    /// bounds 2πC_I K*‖∇²φ‖ and 8πC_I‖φ‖/K* on the inner and outer parts at K*
    pub inner_bound: f64,
    pub outer_bound: f64,
    /// measured sup of the inner and outer parts at K*, worst entry
    pub inner_measured: f64,
    pub outer_measured: f64,
}

/// Frozen constant of the interpolation bound: 8πC_I from |γᵢⱼ| ≤ 2C_I/|x|³ and the optimal split.
pub const INTERPOLATION_CONSTANT: f64 = 8.0 * PI * C_I;

pub fn interpolation_bound_check(field: &SmoothedField) -> Result<InterpolationReport> {
    if field.hessian_sup == 0.0 {
        return Err(Error::Input("field has no curvature".into()));
    }
    let k_star = (field.sup / field.hessian_sup).sqrt();
    let plan = SingularIntegralPlan::new(field.torus, k_star)?;
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (mut lhs, mut im, mut om) = (0.0f64, 0.0f64, 0.0f64);
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let m = OrderOneMultiplier::entry(i, j);
        let (a, b) = plan.apply_split(&m, field)?;
        let total: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        lhs = lhs.max(sup(&total));
        im = im.max(sup(&a));
        om = om.max(sup(&b));
    }
    let rhs = INTERPOLATION_CONSTANT * (field.sup * field.hessian_sup).sqrt();
    Ok(InterpolationReport {
        lhs,
        rhs,
        pass: lhs <= rhs,
        k_star,
        inner_bound: 2.0 * PI * C_I * k_star * field.hessian_sup,
        outer_bound: 8.0 * PI * C_I * field.sup / k_star,
        inner_measured: im,
        outer_measured: om,
    })
}

/// Residuals of the transfer identities, as grid averages:
/// ⟨ψ, I[L](ρ∗g)⟩ − ⟨g, I[L](ρ̌∗ψ)⟩ and ⟨∂ₖψ, I[L](ρ∗g)⟩ + ⟨ψ, I[L](∂ₖρ∗g)⟩.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjointReport {
    pub symmetry: f64,
    pub derivative: [f64; 2],
    /// magnitude of the pairings, for scaling
    pub scale: f64,
}

pub fn adjointness_check(plan: &SingularIntegralPlan, mult: &OrderOneMultiplier, g: &[f64], psi: &[f64]) -> Result<AdjointReport> {
    let t = plan.torus;
    let n = t.n;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (n * n) as f64;
    let fg = SmoothedField::new(t, g)?;
    // ρ is radial, so ρ̌ = ρ
    let fpsi = SmoothedField::new(t, psi)?;
    let ig = plan.apply(mult, &fg)?;
    let ipsi = plan.apply(mult, &fpsi)?;
    let a = dot(psi, &ig);
    let b = dot(g, &ipsi);
    let fft = Fft2::new(n);
    let psi_hat = fft.forward_real(psi);
    let mut derivative = [0.0; 2];
    let mut scale = a.abs().max(b.abs());
    for (k, d) in derivative.iter_mut().enumerate() {
        let dpsi = fft.inverse_real((0..n * n).map(|p| psi_hat[p] * t.deriv_factor(p / n, p % n, k)).collect()).0;
        let idg = plan.apply(mult, &fg.derivative(k))?;
        let x = dot(&dpsi, &ig);
        let y = dot(psi, &idg);
        scale = scale.max(x.abs()).max(y.abs());
        *d = x + y;
    }
    Ok(AdjointReport { symmetry: a - b, derivative, scale })
}

/// Result of the C_I calibration.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    pub c_i: f64,
    /// log-log slope of f(r) − f(2r)
    pub exponent: f64,
    /// largest relative deviation of 2r(f(r) − f(2r)) from its mean
    pub residual: f64,
}

/// Fits F⁻¹(e^{−σ²|ξ|²/2}/|ξ|)(x) ≈ C/|x| along the first axis of a periodic grid.
///
/// Differences f(r) − f(2r) remove the constant left by dropping the zero mode;
/// on r ∈ [8σ, period/16] both the smoothing and the periodic corrections stay below 2%.
pub fn calibrate_c_i(period: f64, n: usize, sigma: f64) -> Result<CalibrationReport> {
    let torus = Torus::new(period, n);
    let spec: Vec<C64> = (0..n * n)
        .map(|p| {
            let q = torus.frequency(p / n, p % n).modulus();
            if q == 0.0 { C64::new(0.0, 0.0) } else { C64::new((-0.5 * sigma * sigma * q * q).exp() / q, 0.0) }
        })
        .collect();
    // the series coefficients are ĝ/|T|, so the grid transform carries n²/|T|
    let scale = (n * n) as f64 / (period * period);
    let (vals, _) = Fft2::new(n).inverse_real(spec.into_iter().map(|z| z * scale).collect());
    let h = torus.spacing();
    let lo = (8.0 * sigma / h).ceil() as usize;
    let hi = (period / 16.0 / h).floor() as usize;
    if hi < 2 * lo {
        return Err(Error::Input("fit window shorter than one octave".into()));
    }
    let mut rs = Vec::new();
    let mut ds = Vec::new();
    for i in lo..=hi {
        rs.push(i as f64 * h);
        ds.push(vals[i * n] - vals[2 * i * n]);
    }
    let exponent = crate::numerics::loglog_slope(&rs, &ds);
    let cs: Vec<f64> = rs.iter().zip(&ds).map(|(r, d)| 2.0 * r * d).collect();
    let c_i = cs.iter().sum::<f64>() / cs.len() as f64;
    let residual = cs.iter().map(|v| (v / c_i - 1.0).abs()).fold(0.0, f64::max);
    if residual > 0.05 {
        return Err(Error::Numerical(format!("C_I fit residual {residual:.3} exceeds 5%")));
    }
    Ok(CalibrationReport { c_i, exponent, residual })
}
