//! Physical-space kernels of the half-space and DtN multipliers, sampled by inverse
//! FFT on a large torus, and envelope fits of their decay.
//!
//! Grid values approximate F⁻¹ŝ(x) = (2π)⁻²∫ŝ(ξ)e^{ix·ξ}dξ by the Fourier series
//! P⁻²Σŝ(ξ_m)e^{ix·ξ_m}, i.e. the periodisation Σ_m K(x + mP).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dtn_operator::{dtn_decompose, standard_cutoff, DtNSymbol};
use crate::error::{Error, Result};
use crate::grid::{Fft2, Torus};
use crate::halfspace_solver::mode_matrix;
use crate::numerics::loglog_slope;
use crate::spectral_core::{characteristic_roots, Frequency};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// One exponential mode coeff·e^{−λx₃} of a symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolTerm {
    pub coeff: DMatrix<C64>,
    pub lambda: C64,
}

impl SymbolTerm {
    pub fn flat(coeff: DMatrix<C64>) -> Self {
        Self { coeff, lambda: c(0.0) }
    }
}

/// Named kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelId {
    /// Σ(1−φ)L_k e^{−λ_k x₃}
    PhiHf,
    /// Σφ M_k^rem e^{−λ_k x₃}
    Psi1,
    /// Σφ N_k^rem e^{−λ_k x₃}
    Psi2,
    /// φ e^{−λ_k x₃}, k ∈ {1, 2, 3}
    F(usize),
    Remainder(RemainderPart),
}

/// Parts of the DtN splitting whose kernels decay like |x_h|⁻³.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RemainderPart {
    /// φ(M^rem_ij), i, j ≤ 2
    K1,
    /// φ(M^rem_13; M^rem_23) iξᵀ
    K2,
    /// −iφ ξ(M^rem_31, M^rem_32)
    K3,
    /// φ M^rem_33 ξξᵀ
    K4,
    /// kernel part of (1−φ)(M_SC − M_S − M̄): the symbol (1−φ)(M_SC − M_S) + φM̄,
    /// i.e. without the Dirac mass −M̄δ
    HighFrequency,
}

impl std::fmt::Display for KernelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelId::PhiHf => write!(f, "phi_hf"),
            KernelId::Psi1 => write!(f, "psi1"),
            KernelId::Psi2 => write!(f, "psi2"),
            KernelId::F(k) => write!(f, "f{k}"),
            KernelId::Remainder(RemainderPart::K1) => write!(f, "krem1"),
            KernelId::Remainder(RemainderPart::K2) => write!(f, "krem2"),
            KernelId::Remainder(RemainderPart::K3) => write!(f, "krem3"),
            KernelId::Remainder(RemainderPart::K4) => write!(f, "krem4"),
            KernelId::Remainder(RemainderPart::HighFrequency) => write!(f, "mrem_hf"),
        }
    }
}

impl std::str::FromStr for KernelId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "phi_hf" => KernelId::PhiHf,
            "psi1" => KernelId::Psi1,
            "psi2" => KernelId::Psi2,
            "f1" => KernelId::F(1),
            "f2" => KernelId::F(2),
            "f3" => KernelId::F(3),
            "krem1" => KernelId::Remainder(RemainderPart::K1),
            "krem2" => KernelId::Remainder(RemainderPart::K2),
            "krem3" => KernelId::Remainder(RemainderPart::K3),
            "krem4" => KernelId::Remainder(RemainderPart::K4),
            "mrem_hf" => KernelId::Remainder(RemainderPart::HighFrequency),
            _ => return Err(Error::Input(format!("unknown kernel '{s}'"))),
        })
    }
}

// Order-one homogeneous parts (αξ₁² + βξ₁ξ₂ + γξ₂²)/|ξ| of the horizontal rows of
// M_k and N_k near ξ = 0, indexed [k][row][col]. The third rows carry none.
const Q: f64 = std::f64::consts::FRAC_1_SQRT_2 / 2.0;
const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

type Coef = [(f64, f64); 3];

const M_ONE: [[[Coef; 2]; 2]; 3] = [
    [
        [[(0.0, 0.0), (-H, 0.0), (H, 0.0)], [(0.0, 0.0), (-H, 0.0), (-H, 0.0)]],
        [[(H, 0.0), (-H, 0.0), (0.0, 0.0)], [(H, 0.0), (H, 0.0), (0.0, 0.0)]],
    ],
    [
        [[(0.0, -Q), (Q, Q), (-Q, 0.0)], [(0.0, -Q), (Q, -Q), (Q, 0.0)]],
        [[(-Q, 0.0), (Q, -Q), (0.0, Q)], [(-Q, 0.0), (-Q, -Q), (0.0, -Q)]],
    ],
    [
        [[(0.0, Q), (Q, -Q), (-Q, 0.0)], [(0.0, Q), (Q, Q), (Q, 0.0)]],
        [[(-Q, 0.0), (Q, Q), (0.0, -Q)], [(-Q, 0.0), (-Q, Q), (0.0, Q)]],
    ],
];

const N_ONE: [[[Coef; 2]; 2]; 3] = [
    [
        [[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]],
        [[(-1.0, 0.0), (0.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (-1.0, 0.0), (0.0, 0.0)]],
    ],
    [
        [[(0.0, 0.5), (-0.5, 0.0), (0.0, 0.0)], [(0.0, 0.0), (0.0, 0.5), (-0.5, 0.0)]],
        [[(0.5, 0.0), (0.0, 0.5), (0.0, 0.0)], [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5)]],
    ],
    [
        [[(0.0, -0.5), (-0.5, 0.0), (0.0, 0.0)], [(0.0, 0.0), (0.0, -0.5), (-0.5, 0.0)]],
        [[(0.5, 0.0), (0.0, -0.5), (0.0, 0.0)], [(0.0, 0.0), (0.5, 0.0), (0.0, -0.5)]],
    ],
];

fn homogeneous_part(table: &[[[Coef; 2]; 2]; 3], k: usize, xi: &Frequency) -> DMatrix<C64> {
    let r = xi.modulus();
    let basis = [xi.xi1 * xi.xi1 / r, xi.xi1 * xi.xi2 / r, xi.xi2 * xi.xi2 / r];
    DMatrix::from_fn(3, 2, |i, j| {
        if i == 2 {
            return c(0.0);
        }
        table[k][i][j].iter().zip(basis).map(|(&(re, im), b)| C64::new(re, im) * b).sum()
    })
}

/// M_k¹(ξ), the nonpolynomial order-one part of (L_k e₁ L_k e₂), k ∈ {1, 2, 3}.
pub fn m_one(k: usize, xi: &Frequency) -> DMatrix<C64> {
    homogeneous_part(&M_ONE, k - 1, xi)
}

/// N_k¹(ξ), the nonpolynomial order-one part of iL_k e₃ξᵀ, k ∈ {1, 2, 3}.
pub fn n_one(k: usize, xi: &Frequency) -> DMatrix<C64> {
    homogeneous_part(&N_ONE, k - 1, xi)
}

/// (M_k, N_k) = ((L_k e₁ L_k e₂), iL_k e₃ξᵀ) with λ_k, k = 1, 2, 3.
pub fn mode_blocks(xi: &Frequency) -> Result<Vec<(DMatrix<C64>, DMatrix<C64>, C64)>> {
    let roots = characteristic_roots(xi);
    let sys = mode_matrix(xi, &roots)?;
    let x = [xi.xi1, xi.xi2];
    Ok((0..3)
        .map(|k| {
            let l = &sys.l[k];
            (DMatrix::from_fn(3, 2, |i, j| l[(i, j)]), DMatrix::from_fn(3, 2, |i, j| I * l[(i, 2)] * x[j]), roots.lambda[k])
        })
        .collect())
}

fn block(s: &DtNSymbol, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DMatrix<C64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| s.m_rem[(rows.start + i, cols.start + j)])
}

/// Symbol of a remainder part at ξ ≠ 0.
pub fn remainder_symbol(part: RemainderPart, xi: &Frequency) -> Result<DMatrix<C64>> {
    let s = dtn_decompose(xi, standard_cutoff)?;
    let phi = c(s.phi);
    let x = [xi.xi1, xi.xi2];
    Ok(match part {
        RemainderPart::K1 => block(&s, 0..2, 0..2) * phi,
        RemainderPart::K2 => {
            let col = block(&s, 0..2, 2..3);
            DMatrix::from_fn(2, 2, |i, j| phi * col[(i, 0)] * I * x[j])
        }
        RemainderPart::K3 => {
            let row = block(&s, 2..3, 0..2);
            DMatrix::from_fn(2, 2, |i, j| -I * phi * x[i] * row[(0, j)])
        }
        RemainderPart::K4 => {
            let m = s.m_rem[(2, 2)];
            DMatrix::from_fn(2, 2, |i, j| phi * m * x[i] * x[j])
        }
        RemainderPart::HighFrequency => DMatrix::from_fn(3, 3, |i, j| s.high_remainder[(i, j)] + s.mbar[(i, j)]),
    })
}

/// Modal terms of a named kernel's symbol at ξ ≠ 0.
pub fn kernel_terms(id: KernelId, xi: &Frequency) -> Result<Vec<SymbolTerm>> {
    let phi = standard_cutoff(xi.modulus());
    match id {
        KernelId::PhiHf => {
            if phi == 1.0 {
                return Ok(vec![]);
            }
            let roots = characteristic_roots(xi);
            let sys = mode_matrix(xi, &roots)?;
            Ok((0..3)
                .map(|k| SymbolTerm { coeff: DMatrix::from_fn(3, 3, |i, j| sys.l[k][(i, j)] * (1.0 - phi)), lambda: roots.lambda[k] })
                .collect())
        }
        KernelId::Psi1 | KernelId::Psi2 => {
            if phi == 0.0 {
                return Ok(vec![]);
            }
            Ok(mode_blocks(xi)?
                .into_iter()
                .enumerate()
                .map(|(k, (m, n, lambda))| {
                    let rem = if id == KernelId::Psi1 { m - m_one(k + 1, xi) } else { n - n_one(k + 1, xi) };
                    SymbolTerm { coeff: rem * c(phi), lambda }
                })
                .collect())
        }
        KernelId::F(k) => {
            if !(1..=3).contains(&k) {
                return Err(Error::Input(format!("f_k needs k in 1..=3, got {k}")));
            }
            if phi == 0.0 {
                return Ok(vec![]);
            }
            let roots = characteristic_roots(xi);
            Ok(vec![SymbolTerm { coeff: DMatrix::from_element(1, 1, c(phi)), lambda: roots.lambda[k - 1] }])
        }
        KernelId::Remainder(p) => Ok(vec![SymbolTerm::flat(remainder_symbol(p, xi)?)]),
    }
}

/// Entry shape of a named kernel.
pub fn kernel_shape(id: KernelId) -> (usize, usize) {
    match id {
        KernelId::PhiHf | KernelId::Remainder(RemainderPart::HighFrequency) => (3, 3),
        KernelId::Psi1 | KernelId::Psi2 => (3, 2),
        KernelId::F(_) => (1, 1),
        KernelId::Remainder(_) => (2, 2),
    }
}

/// Derivative ∂₁^a ∂₂^b ∂₃^m, applied as (iξ₁)^a(iξ₂)^b(−λ_k)^m on each mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Derivative {
    pub horizontal: [u32; 2],
    pub vertical: u32,
}

impl Derivative {
    pub fn order(&self) -> u32 {
        self.horizontal[0] + self.horizontal[1] + self.vertical
    }
}

/// Sampling torus and optional smooth spectral window exp(−(|ξ|/ξ_c)⁸).
///
/// Symbols that do not decay in ξ need the window; it alters the kernel only
/// within a few 1/ξ_c of the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelGrid {
    pub torus: Torus,
    pub window: Option<f64>,
}

impl KernelGrid {
    pub fn new(period: f64, n: usize) -> Self {
        Self { torus: Torus::new(period, n), window: None }
    }

    /// Window at half the grid Nyquist frequency.
    pub fn windowed(period: f64, n: usize) -> Self {
        let t = Torus::new(period, n);
        Self { torus: t, window: Some(0.5 * std::f64::consts::PI / t.spacing()) }
    }

    fn weight(&self, xi: &Frequency) -> f64 {
        match self.window {
            None => 1.0,
            Some(xc) => (-(xi.modulus() / xc).powi(8)).exp(),
        }
    }
}

/// Matrix kernel sampled at x₃ levels. `values[level][row·cols + col][point]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSample {
    pub name: String,
    pub grid: KernelGrid,
    pub levels: Vec<f64>,
    pub derivative: Derivative,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Vec<Vec<f64>>>,
    /// largest imaginary part over the largest real value
    pub imag_ratio: f64,
    /// whether the zero mode was filled by a radial limit (false: set to 0)
    pub zero_mode_limit: bool,
}

impl KernelSample {
    pub fn entry(&self, level: usize, row: usize, col: usize) -> &[f64] {
        &self.values[level][row * self.cols + col]
    }

    /// Frobenius norm of the kernel at each grid point of a level.
    pub fn magnitude(&self, level: usize) -> Vec<f64> {
        let np = self.grid.torus.len();
        (0..np).map(|p| self.values[level].iter().map(|e| e[p] * e[p]).sum::<f64>().sqrt()).collect()
    }

    pub fn peak(&self) -> f64 {
        (0..self.levels.len()).map(|l| self.magnitude(l).into_iter().fold(0.0, f64::max)).fold(0.0, f64::max)
    }

    /// Matrix value at grid point (i, j) of a level.
    pub fn at(&self, level: usize, i: usize, j: usize) -> DMatrix<f64> {
        let p = i * self.grid.torus.n + j;
        DMatrix::from_fn(self.rows, self.cols, |r, s| self.values[level][r * self.cols + s][p])
    }
}

fn modal_factor(d: &Derivative, xi: &Frequency, lambda: C64, x3: f64) -> C64 {
    let mut f = (-lambda * x3).exp();
    f *= (I * xi.xi1).powu(d.horizontal[0]) * (I * xi.xi2).powu(d.horizontal[1]);
    f * (-lambda).powu(d.vertical)
}

fn evaluate(terms: &[SymbolTerm], d: &Derivative, xi: &Frequency, x3: f64, rows: usize, cols: usize) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(rows, cols);
    for t in terms {
        out += &t.coeff * modal_factor(d, xi, t.lambda, x3);
    }
    out
}

fn spread(vals: &[DMatrix<C64>]) -> (DMatrix<C64>, f64) {
    let mean = vals.iter().fold(DMatrix::zeros(vals[0].nrows(), vals[0].ncols()), |a, v| a + v) / c(vals.len() as f64);
    let s = vals.iter().map(|v| (v - &mean).norm()).fold(0.0, f64::max);
    (mean, s)
}

/// Zero-mode value per level: the angular mean of the limit ξ → 0, extrapolated
/// from |ξ| = ε and 2ε; 0 when the angular spread does not shrink with |ξ|.
fn zero_mode<F>(symbol: &F, d: &Derivative, levels: &[f64], rows: usize, cols: usize) -> Result<(Vec<DMatrix<C64>>, bool)>
where
    F: Fn(&Frequency) -> Result<Vec<SymbolTerm>>,
{
    let eps = 1e-3;
    let angles: Vec<f64> = (0..8).map(|k| 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / 8.0).collect();
    let near = |r: f64| -> Result<Vec<(Frequency, Vec<SymbolTerm>)>> {
        angles.iter().map(|&t| Ok((Frequency::polar(r, t), symbol(&Frequency::polar(r, t))?))).collect()
    };
    let (a, b) = (near(eps)?, near(2.0 * eps)?);
    let mut out = Vec::with_capacity(levels.len());
    let mut has_limit = true;
    for &x3 in levels {
        let va: Vec<_> = a.iter().map(|(xi, t)| evaluate(t, d, xi, x3, rows, cols)).collect();
        let vb: Vec<_> = b.iter().map(|(xi, t)| evaluate(t, d, xi, x3, rows, cols)).collect();
        let (ma, sa) = spread(&va);
        let (mb, sb) = spread(&vb);
        if sa > 1e-9 * (1.0 + ma.norm()) && sa > 0.75 * sb {
            has_limit = false;
        }
        // angular averaging removes the odd orders, so the error is O(ε²)
        out.push((ma * c(4.0) - mb) / c(3.0));
    }
    if !has_limit {
        out.iter_mut().for_each(|m| m.fill(c(0.0)));
    }
    Ok((out, has_limit))
}

/// Samples F⁻¹(Σ_k coeff_k e^{−λ_k x₃}) on the grid at each level.
///
/// Nyquist indices average the symbol over their sign aliases; the zero mode is
/// filled by the radial limit when one exists.
pub fn kernel_from_symbol<F>(
    name: &str,
    symbol: F,
    shape: (usize, usize),
    grid: KernelGrid,
    levels: &[f64],
    derivative: Derivative,
) -> Result<KernelSample>
where
    F: Fn(&Frequency) -> Result<Vec<SymbolTerm>> + Sync,
{
    let (rows, cols) = shape;
    if levels.iter().any(|&z| !(z >= 0.0 && z.is_finite())) {
        return Err(Error::Domain("kernel levels need x3 >= 0".into()));
    }
    let t = grid.torus;
    let n = t.n;
    let table: Vec<Vec<(Frequency, f64, Vec<SymbolTerm>)>> = (1..n * n)
        .into_par_iter()
        .map(|p| {
            t.aliases(p / n, p % n)
                .into_iter()
                .map(|xi| {
                    let w = grid.weight(&xi);
                    if w < 1e-300 {
                        return Ok((xi, 0.0, vec![]));
                    }
                    let terms = symbol(&xi).map_err(|e| Error::Numerical(format!("symbol at ({:.4}, {:.4}): {e}", xi.xi1, xi.xi2)))?;
                    Ok((xi, w, terms))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (zero, zero_mode_limit) = zero_mode(&symbol, &derivative, levels, rows, cols)?;
    let fft = Fft2::new(n);
    let scale = (n * n) as f64 / (t.period * t.period);
    let mut values = Vec::with_capacity(levels.len());
    let mut imag = 0.0f64;
    let mut real = 0.0f64;
    for (l, &x3) in levels.iter().enumerate() {
        let mut spec = vec![vec![c(0.0); n * n]; rows * cols];
        for (e, s) in spec.iter_mut().enumerate() {
            s[0] = zero[l][(e / cols, e % cols)] * scale;
        }
        for (p, aliases) in table.iter().enumerate() {
            let mut acc = DMatrix::<C64>::zeros(rows, cols);
            for (xi, w, terms) in aliases {
                if *w > 0.0 {
                    acc += evaluate(terms, &derivative, xi, x3, rows, cols) * c(*w);
                }
            }
            acc /= c(aliases.len() as f64);
            if !acc.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Numerical(format!("non-finite symbol at grid index {}", p + 1)));
            }
            for (e, s) in spec.iter_mut().enumerate() {
                s[p + 1] = acc[(e / cols, e % cols)] * scale;
            }
        }
        let level: Vec<Vec<f64>> = spec
            .into_iter()
            .map(|mut s| {
                fft.inverse(&mut s);
                imag = s.iter().fold(imag, |m, z| m.max(z.im.abs()));
                real = s.iter().fold(real, |m, z| m.max(z.re.abs()));
                s.into_iter().map(|z| z.re).collect()
            })
            .collect();
        values.push(level);
    }
    Ok(KernelSample {
        name: name.to_string(),
        grid,
        levels: levels.to_vec(),
        derivative,
        rows,
        cols,
        values,
        imag_ratio: if real > 0.0 { imag / real } else { 0.0 },
        zero_mode_limit,
    })
}

/// A named kernel at the given levels.
pub fn sample_kernel(id: KernelId, grid: KernelGrid, levels: &[f64], derivative: Derivative) -> Result<KernelSample> {
    if let KernelId::F(k) = id {
        if !(1..=3).contains(&k) {
            return Err(Error::Input(format!("f_k needs k in 1..=3, got {k}")));
        }
    }
    kernel_from_symbol(&id.to_string(), |xi| kernel_terms(id, xi), kernel_shape(id), grid, levels, derivative)
}

/// Kernel of one part of the DtN splitting on the boundary.
pub fn remainder_kernel(part: RemainderPart, grid: KernelGrid) -> Result<KernelSample> {
    sample_kernel(KernelId::Remainder(part), grid, &[0.0], Derivative::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// envelope over annuli r ≤ |x_h| < r' at one level
    Horizontal { level: usize },
    /// envelope over each horizontal slab x₃ = const
    Vertical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub radii: Vec<f64>,
    pub envelope: Vec<f64>,
    /// true when the envelope reached the noise floor 1e-12·peak before the range ended
    pub hit_floor: bool,
}

/// Minimum span of a decay fit, in decades.
pub const MIN_DECADES: f64 = 1.5;

/// Log-log least-squares exponent of the envelope over [lo, hi].
///
/// The envelope is the maximum of the Frobenius norm over log-spaced annuli,
/// each widened by half a grid spacing on both sides (horizontal, periodic
/// distance to the origin), or over whole slabs (vertical).
/// Trailing shells below 1e-12 of the peak are dropped; at least four must remain.
pub fn decay_fit(sample: &KernelSample, direction: Direction, lo: f64, hi: f64) -> Result<DecayFit> {
    if !(lo > 0.0 && hi > lo) || (hi / lo).log10() < MIN_DECADES - 1e-9 {
        return Err(Error::Domain(format!("fit range [{lo}, {hi}] covers less than {MIN_DECADES} decades")));
    }
    let (radii, envelope): (Vec<f64>, Vec<f64>) = match direction {
        Direction::Horizontal { level } => {
            if level >= sample.levels.len() {
                return Err(Error::Input(format!("level {level} not sampled")));
            }
            let t = sample.grid.torus;
            let n = t.n;
            if hi > 0.5 * t.period {
                return Err(Error::Domain(format!("fit radius {hi} exceeds half the period")));
            }
            let shells = 24;
            let edges: Vec<f64> = (0..=shells).map(|k| lo * (hi / lo).powf(k as f64 / shells as f64)).collect();
            let mut env = vec![0.0f64; shells];
            let mag = sample.magnitude(level);
            let d = |i: usize| {
                let x = t.coord(i);
                x.min(t.period - x)
            };
            // each annulus is thickened by h/2 on both sides, so none is thinner than the lattice
            let half = 0.5 * t.spacing();
            for i in 0..n {
                for j in 0..n {
                    let r = d(i).hypot(d(j));
                    if r < lo - half || r >= hi + half {
                        continue;
                    }
                    let m = mag[i * n + j];
                    for (s, e) in env.iter_mut().enumerate() {
                        if r >= edges[s] - half && r < edges[s + 1] + half {
                            *e = e.max(m);
                        }
                    }
                }
            }
            let mid: Vec<f64> = (0..shells).map(|k| (edges[k] * edges[k + 1]).sqrt()).collect();
            let keep: Vec<(f64, f64)> = mid.into_iter().zip(env).filter(|(_, e)| *e > 0.0).collect();
            if keep.len() < shells * 3 / 4 {
                return Err(Error::Domain("annuli too thin for the grid spacing".into()));
            }
            keep.into_iter().unzip()
        }
        Direction::Vertical => {
            let pairs: Vec<(f64, f64)> = sample
                .levels
                .iter()
                .enumerate()
                .filter(|(_, &z)| z >= lo * (1.0 - 1e-12) && z <= hi * (1.0 + 1e-12))
                .map(|(l, &z)| (z, sample.magnitude(l).into_iter().fold(0.0, f64::max)))
                .collect();
            let (z, _): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
            if pairs.len() < 4 || (z[z.len() - 1] / z[0]).log10() < MIN_DECADES - 1e-9 {
                return Err(Error::Domain(format!("sampled levels in [{lo}, {hi}] cover less than {MIN_DECADES} decades")));
            }
            pairs.into_iter().unzip()
        }
    };
    let floor = 1e-12 * sample.peak();
    let cut = envelope.iter().position(|&e| e <= floor).unwrap_or(envelope.len());
    if cut < 4 {
        return Err(Error::Numerical("envelope reaches the noise floor within the first shells".into()));
    }
    let exponent = loglog_slope(&radii[..cut], &envelope[..cut]);
    Ok(DecayFit { exponent, radii: radii[..cut].to_vec(), envelope: envelope[..cut].to_vec(), hit_floor: cut < envelope.len() })
}

/// Largest change at common points when the period doubles at fixed spacing,
/// relative to the peak.
pub fn wraparound_change(id: KernelId, grid: KernelGrid, levels: &[f64], derivative: Derivative) -> Result<f64> {
    let a = sample_kernel(id, grid, levels, derivative)?;
    let big = KernelGrid { torus: Torus::new(2.0 * grid.torus.period, 2 * grid.torus.n), window: grid.window };
    let b = sample_kernel(id, big, levels, derivative)?;
    let n = grid.torus.n;
    let nb = 2 * n;
    let mut worst = 0.0f64;
    // compare on |i|, |j| < n/4 in periodic coordinates
    let q = n / 4;
    let idx = |k: i64, m: usize| ((k + m as i64) % m as i64) as usize;
    for l in 0..levels.len() {
        for e in 0..a.rows * a.cols {
            for i in -(q as i64)..q as i64 {
                for j in -(q as i64)..q as i64 {
                    let va = a.values[l][e][idx(i, n) * n + idx(j, n)];
                    let vb = b.values[l][e][idx(i, nb) * nb + idx(j, nb)];
                    worst = worst.max((va - vb).abs());
                }
            }
        }
    }
    Ok(worst / a.peak())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_tables_sum_to_zero() {
        // Σ_k L_k = I, so the order-one parts cancel in the sum
        let xi = Frequency::new(0.3, -0.7);
        let sm = m_one(1, &xi) + m_one(2, &xi) + m_one(3, &xi);
        let sn = n_one(1, &xi) + n_one(2, &xi) + n_one(3, &xi);
        assert!(sm.norm() < 1e-15 && sn.norm() < 1e-15);
    }

    #[test]
    fn kernel_names_round_trip() {
        for id in [KernelId::PhiHf, KernelId::Psi2, KernelId::F(3), KernelId::Remainder(RemainderPart::K4)] {
            assert_eq!(id.to_string().parse::<KernelId>().unwrap(), id);
        }
        assert!("psi9".parse::<KernelId>().is_err());
    }

    #[test]
    fn short_fit_range_is_rejected() {
        let s = sample_kernel(KernelId::F(1), KernelGrid::new(64.0, 64), &[0.0], Derivative::default()).unwrap();
        assert!(matches!(decay_fit(&s, Direction::Horizontal { level: 0 }, 2.0, 20.0), Err(Error::Domain(_))));
    }
}
