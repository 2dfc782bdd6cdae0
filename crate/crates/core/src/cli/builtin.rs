//! Builtin bottom profiles and boundary data: low-order trigonometric
//! polynomials on the torus, with κ = 2π/period.

use std::path::Path;

use super::field_file;
use crate::error::{Error, Result};
use crate::grid::Torus;

pub const OMEGA_IDS: [&str; 3] = ["flat", "cosine", "ridge"];
pub const DATA_IDS: [&str; 4] = ["zero", "shear", "mode", "spiral"];

fn sample(t: &Torus, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let n = t.n;
    (0..n * n).map(|p| f(t.coord(p / n), t.coord(p % n))).collect()
}

fn kappa(t: &Torus) -> f64 {
    2.0 * std::f64::consts::PI / t.period
}

/// Bottom height ω for `builtin:<id>` around the mean −depth.
pub fn omega(id: &str, t: &Torus, depth: f64, amplitude: f64) -> Result<Vec<f64>> {
    let k = kappa(t);
    match id {
        "flat" => Ok(vec![-depth; t.len()]),
        "cosine" => Ok(sample(t, |x, y| -depth + amplitude * (k * x).cos() * (k * y).cos())),
        "ridge" => Ok(sample(t, |x, _| -depth + amplitude * (k * x).cos())),
        _ => Err(Error::Config(format!("unknown bottom profile '{id}' (builtins: {})", OMEGA_IDS.join(", ")))),
    }
}

/// Boundary velocity for `builtin:<id>`; all have mean-zero normal part on the
/// builtin bottoms.
pub fn boundary(id: &str, t: &Torus, amplitude: f64) -> Result<[Vec<f64>; 3]> {
    let k = kappa(t);
    let a = amplitude;
    let zero = vec![0.0; t.len()];
    match id {
        "zero" => Ok([zero.clone(), zero.clone(), zero]),
        "shear" => Ok([sample(t, |_, y| a * (1.0 + (k * y).cos())), sample(t, |x, _| a * (k * x).sin()), zero]),
        "mode" => Ok([
            sample(t, |x, _| a * (k * x).cos()),
            sample(t, |_, y| a * (k * y).sin()),
            sample(t, |x, y| 0.3 * a * (k * (x + y)).cos()),
        ]),
        "spiral" => Ok([
            sample(t, |x, y| a * ((k * y).cos() + 0.5 * (2.0 * k * x).sin())),
            sample(t, |x, y| a * ((k * x).sin() - 0.25 * (k * (x - y)).cos())),
            sample(t, |x, y| 0.2 * a * (k * (x - 2.0 * y)).sin()),
        ]),
        _ => Err(Error::Config(format!("unknown boundary data '{id}' (builtins: {})", DATA_IDS.join(", ")))),
    }
}

/// A source is `builtin:<id>` or a path to a field file.
pub enum Source<'a> {
    Builtin(&'a str),
    File(&'a Path),
}

pub fn source(s: &str) -> Source<'_> {
    match s.strip_prefix("builtin:") {
        Some(id) => Source::Builtin(id),
        None => Source::File(Path::new(s.strip_prefix("file:").unwrap_or(s))),
    }
}

/// One level of a field file with the expected component count, on torus `t`.
pub fn from_file(path: &Path, t: &Torus, components: usize) -> Result<Vec<Vec<f64>>> {
    let f = field_file::read(path)?;
    if f.torus.n != t.n || (f.torus.period - t.period).abs() > 1e-12 * t.period {
        return Err(Error::Structure(format!(
            "{}: grid {} with period {} does not match the configured {} and {}",
            path.display(),
            f.torus.n,
            f.torus.period,
            t.n,
            t.period
        )));
    }
    if f.levels.len() != 1 || f.data.len() != components {
        return Err(Error::Structure(format!(
            "{}: expected one level with {components} components, found {} levels and {} components",
            path.display(),
            f.levels.len(),
            f.data.len()
        )));
    }
    Ok(f.data)
}
