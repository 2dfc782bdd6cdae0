//! Plain-text field files.
//!
//! ```text
//! SCFIELD 1
//! dims <n> <n> <levels>
//! period <p>
//! levels <z_0> ... <z_{L-1}>
//! components <name> ...
//! <i> <j> <l> <x1> <x2> <z> <value> ...
//! ```
//! Records run over l, then i, then j. Reals are written with 17 significant
//! digits, so a write-read cycle is exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{FieldGrid, Torus};

pub const TAG: &str = "SCFIELD 1";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_string(field: &FieldGrid) -> String {
    let t = &field.torus;
    let n = t.n;
    let mut out = String::new();
    let _ = writeln!(out, "{TAG}");
    let _ = writeln!(out, "dims {n} {n} {}", field.levels.len());
    let _ = writeln!(out, "period {}", real(t.period));
    let levels: Vec<String> = field.levels.iter().map(|z| real(*z)).collect();
    let _ = writeln!(out, "levels {}", levels.join(" "));
    let _ = writeln!(out, "components {}", field.names.join(" "));
    for (l, z) in levels.iter().enumerate() {
        for i in 0..n {
            let x1 = real(t.coord(i));
            for j in 0..n {
                let _ = write!(out, "{i} {j} {l} {x1} {} {z}", real(t.coord(j)));
                for c in &field.data {
                    let _ = write!(out, " {}", real(c[(l * n + i) * n + j]));
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn write(path: &Path, field: &FieldGrid) -> Result<()> {
    std::fs::write(path, to_string(field)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read(path: &Path) -> Result<FieldGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn number<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("{what}: cannot parse '{tok}'")))
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, Vec<&'a str>)> {
    let (no, text) = lines.next().ok_or_else(|| parse_err(0, format!("missing '{key}' header")))?;
    let mut toks = text.split_whitespace();
    if toks.next() != Some(key) {
        return Err(parse_err(no, format!("expected '{key}' header")));
    }
    Ok((no, toks.collect()))
}

pub fn parse(text: &str) -> Result<FieldGrid> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim_end() == TAG => {}
        Some((no, l)) => return Err(parse_err(no, format!("expected '{TAG}', found '{l}'"))),
        None => return Err(parse_err(1, "empty file")),
    }
    let (no, d) = header(&mut lines, "dims")?;
    if d.len() != 3 {
        return Err(parse_err(no, "dims needs three integers"));
    }
    let dims: [usize; 3] = [number(d[0], no, "dims")?, number(d[1], no, "dims")?, number(d[2], no, "dims")?];
    if dims[0] != dims[1] || dims[0] == 0 || dims[2] == 0 {
        return Err(Error::Structure(format!("dims {} {} {}: the torus grid must be square and non-empty", dims[0], dims[1], dims[2])));
    }
    let (no, p) = header(&mut lines, "period")?;
    let period: f64 = number(p.first().copied().unwrap_or(""), no, "period")?;
    if !(period > 0.0) {
        return Err(parse_err(no, "period must be positive"));
    }
    let (no, lv) = header(&mut lines, "levels")?;
    if lv.len() != dims[2] {
        return Err(Error::Structure(format!("line {no}: {} levels listed, dims declare {}", lv.len(), dims[2])));
    }
    let levels = lv.iter().map(|s| number(s, no, "level")).collect::<Result<Vec<f64>>>()?;
    let (no, names) = header(&mut lines, "components")?;
    if names.is_empty() {
        return Err(parse_err(no, "no components"));
    }
    let n = dims[0];
    let torus = Torus::new(period, n);
    let mut field = FieldGrid::zeros(torus, levels, &names);
    let expected = n * n * dims[2];
    let width = 6 + names.len();
    let mut count = 0;
    for (no, text) in lines {
        if text.trim().is_empty() {
            continue;
        }
        if count == expected {
            return Err(Error::Structure(format!("line {no}: more than the {expected} records declared by dims")));
        }
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != width {
            return Err(parse_err(no, format!("record {count}: expected {width} fields, found {}", toks.len())));
        }
        let (i, j, l): (usize, usize, usize) = (number(toks[0], no, "index")?, number(toks[1], no, "index")?, number(toks[2], no, "index")?);
        let (ei, ej, el) = ((count / n) % n, count % n, count / (n * n));
        if (i, j, l) != (ei, ej, el) {
            return Err(parse_err(no, format!("record {count}: indices ({i}, {j}, {l}), expected ({ei}, {ej}, {el})")));
        }
        for c in 0..names.len() {
            field.data[c][(l * n + i) * n + j] = number(toks[6 + c], no, "value")?;
        }
        count += 1;
    }
    if count < expected {
        return Err(Error::Truncated { record: count, expected });
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FieldGrid {
        let t = Torus::new(3.0, 4);
        let mut f = FieldGrid::zeros(t, vec![0.0, 0.5], &["a", "b"]);
        for (k, v) in f.data[0].iter_mut().enumerate() {
            *v = (k as f64 * 0.37).sin() / 3.0;
        }
        f.data[1][5] = -1.0e-300;
        f
    }

    #[test]
    fn round_trip_is_exact_and_canonical() {
        let f = sample();
        let s = to_string(&f);
        let g = parse(&s).unwrap();
        assert_eq!(g, f);
        assert_eq!(to_string(&g), s);
    }

    #[test]
    fn truncation_names_the_missing_record() {
        let s = to_string(&sample());
        let cut: Vec<&str> = s.lines().take(5 + 19).collect();
        assert_eq!(parse(&cut.join("\n")), Err(Error::Truncated { record: 19, expected: 32 }));
    }

    #[test]
    fn malformed_record_reports_its_line() {
        let mut lines: Vec<String> = to_string(&sample()).lines().map(String::from).collect();
        lines[7] = lines[7].replacen("0 2 0", "0 2 x", 1);
        assert!(matches!(parse(&lines.join("\n")), Err(Error::Parse { line: 8, .. })));
        let s = to_string(&sample()).replace("dims 4 4 2", "dims 4 4 3");
        assert!(matches!(parse(&s), Err(Error::Structure(_))));
    }
}
