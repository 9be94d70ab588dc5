//! Plain-text coefficient files for spin-glass instances.
//!
//! ```text
//! N seed
//! i j J_ij        (N(N-1)/2 lines, i < j, row-major)
//! i h_i           (N lines)
//! ```
//!
//! Indices are 0-based and reals carry 17 significant digits.

use std::fmt::Write as _;

use anyhow::{bail, ensure, Context};
use varanneal_core::models::SpinGlassInstance;

use crate::output::format_float;

pub fn write_instance(inst: &SpinGlassInstance) -> String {
    let n = inst.n;
    let mut out = format!("{n} {}\n", inst.seed);
    for i in 0..n {
        for j in (i + 1)..n {
            let _ = writeln!(out, "{i} {j} {}", format_float(inst.coupling(i, j)));
        }
    }
    for (i, h) in inst.fields.iter().enumerate() {
        let _ = writeln!(out, "{i} {}", format_float(*h));
    }
    out
}

pub fn parse_instance(text: &str) -> anyhow::Result<SpinGlassInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, header) = lines.next().context("empty coefficient file")?;
    let head: Vec<&str> = header.split_whitespace().collect();
    ensure!(head.len() == 2, "line {line}: expected `N seed`");
    let n: usize = head[0]
        .parse()
        .with_context(|| format!("line {line}: bad N"))?;
    let seed: u64 = head[1]
        .parse()
        .with_context(|| format!("line {line}: bad seed"))?;
    ensure!(n >= 2, "line {line}: N must be at least 2");

    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let (line, l) = lines
                .next()
                .with_context(|| format!("missing coupling ({i}, {j})"))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            ensure!(f.len() == 3, "line {line}: expected `i j J_ij`");
            let (a, b): (usize, usize) = (f[0].parse()?, f[1].parse()?);
            if (a, b) != (i, j) {
                bail!("line {line}: expected indices {i} {j}, found {a} {b}");
            }
            let v: f64 = f[2]
                .parse()
                .with_context(|| format!("line {line}: bad coupling"))?;
            ensure!(v > 0.0 && v < 1.0, "line {line}: coupling {v} outside (0, 1)");
            upper.push(v);
        }
    }
    let mut fields = Vec::with_capacity(n);
    for i in 0..n {
        let (line, l) = lines
            .next()
            .with_context(|| format!("missing field {i}"))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        ensure!(f.len() == 2, "line {line}: expected `i h_i`");
        let a: usize = f[0].parse()?;
        ensure!(a == i, "line {line}: expected index {i}, found {a}");
        let v: f64 = f[1]
            .parse()
            .with_context(|| format!("line {line}: bad field"))?;
        ensure!(v > -0.5 && v < 0.5, "line {line}: field {v} outside (-0.5, 0.5)");
        fields.push(v);
    }
    if let Some((line, _)) = lines.next() {
        bail!("line {line}: trailing content");
    }
    Ok(SpinGlassInstance::from_parts(n, seed, &upper, &fields)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use varanneal_core::models::sample_spin_glass;

    #[test]
    fn round_trip_is_bit_exact() {
        for seed in [0, 7, u64::MAX] {
            let inst = sample_spin_glass(8, seed);
            let text = write_instance(&inst);
            assert_eq!(text.lines().count(), 1 + 28 + 8);
            assert_eq!(parse_instance(&text).unwrap(), inst);
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        let inst = sample_spin_glass(3, 1);
        let text = write_instance(&inst);
        let swapped = text.replacen("0 1 ", "1 0 ", 1);
        assert!(parse_instance(&swapped).is_err());
        let truncated: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(parse_instance(&truncated).is_err());
        assert!(parse_instance(&format!("{text}0 0.1\n")).is_err());
        assert!(parse_instance("3\n").is_err());
    }
}
