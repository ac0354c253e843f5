//! Certificate and table writers. Output is a pure function of the inputs:
//! struct field order is fixed and no timestamps are written.

use std::io::Write;
use std::path::Path;

use hk_dichotomy::norms::{core_samples, NormSequence};
use serde::Serialize;

use crate::analysis::Certificate;
use crate::error::CliError;

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(p.display().to_string(), e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io("stdout".into(), e)),
    }
}

/// One `<id>.csv` per condition with columns `n, raw_min, envelope, method`.
pub fn write_condition_csv(cert: &Certificate, dir: &Path) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
    let mut written = Vec::new();
    for c in &cert.conditions {
        let name = format!("{}.csv", c.estimate.id);
        let path = dir.join(&name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["n", "raw_min", "envelope", "method"])?;
        let method = serde_json::to_value(c.estimate.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        for (n, (raw, env)) in c.estimate.raw.iter().zip(&c.estimate.envelope).enumerate() {
            w.write_record([n.to_string(), format_value(*raw), format_value(*env), method.clone()])?;
        }
        w.flush().map_err(|e| CliError::Io(path.display().to_string(), e))?;
        written.push(name);
    }
    Ok(written)
}

/// Shortest round-trip form; infinities as `inf`.
pub fn format_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

/// Table of `|||x|||_n` for the base, dichotomy and growth norms on the
/// index-independent samples (vertices, axes and Halton points).
pub fn norms_table(
    base: &NormSequence<'_, f64>,
    dichotomy: &NormSequence<'_, f64>,
    growth: &NormSequence<'_, f64>,
) -> Result<String, CliError> {
    let split = base.split();
    let samples = core_samples::<f64>(split.dim(), split.norm());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n".to_string(), "sample".to_string()];
    header.extend((0..split.dim()).map(|i| format!("x{i}")));
    header.extend(["base", "dichotomy", "growth"].map(String::from));
    w.write_record(&header)?;
    for n in 0..=split.window() {
        for (s, x) in samples.iter().enumerate() {
            let mut row = vec![n.to_string(), s.to_string()];
            row.extend(x.iter().map(|v| format_value(*v)));
            row.extend([base, dichotomy, growth].iter().map(|norm| format_value(norm.eval(n, x))));
            w.write_record(&row)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io("csv buffer".into(), e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip() {
        for v in [1.0, 0.1, 1.0 / 3.0, 7.896296e13, f64::MIN_POSITIVE] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_value(f64::INFINITY), "inf");
    }

    #[test]
    fn json_ends_with_newline() {
        assert_eq!(to_json(&[1, 2]), "[\n  1,\n  2\n]\n");
    }
}
