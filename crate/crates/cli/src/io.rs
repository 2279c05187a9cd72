//! File formats: sample CSV (one value per line, `#` comments, optional `x`
//! header) and JSON documents. Numbers are written with 17 significant
//! digits so every value round-trips exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::manifest::RunManifest;

/// Write a sample as CSV. The manifest rides along as `#` comment lines so
/// the document stays self-describing while remaining valid input.
pub fn write_sample_csv(path: &Path, values: &[f64], manifest: &RunManifest) -> anyhow::Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "# manifest: {}\n",
        serde_json::to_string(manifest)?
    ));
    out.push_str("x\n");
    for v in values {
        out.push_str(&format!("{v:.16e}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Read a sample CSV. Errors name the offending line; values below 1
/// violate the support assumption and are rejected.
pub fn read_sample_csv(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "x" && values.is_empty() {
            continue; // header
        }
        let v: f64 = line.parse().map_err(|_| {
            anyhow::anyhow!("{}:{line_no}: not a number: '{line}'", path.display())
        })?;
        if !v.is_finite() {
            anyhow::bail!("{}:{line_no}: non-finite value", path.display());
        }
        if v < 1.0 {
            anyhow::bail!(
                "{}:{line_no}: value {v} < 1 violates the X >= 1 support assumption",
                path.display()
            );
        }
        values.push(v);
    }
    if values.len() < 2 {
        anyhow::bail!("{}: need at least 2 values", path.display());
    }
    Ok(values)
}

pub fn path_list(out: &Option<PathBuf>) -> Vec<String> {
    out.iter().map(|p| p.display().to_string()).collect()
}

/// Emit JSON to a file, or pretty-printed to stdout when no path is given.
pub fn emit_json(out: &Option<PathBuf>, doc: &serde_json::Value) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let mut f = fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            serde_json::to_writer_pretty(&mut f, doc)?;
            f.write_all(b"\n")?;
        }
        None => {
            println!("{}", serde_json::to_string_pretty(doc)?);
        }
    }
    Ok(())
}

/// Emit JSON to a file when a path is given; silent otherwise (used by
/// commands that already print a table).
pub fn emit_json_to(out: &Option<PathBuf>, doc: &serde_json::Value) -> anyhow::Result<()> {
    if let Some(path) = out {
        let mut f =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(&mut f, doc)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}
