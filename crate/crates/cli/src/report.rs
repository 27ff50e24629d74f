//! CSV and JSON artifact writers. CSV uses '.' decimals, comma separators
//! and a header row; floats print in shortest round-trip form so artifacts
//! are byte-stable across runs and worker counts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

pub fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> anyhow::Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text.as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Join float fields into a CSV row.
pub fn row(fields: &[f64]) -> String {
    fields.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}
