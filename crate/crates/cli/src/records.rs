//! Curve files and the tabular form of spectrum records.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use billiard_spectra::billiard::Table;
use billiard_spectra::curves::CurveSpec;
use billiard_spectra::orbits::{Diagnostics, Flag, SpectrumRecord};
use billiard_spectra::{FourierCurve, Real};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Reads a curve from a TOML or JSON file.
pub fn load_curve(path: &Path) -> Result<FourierCurve> {
    let text = fs::read_to_string(path).with_context(|| format!("reading curve file {}", path.display()))?;
    let spec = parse_curve(&text, path)?;
    FourierCurve::from_spec(&spec).with_context(|| format!("curve in {}", path.display()))
}

fn parse_curve(text: &str, path: &Path) -> Result<CurveSpec> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "json" => Ok(serde_json::from_str(text)?),
        "toml" => Ok(toml::from_str(text)?),
        _ => serde_json::from_str(text)
            .or_else(|_| toml::from_str(text))
            .with_context(|| format!("{} is neither JSON nor TOML", path.display())),
    }
}

/// SHA-256 of the canonical JSON of the curve.
pub fn curve_hash(curve: &FourierCurve) -> String {
    let canonical = serde_json::to_string(&curve.to_spec()).expect("curve specs serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Output format of `spectrum`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// JSONL for `.jsonl`/`.json` paths, CSV otherwise.
    pub fn guess(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Format::Jsonl,
            _ => Format::Csv,
        }
    }
}

/// One output row. Reals are decimal strings carrying the full working
/// precision of the record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub p: u64,
    pub q: u64,
    pub delta: String,
    pub action_min: String,
    pub action_minimax: String,
    pub bits: u32,
    pub flags: String,
}

fn decimal(x: &Real) -> String {
    x.to_decimal(x.full_digits())
}

impl Row {
    pub fn from_record(r: &SpectrumRecord) -> Row {
        Row {
            p: r.p,
            q: r.q,
            delta: decimal(&r.delta),
            action_min: decimal(&r.action_min),
            action_minimax: decimal(&r.action_minimax),
            bits: r.bits,
            flags: r.flags_string(),
        }
    }

    pub fn to_record(&self, table: Table) -> Result<SpectrumRecord> {
        let parse = |s: &str| Real::parse(self.bits, s).with_context(|| format!("bad number {s:?} in ({}, {})", self.p, self.q));
        let flags = self
            .flags
            .split('|')
            .filter(|f| !f.is_empty())
            .map(|f| f.parse::<Flag>().map_err(anyhow::Error::from))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectrumRecord {
            p: self.p,
            q: self.q,
            table,
            delta: parse(&self.delta)?,
            action_min: parse(&self.action_min)?,
            action_minimax: parse(&self.action_minimax)?,
            bits: self.bits,
            flags,
            diagnostics: Diagnostics::default(),
        })
    }
}

/// Reads rows from a CSV or JSONL file, sniffing the format from the first
/// non-blank character.
pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
            .collect()
    } else {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let rows = reader.deserialize().collect::<std::result::Result<Vec<Row>, _>>();
        rows.with_context(|| format!("parsing CSV {}", path.display()))
    }
}

/// Writes rows, with a CSV header only when `header` is set.
pub fn write_rows<W: Write>(out: W, rows: &[Row], format: Format, header: bool) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            let mut out = out;
            for row in rows {
                serde_json::to_writer(&mut out, row)?;
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// True when the file exists and holds at least one line.
pub fn has_content(path: &Path) -> Result<bool> {
    match fs::File::open(path) {
        Ok(f) => Ok(BufReader::new(f).lines().next().transpose()?.is_some()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(false),
        Err(e) => bail!("opening {}: {e}", path.display()),
    }
}
