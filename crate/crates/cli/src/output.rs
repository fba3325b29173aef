//! Versioned JSON and CSV documents. Every document starts with a header
//! naming the tool version, schema, command, seed and parameters, so a run
//! can be replayed from its output alone.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema: u32,
    pub command: String,
    pub seed: u64,
    pub params: Value,
}

impl Header {
    pub fn new(command: &str, seed: u64, params: Value) -> Self {
        Self {
            tool: "mmph",
            version: env!("CARGO_PKG_VERSION"),
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            params,
        }
    }
}

pub fn write_json<W: Write>(out: &mut W, header: &Header, result: &impl Serialize) -> Result<()> {
    let doc = json!({ "header": header, "result": result });
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    Ok(())
}

/// Header as `#` comment lines, then one CSV table.
pub fn write_csv<W: Write>(out: &mut W, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(out, "# tool={} version={} schema={}", header.tool, header.version, header.schema)?;
    writeln!(out, "# command={} seed={}", header.command, header.seed)?;
    writeln!(out, "# params={}", serde_json::to_string(&header.params)?)?;
    let mut w = csv::Writer::from_writer(&mut *out);
    w.write_record(columns)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Formats a float so that identical inputs give identical text.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "inf".into()
    }
}
