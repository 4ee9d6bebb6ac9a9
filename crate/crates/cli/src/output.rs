//! Output files. Every file starts with the tool version and the arguments it
//! was produced with: a `provenance` object in JSON, `#` comment lines in CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub args: Vec<String>,
}

impl Provenance {
    pub fn from_env() -> Self {
        Self {
            tool: "spikesel",
            version: env!("CARGO_PKG_VERSION"),
            args: std::env::args().skip(1).collect(),
        }
    }
}

#[derive(Serialize)]
struct WithProvenance<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::internal(format!("writing output: {e}"))
}

pub fn write_json<T: Serialize>(path: Option<&Path>, prov: &Provenance, body: &T) -> Result<(), CliError> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, &WithProvenance { provenance: prov, body }).map_err(io_err)?;
    writeln!(w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Writes `# ` provenance lines, then `rows` as CSV with a header row.
pub fn write_csv<R: Serialize>(path: Option<&Path>, prov: &Provenance, rows: &[R]) -> Result<(), CliError> {
    let mut w = sink(path)?;
    writeln!(w, "# {} {}", prov.tool, prov.version).map_err(io_err)?;
    writeln!(w, "# args: {}", prov.args.join(" ")).map_err(io_err)?;
    {
        let mut cw = csv::Writer::from_writer(&mut w);
        for r in rows {
            cw.serialize(r).map_err(io_err)?;
        }
        cw.flush().map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
