//! Output files, run manifests and the exit-code contract.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ngbound::NgbError;
use serde::Serialize;

/// Everything that ends a run early. Each kind has a fixed exit code.
#[derive(Debug)]
pub enum Failure {
    /// Output path cannot be created or written.
    Write(String),
    /// A checked state lies below the bound.
    Violation(String),
    /// State file missing, malformed or unphysical.
    InvalidState(String),
    /// A verification suite reported violations.
    Suite(String),
    /// Anything else: bad environment, library errors.
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Write(_) => 2,
            Failure::Violation(_) => 3,
            Failure::InvalidState(_) => 4,
            Failure::Suite(_) => 5,
            Failure::Other(_) => 1,
        })
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Write(m)
            | Failure::Violation(m)
            | Failure::InvalidState(m)
            | Failure::Suite(m)
            | Failure::Other(m) => m,
        }
    }
}

impl From<NgbError> for Failure {
    fn from(e: NgbError) -> Self {
        Failure::Other(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Library defaults, echoed into every manifest.
#[derive(Serialize)]
struct Defaults {
    dim: usize,
    grid: usize,
    seed: u64,
}

/// Config echo written next to every output.
#[derive(Serialize)]
pub struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    threads: usize,
    defaults: Defaults,
    outputs: Vec<String>,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(command: &'a str, config: &'a C, outputs: &[&Path]) -> Self {
        Self {
            tool: "ngbound",
            version: ngbound::VERSION,
            command,
            config,
            threads: rayon::current_num_threads(),
            defaults: Defaults { dim: ngbound::fock::DEFAULT_DIM, grid: 201, seed: 0 },
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Creates `path` and hands a buffered writer to `body`. Any failure to
/// open or write maps to [`Failure::Write`].
pub fn write_file<F>(path: &Path, body: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<File>) -> ngbound::Result<()>,
{
    let file = File::create(path).map_err(|e| Failure::Write(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(|e| match e {
        NgbError::Io(m) => Failure::Write(format!("{}: {m}", path.display())),
        other => Failure::Other(other.to_string()),
    })?;
    w.flush().map_err(|e| Failure::Write(format!("{}: {e}", path.display())))
}

/// Writes the data file, then its manifest.
pub fn write_with_manifest<C, F>(command: &str, config: &C, out: &Path, body: F) -> Result<(), Failure>
where
    C: Serialize,
    F: FnOnce(&mut BufWriter<File>) -> ngbound::Result<()>,
{
    write_file(out, body)?;
    let manifest = Manifest::new(command, config, &[out]);
    write_file(&manifest_path(out), |w| ngbound::bound::write_json(&manifest, w))
}

pub fn write_rows<W: Write, R: Serialize>(rows: &[R], format: Format, out: W) -> ngbound::Result<()> {
    match format {
        Format::Json => ngbound::bound::write_json(rows, out),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}
