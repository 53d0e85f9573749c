//! Config-driven experiment runner: scenarios, traces, artifact tables and goldens.

mod config;
mod scenarios;
mod trace;


pub use config::{
    BoundedParams, DiophSection, ExpansionParams, ForcingMode, HomologicalSection, KamSection,
    OscillatorSection, PoincareParams, ResonantParams, RunConfig, Scenario, SimulateParams,
    SmallTwistSection,
};
pub use scenarios::oscillator_spec;
pub use trace::{compare_golden, GoldenReport, GoldenTolerances, RunTrace, TraceStep, Verdict};

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("golden schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: Scenario,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Tab-separated numeric table written at 17 significant digits.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, stamp: &str) -> String {
        let mut out = format!("{stamp}\n{}\n", self.columns.join("\t"));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub trace: RunTrace,
    pub artifacts: Vec<Artifact>,
}

/// `# apkam <version> <scenario> config-sha256 <hash>`.
pub fn stamp(config: &RunConfig) -> String {
    format!(
        "# apkam {VERSION} {} config-sha256 {}",
        config.scenario,
        config.hash()
    )
}

/// Executes the scenario; every table and series file carries the stamp line.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let start = Instant::now();
    let out = scenarios::dispatch(config).map_err(|source| CliError::Scenario {
        scenario: config.scenario,
        source,
    })?;
    let runtime = start.elapsed().as_secs_f64();
    let stamp = stamp(config);
    let mut artifacts: Vec<Artifact> = out
        .tables
        .iter()
        .map(|(name, t)| Artifact {
            name: name.clone(),
            body: t.render(&stamp),
        })
        .collect();
    artifacts.extend(out.files.into_iter().map(|a| Artifact {
        body: format!("{stamp}\n{}", a.body),
        name: a.name,
    }));
    let trace = RunTrace {
        scenario: config.scenario.id().to_string(),
        config_hash: config.hash(),
        version: VERSION.to_string(),
        verdict: out.verdict,
        summary: out.summary,
        steps: out.steps,
        notes: out.notes,
        runtime_seconds: runtime,
    };
    trace.check_monotone()?;
    Ok(RunOutcome {
        config: config.clone(),
        trace,
        artifacts,
    })
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `config.toml`, `trace.toml` and the artifacts into `dir`.
pub fn write_outcome(outcome: &RunOutcome, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write(&dir.join("config.toml"), &outcome.config.to_toml())?;
    write(&dir.join("trace.toml"), &outcome.trace.to_toml())?;
    for a in &outcome.artifacts {
        write(&dir.join(&a.name), &a.body)?;
    }
    Ok(())
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    RunConfig::from_toml(&text)
}

pub fn read_trace(path: &Path) -> Result<RunTrace, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    RunTrace::from_toml(&text)
}
