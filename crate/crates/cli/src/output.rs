//! Output files. Every file starts with the tool version and the resolved
//! configuration; nothing time- or host-dependent is written.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use qspace_core::csv::CsvTable;
use qspace_core::exec::Execution;
use serde_json::{json, Map, Value};

use crate::config::{Common, Resolver, DEFAULT_OUT_DIR, DEFAULT_SEED, OUT_DIR_ENV};

pub const TOOL: &str = "qspace";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Settings shared by every subcommand, resolved before the command's own.
pub struct Setup {
    pub resolver: Resolver,
    pub out_dir: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub exec: Execution,
}

impl Setup {
    pub fn new(common: &Common) -> Result<Self> {
        let mut resolver = Resolver::load(common.config.as_deref())?;
        // flag > environment > config file > default
        let file_dir: Option<String> = resolver.get_unrecorded("out-dir", None)?;
        let out_dir = common
            .out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or(file_dir.map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        let format = match resolver.get("format", common.format.clone(), "json".to_string())?.as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => bail!("unknown format `{other}` (expected csv or json)"),
        };
        let seed = resolver.get("seed", common.seed, DEFAULT_SEED)?;
        let exec = match resolver.get("exec", common.exec.clone(), "parallel".to_string())?.as_str() {
            "parallel" => Execution::Parallel,
            "sequential" => Execution::Sequential,
            other => bail!("unknown execution mode `{other}` (expected parallel or sequential)"),
        };
        Ok(Self {
            resolver,
            out_dir,
            format,
            seed,
            exec,
        })
    }

    /// Closes configuration resolution and prepares the output directory.
    pub fn into_output(self, command: &str) -> Result<Output> {
        let config = self.resolver.finish()?;
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(Output {
            command: command.to_string(),
            dir: self.out_dir,
            format: self.format,
            config,
            primary: None,
            files: Vec::new(),
        })
    }
}

/// Result of a completed run.
#[derive(Debug)]
pub struct Outcome {
    pub pass: bool,
    pub failures: Vec<String>,
}

pub struct Output {
    command: String,
    dir: PathBuf,
    format: Format,
    config: Vec<(String, String)>,
    primary: Option<String>,
    files: Vec<String>,
}

impl Output {
    fn preamble(&self) -> Vec<String> {
        let mut lines = vec![format!("{TOOL} {VERSION}"), format!("command = {}", self.command)];
        lines.extend(self.config.iter().map(|(k, v)| format!("{k} = {v}")));
        lines
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes a CSV file; the first one written is the run's main table.
    pub fn csv(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        let mut t = table.clone();
        let mut comments = self.preamble();
        comments.append(&mut t.comments);
        t.comments = comments;
        let body = t.render();
        if self.primary.is_none() {
            self.primary = Some(body.clone());
        }
        self.write(name, &body)
    }

    /// Writes a plain-text report with a `#` preamble.
    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let mut s: String = self.preamble().iter().map(|l| format!("# {l}\n")).collect();
        s.push_str(body);
        self.write(name, &s)
    }

    /// Writes `summary.json` and prints the requested view on stdout.
    pub fn finish(mut self, results: Value, failures: Vec<String>) -> Result<Outcome> {
        let config: Map<String, Value> = self
            .config
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let pass = failures.is_empty();
        let mut files = self.files.clone();
        files.push("summary.json".to_string());
        let summary = json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "config": config,
            "results": results,
            "pass": pass,
            "failures": failures,
            "files": files,
        });
        let mut body = serde_json::to_string_pretty(&summary)?;
        body.push('\n');
        self.write("summary.json", &body)?;
        match (self.format, &self.primary) {
            (Format::Csv, Some(csv)) => print!("{csv}"),
            _ => print!("{body}"),
        }
        Ok(Outcome { pass, failures })
    }
}
