use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use sha2::{Digest, Sha256};

use flowmotif_core::{group_by_match, parse_pass_events, Format, MatchEventLog};

/// An error together with the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad input, bad arguments or a domain violation: exit 2.
    Input(anyhow::Error),
    /// Anything else: exit 1.
    Internal(anyhow::Error),
}

impl Failure {
    pub fn input<E: Into<anyhow::Error>>(e: E) -> Self {
        Failure::Input(e.into())
    }

    pub fn internal<E: Into<anyhow::Error>>(e: E) -> Self {
        Failure::Internal(e.into())
    }

    pub fn context<C: Display + Send + Sync + 'static>(self, c: C) -> Self {
        match self {
            Failure::Input(e) => Failure::Input(e.context(c)),
            Failure::Internal(e) => Failure::Internal(e.context(c)),
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Internal(e) => e,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

pub fn open(path: &Path) -> Result<File, Failure> {
    File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(Failure::Input)
}

/// Files named by `inputs`; directories contribute their files with one of
/// `extensions`, sorted by name.
pub fn expand_inputs(inputs: &[PathBuf], extensions: &[&str]) -> Result<Vec<PathBuf>, Failure> {
    if inputs.is_empty() {
        return Err(Failure::Input(anyhow!("no input files given")));
    }
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found = Vec::new();
            let entries = std::fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))
                .map_err(Failure::Input)?;
            for entry in entries {
                let path = entry.map_err(Failure::input)?.path();
                let matches = path
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| extensions.contains(&e.to_ascii_lowercase().as_str()));
                if matches && path.is_file() {
                    found.push(path);
                }
            }
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            return Err(Failure::Input(anyhow!(
                "{}: no such file or directory",
                input.display()
            )));
        }
    }
    Ok(files)
}

pub fn expand_event_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    expand_inputs(inputs, &["csv", "jsonl", "ndjson"])
}

/// Parses every file and groups the events by match and team. Malformed
/// records are reported on stderr and make the whole load fail.
pub fn load_logs(files: &[PathBuf], format: Option<Format>) -> Result<Vec<MatchEventLog>, Failure> {
    let mut events = Vec::new();
    let mut bad = 0usize;
    for path in files {
        let format = format.unwrap_or_else(|| Format::from_path(path));
        let parsed = parse_pass_events(open(path)?, format)
            .map_err(|e| Failure::input(e).context(path.display().to_string()))?;
        for d in &parsed.diagnostics {
            eprintln!("{d}");
        }
        if !parsed.diagnostics.is_empty() {
            eprintln!(
                "flowmotif: {}: {} malformed record(s)",
                path.display(),
                parsed.diagnostics.len()
            );
        }
        bad += parsed.diagnostics.len();
        events.extend(parsed.events);
    }
    if bad > 0 {
        return Err(Failure::Input(anyhow!(
            "{bad} malformed record(s) in input"
        )));
    }
    Ok(group_by_match(events))
}

pub fn digests(paths: &[PathBuf]) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for path in paths {
        let bytes = std::fs::read(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Input)?;
        out.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
    }
    Ok(out)
}

/// Writes named outputs into the `--out` directory and remembers them.
pub struct Outputs {
    dir: Option<PathBuf>,
    written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Outputs {
            dir,
            written: Vec::new(),
        }
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn require_dir(&self) -> Result<(), Failure> {
        match self.dir {
            Some(_) => Ok(()),
            None => Err(Failure::Input(anyhow!("this command needs --out <dir>"))),
        }
    }

    fn put(&self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let dir = self.dir.as_ref().expect("checked by caller");
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(Failure::Internal)?;
        let path = dir.join(name);
        std::fs::write(&path, bytes)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Internal)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        self.require_dir()?;
        self.put(name, bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes into `--out` when given, otherwise to stdout.
    pub fn write_or_stdout(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        if self.dir.is_some() {
            return self.write(name, bytes);
        }
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(bytes)
            .and_then(|()| stdout.flush())
            .map_err(Failure::internal)
    }

    pub fn write_manifest(&self, bytes: &[u8]) -> Result<(), Failure> {
        self.put("manifest.json", bytes)
    }
}
