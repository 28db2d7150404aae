//! Reading and writing pass-event logs.
//!
//! Two encodings are supported, both carrying the same five fields:
//!
//! ```text
//! match_id,team_id,passer,receiver,timestamp_s
//! M1,T1,p2,p4,12.0
//! ```
//!
//! and JSON lines with identical keys. Records that fail validation are not
//! fatal; they are reported as [`Diagnostic`]s alongside the accepted events.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names of the CSV header, in canonical order.
pub const CSV_COLUMNS: [&str; 5] = ["match_id", "team_id", "passer", "receiver", "timestamp_s"];

/// One directed pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassEvent {
    pub match_id: String,
    pub team_id: String,
    pub passer: String,
    pub receiver: String,
    /// Seconds from the start of the match.
    #[serde(rename = "timestamp_s")]
    pub timestamp: f64,
}

impl PassEvent {
    pub fn new(
        match_id: impl Into<String>,
        team_id: impl Into<String>,
        passer: impl Into<String>,
        receiver: impl Into<String>,
        timestamp: f64,
    ) -> Result<Self> {
        let event = PassEvent {
            match_id: match_id.into(),
            team_id: team_id.into(),
            passer: passer.into(),
            receiver: receiver.into(),
            timestamp,
        };
        event
            .check()
            .map_err(|reason| Error::Domain(reason.to_string()))?;
        Ok(event)
    }

    /// Returns the reason this event violates the record invariants, if any.
    pub fn check(&self) -> std::result::Result<(), &'static str> {
        if self.match_id.is_empty() {
            return Err("empty match_id");
        }
        if self.team_id.is_empty() {
            return Err("empty team_id");
        }
        if self.passer.is_empty() {
            return Err("empty passer");
        }
        if self.receiver.is_empty() {
            return Err("empty receiver");
        }
        if self.passer == self.receiver {
            return Err("self-pass");
        }
        if !self.timestamp.is_finite() {
            return Err("non-finite timestamp");
        }
        if self.timestamp < 0.0 {
            return Err("negative timestamp");
        }
        Ok(())
    }
}

/// Input encoding of a pass-event stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Guesses the format from a file extension; anything but `jsonl`/`ndjson` is CSV.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => Format::Jsonl,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::Domain(format!("unknown format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        })
    }
}

/// A rejected input record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line number in the input stream.
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line={} reason={}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedEvents {
    pub events: Vec<PassEvent>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses a pass-event stream. Events come back in input order.
pub fn parse_pass_events<R: Read>(mut reader: R, format: Format) -> Result<ParsedEvents> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(ParsedEvents::default());
    }
    match format {
        Format::Csv => parse_csv(&bytes),
        Format::Jsonl => parse_jsonl(&bytes),
    }
}

fn parse_csv(bytes: &[u8]) -> Result<ParsedEvents> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let headers = rdr.headers()?.clone();
    let mut columns = [0usize; 5];
    for (slot, name) in columns.iter_mut().zip(CSV_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column `{name}` in csv header")))?;
    }

    let mut out = ParsedEvents::default();
    for record in rdr.records() {
        let record = match record {
            Ok(record) => record,
            Err(err) if err.is_io_error() => return Err(err.into()),
            Err(err) => {
                let line = err.position().map_or(0, |p| p.line());
                out.diagnostics.push(Diagnostic {
                    line,
                    reason: err.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            out.diagnostics.push(Diagnostic {
                line,
                reason: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
            continue;
        }
        let field = |i: usize| record.get(columns[i]).unwrap_or_default().to_string();
        let timestamp = match field(4).parse::<f64>() {
            Ok(t) => t,
            Err(_) => {
                out.diagnostics.push(Diagnostic {
                    line,
                    reason: format!("unparsable timestamp `{}`", field(4)),
                });
                continue;
            }
        };
        let event = PassEvent {
            match_id: field(0),
            team_id: field(1),
            passer: field(2),
            receiver: field(3),
            timestamp,
        };
        match event.check() {
            Ok(()) => out.events.push(event),
            Err(reason) => out.diagnostics.push(Diagnostic {
                line,
                reason: reason.to_string(),
            }),
        }
    }
    Ok(out)
}

fn parse_jsonl(bytes: &[u8]) -> Result<ParsedEvents> {
    let text = match std::str::from_utf8(bytes) {
        Ok(text) => text,
        Err(err) => {
            let line = bytes[..err.valid_up_to()]
                .iter()
                .filter(|&&b| b == b'\n')
                .count() as u64
                + 1;
            return Err(Error::Format(format!("invalid utf-8 at line {line}")));
        }
    };
    let mut out = ParsedEvents::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<PassEvent>(raw) {
            Ok(event) => match event.check() {
                Ok(()) => out.events.push(event),
                Err(reason) => out.diagnostics.push(Diagnostic {
                    line,
                    reason: reason.to_string(),
                }),
            },
            Err(err) => out.diagnostics.push(Diagnostic {
                line,
                reason: err.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Writes events in the given format, header included for CSV.
pub fn write_pass_events<W: Write>(writer: W, events: &[PassEvent], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(writer);
            wtr.write_record(CSV_COLUMNS)?;
            for e in events {
                wtr.write_record([
                    e.match_id.as_str(),
                    e.team_id.as_str(),
                    e.passer.as_str(),
                    e.receiver.as_str(),
                    &e.timestamp.to_string(),
                ])?;
            }
            wtr.flush()?;
        }
        Format::Jsonl => {
            let mut writer = std::io::BufWriter::new(writer);
            for e in events {
                serde_json::to_writer(&mut writer, e)?;
                writer.write_all(b"\n")?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}

/// All passes one team made in one match, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchEventLog {
    match_id: String,
    team_id: String,
    events: Vec<PassEvent>,
}

impl MatchEventLog {
    /// Builds a log, stably sorting `events` by timestamp.
    pub fn new(
        match_id: impl Into<String>,
        team_id: impl Into<String>,
        mut events: Vec<PassEvent>,
    ) -> Result<Self> {
        let match_id = match_id.into();
        let team_id = team_id.into();
        if let Some(e) = events
            .iter()
            .find(|e| e.match_id != match_id || e.team_id != team_id)
        {
            return Err(Error::Contract(format!(
                "event ({}, {}) does not belong to log ({match_id}, {team_id})",
                e.match_id, e.team_id
            )));
        }
        events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Ok(MatchEventLog {
            match_id,
            team_id,
            events,
        })
    }

    pub fn match_id(&self) -> &str {
        &self.match_id
    }

    pub fn team_id(&self) -> &str {
        &self.team_id
    }

    pub fn events(&self) -> &[PassEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<PassEvent> {
        self.events
    }
}

/// Partitions events into one log per `(match_id, team_id)`, ordered by key.
pub fn group_by_match(events: Vec<PassEvent>) -> Vec<MatchEventLog> {
    let mut groups: BTreeMap<(String, String), Vec<PassEvent>> = BTreeMap::new();
    for e in events {
        groups
            .entry((e.match_id.clone(), e.team_id.clone()))
            .or_default()
            .push(e);
    }
    groups
        .into_iter()
        .map(|((match_id, team_id), mut events)| {
            events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
            MatchEventLog {
                match_id,
                team_id,
                events,
            }
        })
        .collect()
}
