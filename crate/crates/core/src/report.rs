//! Machine-readable outputs: CSV tables, dendrogram JSON and the run manifest.
//!
//! Floats are written in shortest round-trip form so that every file is a
//! pure function of its inputs.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analytics::{
    ClusterAssignment, Dendrogram, DendrogramNode, PcaProjection, TeamFingerprint,
};
use crate::error::{Error, Result};
use crate::motif::{enumerate_patterns, MotifCountVector, MotifPattern};
use crate::null_model::{ZScoreEntry, ZScoreProfile};

pub mod svg;

pub const MOTIF_COUNTS_HEADER: [&str; 5] = ["match_id", "team_id", "k", "pattern", "count"];
pub const ZSCORES_HEADER: [&str; 9] = [
    "match_id",
    "team_id",
    "k",
    "pattern",
    "count",
    "null_mean",
    "null_std",
    "z",
    "degenerate",
];

#[derive(Debug, Serialize)]
struct CountRow<'a> {
    match_id: &'a str,
    team_id: &'a str,
    k: usize,
    pattern: &'a str,
    count: u64,
}

pub fn write_motif_counts_csv<W: Write>(writer: W, vectors: &[MotifCountVector]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    wtr.write_record(MOTIF_COUNTS_HEADER)?;
    for v in vectors {
        for (pattern, &count) in &v.counts {
            wtr.serialize(CountRow {
                match_id: &v.match_id,
                team_id: &v.team_id,
                k: v.k,
                pattern: pattern.as_str(),
                count,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ZRow {
    match_id: String,
    team_id: String,
    k: usize,
    pattern: MotifPattern,
    count: u64,
    null_mean: f64,
    null_std: f64,
    z: f64,
    degenerate: bool,
}

pub fn write_zscores_csv<W: Write>(writer: W, profiles: &[ZScoreProfile]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    wtr.write_record(ZSCORES_HEADER)?;
    for p in profiles {
        for (pattern, e) in &p.entries {
            wtr.serialize(ZRow {
                match_id: p.match_id.clone(),
                team_id: p.team_id.clone(),
                k: p.k,
                pattern: pattern.clone(),
                count: e.count,
                null_mean: e.null_mean,
                null_std: e.null_std,
                z: e.z,
                degenerate: e.degenerate,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a z-score table back into profiles, in order of first appearance.
pub fn read_zscores_csv<R: Read>(reader: R) -> Result<Vec<ZScoreProfile>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(rdr.headers()?, &ZSCORES_HEADER)?;
    let mut order: Vec<(String, String)> = Vec::new();
    let mut profiles: BTreeMap<(String, String), ZScoreProfile> = BTreeMap::new();
    for row in rdr.deserialize::<ZRow>() {
        let row = row?;
        if !row.z.is_finite() {
            return Err(Error::Format(format!(
                "non-finite z for {} {}",
                row.match_id, row.pattern
            )));
        }
        let key = (row.match_id.clone(), row.team_id.clone());
        let profile = profiles.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            ZScoreProfile {
                match_id: row.match_id.clone(),
                team_id: row.team_id.clone(),
                k: row.k,
                entries: BTreeMap::new(),
            }
        });
        if profile.k != row.k || row.pattern.k() != row.k {
            return Err(Error::Format(format!(
                "inconsistent k for match {}",
                row.match_id
            )));
        }
        let entry = ZScoreEntry {
            count: row.count,
            null_mean: row.null_mean,
            null_std: row.null_std,
            z: row.z,
            degenerate: row.degenerate,
        };
        if profile.entries.insert(row.pattern.clone(), entry).is_some() {
            return Err(Error::Format(format!(
                "duplicate pattern {} for match {} team {}",
                row.pattern, row.match_id, row.team_id
            )));
        }
    }
    order
        .into_iter()
        .map(|key| {
            let p = profiles.remove(&key).unwrap();
            let expected = enumerate_patterns(p.k)?;
            if !p.entries.keys().eq(expected.iter()) {
                return Err(Error::Format(format!(
                    "match {} team {} does not list every k = {} pattern",
                    p.match_id, p.team_id, p.k
                )));
            }
            Ok(p)
        })
        .collect()
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    for name in expected {
        if !found.iter().any(|h| h == *name) {
            return Err(Error::Format(format!(
                "missing column `{name}` in csv header"
            )));
        }
    }
    Ok(())
}

/// Wide table: `team_id,k,matches_used,<one column per pattern>`.
pub fn write_fingerprints_csv<W: Write>(writer: W, fingerprints: &[TeamFingerprint]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .flexible(false)
        .from_writer(writer);
    let patterns: Vec<String> = fingerprints
        .first()
        .map(|f| f.patterns.iter().map(|p| p.to_string()).collect())
        .unwrap_or_default();
    let mut header = vec!["team_id".to_string(), "k".into(), "matches_used".into()];
    header.extend(patterns.iter().cloned());
    wtr.write_record(&header)?;
    for f in fingerprints {
        if f.patterns
            .iter()
            .map(|p| p.as_str())
            .ne(patterns.iter().map(String::as_str))
        {
            return Err(Error::Contract(
                "fingerprints have different pattern sets".into(),
            ));
        }
        let mut record = vec![
            f.team_id.clone(),
            f.k.to_string(),
            f.matches_used.to_string(),
        ];
        record.extend(f.features.iter().map(f64::to_string));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_fingerprints_csv<R: Read>(reader: R) -> Result<Vec<TeamFingerprint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    check_header(&headers, &["team_id", "k", "matches_used"])?;
    if headers.iter().take(3).ne(["team_id", "k", "matches_used"]) {
        return Err(Error::Format(
            "fingerprint header must start with team_id,k,matches_used".into(),
        ));
    }
    let patterns: Vec<MotifPattern> = headers
        .iter()
        .skip(3)
        .map(str::parse)
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Format(format!("line {line}: {what}"));
        let k: usize = record[1].parse().map_err(|_| bad("invalid k"))?;
        if let Some(p) = patterns.iter().find(|p| p.k() != k) {
            return Err(bad(&format!("pattern {p} does not have k = {k}")));
        }
        let matches_used = record[2].parse().map_err(|_| bad("invalid matches_used"))?;
        let features = record
            .iter()
            .skip(3)
            .map(|x| x.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad("invalid feature value"))?;
        out.push(TeamFingerprint {
            team_id: record[0].to_string(),
            k,
            patterns: patterns.clone(),
            features,
            matches_used,
        });
    }
    Ok(out)
}

pub fn write_clusters_csv<W: Write>(writer: W, clusters: &ClusterAssignment) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["team_id", "cluster"])?;
    for (team, cluster) in &clusters.assignments {
        wtr.write_record([team.as_str(), &cluster.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Summary statistics of a k-means run, written next to the cluster table.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClusterSummary {
    pub clusters: usize,
    pub within_ss: f64,
    pub total_ss: f64,
    pub between_over_total: f64,
    pub within_over_total: f64,
    pub centroids: Vec<Vec<f64>>,
    pub cluster_sizes: Vec<usize>,
}

impl From<&ClusterAssignment> for ClusterSummary {
    fn from(c: &ClusterAssignment) -> Self {
        let mut sizes = vec![0; c.centroids.len()];
        c.assignments.values().for_each(|&l| sizes[l] += 1);
        ClusterSummary {
            clusters: c.centroids.len(),
            within_ss: c.within_ss,
            total_ss: c.total_ss,
            between_over_total: c.between_over_total,
            within_over_total: c.within_over_total(),
            centroids: c.centroids.clone(),
            cluster_sizes: sizes,
        }
    }
}

#[derive(Serialize)]
struct DendrogramDocument<'a> {
    linkage: &'static str,
    height: &'static str,
    leaves: &'a [String],
    root: DendrogramNode,
}

/// Nested JSON: merge nodes carry `height`, `size` and two `children`;
/// leaves carry `team_id`. Heights are increases in within-cluster sum of squares.
pub fn dendrogram_json(dendrogram: &Dendrogram) -> Result<String> {
    let doc = DendrogramDocument {
        linkage: "ward",
        height: "ess_increase",
        leaves: &dendrogram.leaves,
        root: dendrogram.tree(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// `team_id,pc1,...,pcd`.
pub fn write_pca_csv<W: Write>(writer: W, projection: &PcaProjection) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let dims = projection.explained_variance_ratio.len();
    let mut header = vec!["team_id".to_string()];
    header.extend((1..=dims).map(|i| format!("pc{i}")));
    wtr.write_record(&header)?;
    for (team, coords) in &projection.coordinates {
        let mut record = vec![team.clone()];
        record.extend(coords.iter().map(f64::to_string));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

/// `component,explained_variance,explained_variance_ratio`.
pub fn write_pca_variance_csv<W: Write>(writer: W, projection: &PcaProjection) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "component",
        "explained_variance",
        "explained_variance_ratio",
    ])?;
    for (i, (v, r)) in projection
        .explained_variance
        .iter()
        .zip(&projection.explained_variance_ratio)
        .enumerate()
    {
        wtr.write_record([format!("pc{}", i + 1), v.to_string(), r.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Everything needed to rerun a command and reproduce its outputs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: BTreeMap<String, serde_json::Value>,
    /// Input path to hex SHA-256 digest.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    /// Wall-clock time of the run; the only field that varies between reruns.
    pub duration_s: f64,
}
