//! Flow-motif analysis of soccer pass-event logs.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! 1. [`ingest`] parses pass events from CSV or JSON lines and groups them
//!    per match and team.
//! 2. [`possession`] chains passes into ball possessions.
//! 3. [`motif`] labels every window of `k` consecutive passes with its
//!    canonical pattern (`ABAB`, `ABAC`, ...) and counts them.
//! 4. [`null_model`] compares those counts with randomized replicates of the
//!    same match and turns them into z-scores.
//! 5. [`analytics`] averages z-scores into team fingerprints and clusters
//!    them with k-means, Ward linkage and PCA.
//!
//! [`synth`] generates synthetic leagues with a tunable passing style and
//! [`report`] holds the on-disk formats.
//!
//! ```
//! use flowmotif_core::{motif, possession::Possession};
//!
//! let p = Possession::from_touches("M1", "T1", &["2", "4", "5", "6", "4", "6"]).unwrap();
//! let motifs = motif::extract_motifs(&p, 3).unwrap();
//! let labels: Vec<&str> = motifs.iter().map(|m| m.as_str()).collect();
//! assert_eq!(labels, ["ABCD", "ABCA", "ABCB"]);
//! ```

pub mod analytics;
pub mod error;
pub mod ingest;
pub mod motif;
pub mod null_model;
pub mod pipeline;
pub mod possession;
pub mod report;
pub mod synth;

pub use analytics::{
    fingerprints_by_team, kmeans, pca_project, team_fingerprint, ward_cluster, ClusterAssignment,
    Dendrogram, PcaOptions, PcaProjection, TeamFingerprint,
};
pub use error::{Error, Result};
pub use ingest::{group_by_match, parse_pass_events, Diagnostic, Format, MatchEventLog, PassEvent};
pub use motif::{
    canonicalize, count_motifs, enumerate_patterns, extract_motifs, MotifAlphabet,
    MotifCountVector, MotifPattern,
};
pub use null_model::{
    null_distribution, randomize_possessions, z_scores, NullDistribution, NullModelConfig,
    NullPolicy, ZScoreProfile,
};
pub use pipeline::PipelineConfig;
pub use possession::{segment_possessions, Possession, SegmentationConfig};
pub use synth::{generate_league, generate_match, TeamStyleParams};
