//! End-to-end per-match processing: segment, count, randomize, standardize.

use rayon::prelude::*;

use crate::error::Result;
use crate::ingest::MatchEventLog;
use crate::motif::{count_motifs, MotifCountVector, DEFAULT_K};
use crate::null_model::{null_distribution, z_scores, NullModelConfig, ZScoreProfile};
use crate::possession::{segment_possessions, SegmentationConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub segmentation: SegmentationConfig,
    pub k: usize,
    pub null: NullModelConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            segmentation: SegmentationConfig::default(),
            k: DEFAULT_K,
            null: NullModelConfig::default(),
        }
    }
}

pub fn count_log(
    log: &MatchEventLog,
    segmentation: &SegmentationConfig,
    k: usize,
) -> Result<MotifCountVector> {
    let possessions = segment_possessions(log, segmentation);
    count_motifs(&possessions, k, Some((log.match_id(), log.team_id())))
}

pub fn analyze_log(log: &MatchEventLog, config: &PipelineConfig) -> Result<ZScoreProfile> {
    let possessions = segment_possessions(log, &config.segmentation);
    let real = count_motifs(
        &possessions,
        config.k,
        Some((log.match_id(), log.team_id())),
    )?;
    let null = null_distribution(&possessions, config.k, &config.null)?;
    z_scores(&real, &null)
}

/// Z-score profiles of every log, in input order.
pub fn analyze_logs(logs: &[MatchEventLog], config: &PipelineConfig) -> Result<Vec<ZScoreProfile>> {
    logs.par_iter()
        .map(|log| analyze_log(log, config))
        .collect()
}
