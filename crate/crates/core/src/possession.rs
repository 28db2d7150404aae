//! Segmenting a match log into ball possessions.
//!
//! A possession is a chain of passes where every receiver makes the next pass
//! and consecutive passes are at most `t_max` seconds apart. Segmentation is
//! greedy and left to right: a possession grows while both conditions hold and
//! a new one starts at the first pass that breaks either.

use crate::error::{Error, Result};
use crate::ingest::{MatchEventLog, PassEvent};

/// Default maximum gap between two passes of the same possession, in seconds.
pub const DEFAULT_T_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationConfig {
    t_max: f64,
}

impl SegmentationConfig {
    pub fn new(t_max: f64) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Domain(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        Ok(SegmentationConfig { t_max })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// True when `next` may directly follow `prev` inside one possession.
    pub fn continues(&self, prev: &PassEvent, next: &PassEvent) -> bool {
        let gap = next.timestamp - prev.timestamp;
        prev.receiver == next.passer && (0.0..=self.t_max).contains(&gap)
    }
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            t_max: DEFAULT_T_MAX,
        }
    }
}

/// A non-empty chain of consecutive passes by one team.
#[derive(Debug, Clone, PartialEq)]
pub struct Possession {
    match_id: String,
    team_id: String,
    passes: Vec<PassEvent>,
}

impl Possession {
    /// Validates chaining and time order. The `t_max` bound is a property of
    /// segmentation, not of the possession itself, so it is not checked here.
    pub fn new(passes: Vec<PassEvent>) -> Result<Self> {
        let first = passes
            .first()
            .ok_or_else(|| Error::Contract("possession needs at least one pass".into()))?;
        let (match_id, team_id) = (first.match_id.clone(), first.team_id.clone());
        for p in &passes {
            if p.match_id != match_id || p.team_id != team_id {
                return Err(Error::Contract(
                    "possession spans several match/team logs".into(),
                ));
            }
            p.check().map_err(|r| Error::Contract(r.to_string()))?;
        }
        for w in passes.windows(2) {
            if w[0].receiver != w[1].passer {
                return Err(Error::Contract(format!(
                    "chain broken: {} received but {} passed",
                    w[0].receiver, w[1].passer
                )));
            }
            if w[1].timestamp < w[0].timestamp {
                return Err(Error::Contract("passes out of time order".into()));
            }
        }
        Ok(Possession {
            match_id,
            team_id,
            passes,
        })
    }

    /// Builds a possession from a touch sequence, with passes one second apart.
    pub fn from_touches<S: AsRef<str>>(
        match_id: &str,
        team_id: &str,
        touches: &[S],
    ) -> Result<Self> {
        if touches.len() < 2 {
            return Err(Error::Contract(
                "a possession needs at least two touches".into(),
            ));
        }
        let passes = touches
            .windows(2)
            .enumerate()
            .map(|(i, w)| PassEvent {
                match_id: match_id.to_string(),
                team_id: team_id.to_string(),
                passer: w[0].as_ref().to_string(),
                receiver: w[1].as_ref().to_string(),
                timestamp: i as f64,
            })
            .collect();
        Possession::new(passes)
    }

    pub fn match_id(&self) -> &str {
        &self.match_id
    }

    pub fn team_id(&self) -> &str {
        &self.team_id
    }

    pub fn passes(&self) -> &[PassEvent] {
        &self.passes
    }

    /// Number of passes.
    pub fn len(&self) -> usize {
        self.passes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passes.is_empty()
    }

    /// Ball holders in order: the first passer, then every receiver. Length is `len() + 1`.
    pub fn touch_sequence(&self) -> Vec<&str> {
        std::iter::once(self.passes[0].passer.as_str())
            .chain(self.passes.iter().map(|p| p.receiver.as_str()))
            .collect()
    }
}

/// Splits a time-sorted log into maximal possessions.
pub fn segment_possessions(log: &MatchEventLog, config: &SegmentationConfig) -> Vec<Possession> {
    let mut out = Vec::new();
    let mut current: Vec<PassEvent> = Vec::new();
    for pass in log.events() {
        if let Some(prev) = current.last() {
            if !config.continues(prev, pass) {
                out.push(finish(std::mem::take(&mut current), log));
            }
        }
        current.push(pass.clone());
    }
    if !current.is_empty() {
        out.push(finish(current, log));
    }
    out
}

fn finish(passes: Vec<PassEvent>, log: &MatchEventLog) -> Possession {
    Possession {
        match_id: log.match_id().to_string(),
        team_id: log.team_id().to_string(),
        passes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn log(passes: &[(&str, &str, f64)]) -> MatchEventLog {
        let events = passes
            .iter()
            .map(|&(a, b, t)| PassEvent::new("M", "T", a, b, t).unwrap())
            .collect();
        MatchEventLog::new("M", "T", events).unwrap()
    }

    fn shapes(ps: &[Possession]) -> Vec<usize> {
        ps.iter().map(Possession::len).collect()
    }

    #[test]
    fn time_gap_breaks_possession() {
        let l = log(&[("1", "2", 0.0), ("2", "3", 3.0), ("3", "4", 10.0)]);
        let ps = segment_possessions(&l, &SegmentationConfig::default());
        assert_eq!(shapes(&ps), vec![2, 1]);
    }

    #[test]
    fn broken_chain_breaks_possession() {
        let l = log(&[("1", "2", 0.0), ("5", "3", 1.0)]);
        let ps = segment_possessions(&l, &SegmentationConfig::default());
        assert_eq!(shapes(&ps), vec![1, 1]);
    }

    #[test]
    fn worked_example_is_one_possession() {
        let l = log(&[
            ("2", "4", 0.0),
            ("4", "5", 1.0),
            ("5", "6", 2.0),
            ("6", "4", 3.0),
            ("4", "6", 4.0),
        ]);
        let ps = segment_possessions(&l, &SegmentationConfig::default());
        assert_eq!(shapes(&ps), vec![5]);
        assert_eq!(ps[0].touch_sequence(), vec!["2", "4", "5", "6", "4", "6"]);
    }

    #[test]
    fn gap_equal_to_t_max_and_zero_gap_continue() {
        let l = log(&[("1", "2", 0.0), ("2", "3", 5.0), ("3", "1", 5.0)]);
        let ps = segment_possessions(&l, &SegmentationConfig::default());
        assert_eq!(shapes(&ps), vec![3]);
    }

    #[test]
    fn touch_sequences() {
        let single = Possession::from_touches("M", "T", &["1", "2"]).unwrap();
        assert_eq!(single.touch_sequence(), vec!["1", "2"]);
        let back = Possession::from_touches("M", "T", &["1", "2", "1"]).unwrap();
        assert_eq!(back.touch_sequence(), vec!["1", "2", "1"]);
    }

    #[test]
    fn empty_log_has_no_possessions() {
        let l = MatchEventLog::new("M", "T", vec![]).unwrap();
        assert!(segment_possessions(&l, &SegmentationConfig::default()).is_empty());
    }

    #[test]
    fn invalid_t_max_rejected() {
        assert!(SegmentationConfig::new(0.0).is_err());
        assert!(SegmentationConfig::new(-1.0).is_err());
        assert!(SegmentationConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn possession_rejects_broken_chain() {
        let passes = vec![
            PassEvent::new("M", "T", "1", "2", 0.0).unwrap(),
            PassEvent::new("M", "T", "3", "1", 1.0).unwrap(),
        ];
        assert!(matches!(Possession::new(passes), Err(Error::Contract(_))));
    }

    fn arb_log() -> impl Strategy<Value = MatchEventLog> {
        proptest::collection::vec((0u8..4, 1u8..4, 0u8..8), 0..60).prop_map(|steps| {
            let mut t = 0.0;
            let events = steps
                .into_iter()
                .map(|(a, offset, dt)| {
                    t += dt as f64;
                    let b = (a + offset) % 4;
                    PassEvent::new("M", "T", a.to_string(), b.to_string(), t).unwrap()
                })
                .collect();
            MatchEventLog::new("M", "T", events).unwrap()
        })
    }

    proptest! {
        #[test]
        fn segmentation_partitions_and_is_maximal(l in arb_log(), t_max in 1.0f64..7.0) {
            let config = SegmentationConfig::new(t_max).unwrap();
            let ps = segment_possessions(&l, &config);
            let flat: Vec<PassEvent> = ps.iter().flat_map(|p| p.passes().to_vec()).collect();
            prop_assert_eq!(flat.as_slice(), l.events());
            for p in &ps {
                prop_assert!(!p.is_empty());
                for w in p.passes().windows(2) {
                    prop_assert!(config.continues(&w[0], &w[1]));
                }
                let touches = p.touch_sequence();
                prop_assert_eq!(touches.len(), p.len() + 1);
                prop_assert!(touches.windows(2).all(|w| w[0] != w[1]));
            }
            for pair in ps.windows(2) {
                let last = pair[0].passes().last().unwrap();
                prop_assert!(!config.continues(last, &pair[1].passes()[0]));
            }
        }
    }
}
