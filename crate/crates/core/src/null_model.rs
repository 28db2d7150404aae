//! Randomized pass networks and motif z-scores.
//!
//! Each replicate keeps the possession structure of the match (number of
//! possessions and their lengths) and redistributes who holds the ball in each
//! touch slot. Under the default [`NullPolicy::TouchShuffleMatch`] the
//! multiset of holders over all slots is exactly the original one, so every
//! player keeps their touch count. Slots that end up with the same player
//! twice in a row are repaired by random swaps.
//!
//! Replicate `r` of a match is seeded from `(master_seed, match_id, team_id, r)`
//! alone, so results do not depend on thread count or scheduling.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::motif::{MotifAlphabet, MotifCountVector, MotifPattern};
use crate::possession::Possession;

pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_MAX_REPAIR_ATTEMPTS: usize = 100;

/// Magnitude reported for a z-score whose null variance is zero but whose
/// observed count differs from the null mean.
pub const Z_CAP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NullPolicy {
    /// Permute all touch slots of the match.
    #[default]
    TouchShuffleMatch,
    /// Permute touch slots within each possession.
    TouchShufflePossession,
    /// Draw each holder uniformly from the match's players, avoiding repeats.
    UniformWalk,
}

impl NullPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            NullPolicy::TouchShuffleMatch => "touch-shuffle-match",
            NullPolicy::TouchShufflePossession => "touch-shuffle-possession",
            NullPolicy::UniformWalk => "uniform-walk",
        }
    }
}

impl FromStr for NullPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "touch-shuffle-match" => Ok(NullPolicy::TouchShuffleMatch),
            "touch-shuffle-possession" => Ok(NullPolicy::TouchShufflePossession),
            "uniform-walk" => Ok(NullPolicy::UniformWalk),
            _ => Err(Error::Domain(format!("unknown null model `{s}`"))),
        }
    }
}

impl fmt::Display for NullPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NullModelConfig {
    pub replicates: usize,
    pub policy: NullPolicy,
    pub master_seed: u64,
    pub max_repair_attempts: usize,
}

impl Default for NullModelConfig {
    fn default() -> Self {
        NullModelConfig {
            replicates: DEFAULT_REPLICATES,
            policy: NullPolicy::default(),
            master_seed: 0,
            max_repair_attempts: DEFAULT_MAX_REPAIR_ATTEMPTS,
        }
    }
}

impl NullModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Domain("replicates must be at least 1".into()));
        }
        if self.max_repair_attempts == 0 {
            return Err(Error::Domain(
                "max_repair_attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Seed of replicate `replicate` for one match and team.
pub fn derive_seed(master_seed: u64, match_id: &str, team_id: &str, replicate: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"flowmotif/replicate/v1");
    hasher.update(master_seed.to_le_bytes());
    for part in [match_id, team_id] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hasher.update(replicate.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Touch slots of one match with players interned to small integers.
#[derive(Debug, Clone)]
struct TouchLayout {
    match_id: String,
    team_id: String,
    players: Vec<String>,
    touches: Vec<u32>,
    /// Slot offsets of each possession, plus the total slot count at the end.
    starts: Vec<usize>,
    is_start: Vec<bool>,
}

impl TouchLayout {
    fn new(possessions: &[Possession]) -> Result<Self> {
        let (match_id, team_id) = possessions
            .first()
            .map(|p| (p.match_id().to_string(), p.team_id().to_string()))
            .unwrap_or_default();
        let mut index: HashMap<&str, u32> = HashMap::new();
        let mut players = Vec::new();
        let mut touches = Vec::new();
        let mut starts = Vec::with_capacity(possessions.len() + 1);
        let mut is_start = Vec::new();
        for p in possessions {
            if p.match_id() != match_id || p.team_id() != team_id {
                return Err(Error::Contract(format!(
                    "possession of ({}, {}) mixed into ({match_id}, {team_id})",
                    p.match_id(),
                    p.team_id()
                )));
            }
            starts.push(touches.len());
            for (i, holder) in p.touch_sequence().into_iter().enumerate() {
                let id = *index.entry(holder).or_insert_with(|| {
                    players.push(holder.to_string());
                    players.len() as u32 - 1
                });
                touches.push(id);
                is_start.push(i == 0);
            }
        }
        starts.push(touches.len());
        Ok(TouchLayout {
            match_id,
            team_id,
            players,
            touches,
            starts,
            is_start,
        })
    }

    fn possession_count(&self) -> usize {
        self.starts.len() - 1
    }

    fn possession_of(&self, slot: usize) -> usize {
        self.starts.partition_point(|&s| s <= slot) - 1
    }

    #[inline]
    fn conflict(&self, slots: &[u32], p: usize) -> bool {
        p < slots.len() && !self.is_start[p] && slots[p] == slots[p - 1]
    }

    /// Fixes adjacent repeats in `slots[lo..hi]` by swapping within that range.
    /// Returns the first slot it could not fix.
    fn repair(
        &self,
        slots: &mut [u32],
        lo: usize,
        hi: usize,
        rng: &mut ChaCha8Rng,
        attempts: usize,
    ) -> std::result::Result<(), usize> {
        for i in lo..hi {
            if !self.conflict(slots, i) {
                continue;
            }
            let mut fixed = false;
            for _ in 0..attempts {
                let mut j = rng.random_range(lo..hi - 1);
                if j >= i {
                    j += 1;
                }
                slots.swap(i, j);
                let ok = !self.conflict(slots, i)
                    && [i + 1, j, j + 1]
                        .iter()
                        .all(|&p| p > i || !self.conflict(slots, p));
                if ok {
                    fixed = true;
                    break;
                }
                slots.swap(i, j);
            }
            if !fixed {
                return Err(i);
            }
        }
        Ok(())
    }

    /// Writes one randomized replicate into `out`.
    fn randomize_into(
        &self,
        policy: NullPolicy,
        rng: &mut ChaCha8Rng,
        attempts: usize,
        out: &mut Vec<u32>,
    ) -> Result<()> {
        out.clear();
        out.extend_from_slice(&self.touches);
        match policy {
            NullPolicy::TouchShuffleMatch => {
                let mut failed = 0;
                for _ in 0..attempts {
                    out.copy_from_slice(&self.touches);
                    out.shuffle(rng);
                    let len = out.len();
                    match self.repair(out, 0, len, rng, attempts) {
                        Ok(()) => return Ok(()),
                        Err(slot) => failed = slot,
                    }
                }
                Err(self.degenerate(self.possession_of(failed)))
            }
            NullPolicy::TouchShufflePossession => {
                'possessions: for p in 0..self.possession_count() {
                    let (lo, hi) = (self.starts[p], self.starts[p + 1]);
                    for _ in 0..attempts {
                        out[lo..hi].copy_from_slice(&self.touches[lo..hi]);
                        out[lo..hi].shuffle(rng);
                        if self.repair(out, lo, hi, rng, attempts).is_ok() {
                            continue 'possessions;
                        }
                    }
                    return Err(self.degenerate(p));
                }
                Ok(())
            }
            NullPolicy::UniformWalk => {
                let n = self.players.len() as u32;
                for slot in 0..out.len() {
                    out[slot] = if self.is_start[slot] {
                        rng.random_range(0..n)
                    } else {
                        let prev = out[slot - 1];
                        let r = rng.random_range(0..n - 1);
                        if r >= prev {
                            r + 1
                        } else {
                            r
                        }
                    };
                }
                Ok(())
            }
        }
    }

    fn degenerate(&self, possession: usize) -> Error {
        Error::Degenerate(format!(
            "could not randomize possession {possession} of match {} team {} without adjacent repeats",
            self.match_id, self.team_id
        ))
    }

    fn count(&self, alphabet: &MotifAlphabet, slots: &[u32], counts: &mut [u64]) {
        for w in self.starts.windows(2) {
            alphabet.accumulate(&slots[w[0]..w[1]], counts);
        }
    }

    fn to_possessions(&self, slots: &[u32], template: &[Possession]) -> Result<Vec<Possession>> {
        template
            .iter()
            .zip(self.starts.windows(2))
            .map(|(orig, w)| {
                let touches = &slots[w[0]..w[1]];
                let passes = orig
                    .passes()
                    .iter()
                    .zip(touches.windows(2))
                    .map(|(pass, pair)| {
                        let mut pass = pass.clone();
                        pass.passer = self.players[pair[0] as usize].clone();
                        pass.receiver = self.players[pair[1] as usize].clone();
                        pass
                    })
                    .collect();
                Possession::new(passes)
            })
            .collect()
    }
}

/// One randomized copy of a match's possessions, same shapes and timestamps.
pub fn randomize_possessions(
    possessions: &[Possession],
    policy: NullPolicy,
    seed: u64,
    max_repair_attempts: usize,
) -> Result<Vec<Possession>> {
    if max_repair_attempts == 0 {
        return Err(Error::Domain(
            "max_repair_attempts must be at least 1".into(),
        ));
    }
    let layout = TouchLayout::new(possessions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots = Vec::new();
    layout.randomize_into(policy, &mut rng, max_repair_attempts, &mut slots)?;
    layout.to_possessions(&slots, possessions)
}

/// Dense motif counts of every replicate, in replicate order.
pub fn replicate_counts(
    possessions: &[Possession],
    k: usize,
    config: &NullModelConfig,
) -> Result<Vec<Vec<u64>>> {
    config.validate()?;
    let alphabet = MotifAlphabet::new(k)?;
    let layout = TouchLayout::new(possessions)?;
    (0..config.replicates as u64)
        .into_par_iter()
        .map_init(Vec::new, |slots, r| {
            let seed = derive_seed(config.master_seed, &layout.match_id, &layout.team_id, r);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            layout.randomize_into(config.policy, &mut rng, config.max_repair_attempts, slots)?;
            let mut counts = vec![0u64; alphabet.len()];
            layout.count(&alphabet, slots, &mut counts);
            Ok(counts)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullMoments {
    pub mean: f64,
    /// Bessel-corrected; reported as 0 when fewer than two replicates exist.
    pub std: f64,
}

/// Per-pattern mean and standard deviation of replicate motif counts.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDistribution {
    pub k: usize,
    pub replicates: usize,
    pub moments: BTreeMap<MotifPattern, NullMoments>,
}

impl NullDistribution {
    /// Moments from dense per-replicate counts, accumulated exactly in integers.
    pub fn from_counts(alphabet: &MotifAlphabet, counts: &[Vec<u64>]) -> Self {
        let r = counts.len() as u128;
        let moments = alphabet
            .patterns()
            .iter()
            .enumerate()
            .map(|(i, pattern)| {
                let (sum, sumsq) = counts.iter().fold((0u128, 0u128), |(s, q), c| {
                    let x = c[i] as u128;
                    (s + x, q + x * x)
                });
                let mean = if r == 0 { 0.0 } else { sum as f64 / r as f64 };
                let std = if r < 2 {
                    0.0
                } else {
                    let num = r * sumsq - sum * sum;
                    (num as f64 / (r * (r - 1)) as f64).sqrt()
                };
                (pattern.clone(), NullMoments { mean, std })
            })
            .collect();
        NullDistribution {
            k: alphabet.k(),
            replicates: counts.len(),
            moments,
        }
    }

    /// Fewer than two replicates: standard deviations are undefined.
    pub fn is_degenerate(&self) -> bool {
        self.replicates < 2
    }

    pub fn get(&self, pattern: &str) -> Option<NullMoments> {
        self.moments
            .iter()
            .find(|(p, _)| p.as_str() == pattern)
            .map(|(_, &m)| m)
    }
}

pub fn null_distribution(
    possessions: &[Possession],
    k: usize,
    config: &NullModelConfig,
) -> Result<NullDistribution> {
    let alphabet = MotifAlphabet::new(k)?;
    let counts = replicate_counts(possessions, k, config)?;
    Ok(NullDistribution::from_counts(&alphabet, &counts))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZScoreEntry {
    pub count: u64,
    pub null_mean: f64,
    pub null_std: f64,
    pub z: f64,
    /// Set when the null standard deviation is zero or undefined.
    pub degenerate: bool,
}

/// Standardized motif prevalence of one team in one match.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScoreProfile {
    pub match_id: String,
    pub team_id: String,
    pub k: usize,
    pub entries: BTreeMap<MotifPattern, ZScoreEntry>,
}

impl ZScoreProfile {
    pub fn z(&self, pattern: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(p, _)| p.as_str() == pattern)
            .map(|(_, e)| e.z)
    }

    /// z-values in alphabet order.
    pub fn z_vector(&self) -> Vec<f64> {
        self.entries.values().map(|e| e.z).collect()
    }
}

/// Standard score of one observed count against null moments. The flag is
/// set when the score had to be capped.
pub fn standard_score(count: f64, mean: f64, std: f64) -> (f64, bool) {
    if std > 0.0 {
        ((count - mean) / std, false)
    } else if count == mean {
        (0.0, false)
    } else {
        (Z_CAP.copysign(count - mean), true)
    }
}

pub fn z_scores(real: &MotifCountVector, null: &NullDistribution) -> Result<ZScoreProfile> {
    if real.k != null.k {
        return Err(Error::Contract(format!(
            "k mismatch: counts {} vs null {}",
            real.k, null.k
        )));
    }
    if real.counts.len() != null.moments.len()
        || real
            .counts
            .keys()
            .zip(null.moments.keys())
            .any(|(a, b)| a != b)
    {
        return Err(Error::Contract("count and null patterns differ".into()));
    }
    let entries = real
        .counts
        .iter()
        .zip(null.moments.values())
        .map(|((pattern, &count), m)| {
            let (z, flagged) = standard_score(count as f64, m.mean, m.std);
            let entry = ZScoreEntry {
                count,
                null_mean: m.mean,
                null_std: m.std,
                z,
                degenerate: flagged || null.is_degenerate(),
            };
            (pattern.clone(), entry)
        })
        .collect();
    Ok(ZScoreProfile {
        match_id: real.match_id.clone(),
        team_id: real.team_id.clone(),
        k: real.k,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motif::count_motifs;

    fn poss(touches: &[&str]) -> Possession {
        Possession::from_touches("M", "T", touches).unwrap()
    }

    fn touch_multiset(ps: &[Possession]) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for p in ps {
            for t in p.touch_sequence() {
                *m.entry(t.to_string()).or_default() += 1;
            }
        }
        m
    }

    fn sample_match() -> Vec<Possession> {
        vec![
            poss(&["1", "2", "3", "1", "2"]),
            poss(&["3", "2"]),
            poss(&["2", "1", "3", "2", "1", "3"]),
            poss(&["1", "3", "1"]),
        ]
    }

    #[test]
    fn policy_names_roundtrip() {
        for p in [
            NullPolicy::TouchShuffleMatch,
            NullPolicy::TouchShufflePossession,
            NullPolicy::UniformWalk,
        ] {
            assert_eq!(p.name().parse::<NullPolicy>().unwrap(), p);
        }
        assert!("rewire".parse::<NullPolicy>().is_err());
    }

    #[test]
    fn single_pass_keeps_shape_under_all_policies() {
        for policy in [
            NullPolicy::TouchShuffleMatch,
            NullPolicy::TouchShufflePossession,
            NullPolicy::UniformWalk,
        ] {
            for seed in 0..20 {
                let out = randomize_possessions(&[poss(&["1", "2"])], policy, seed, 100).unwrap();
                let t = out[0].touch_sequence();
                assert_eq!(t.len(), 2);
                assert_ne!(t[0], t[1]);
                assert!(t.iter().all(|x| *x == "1" || *x == "2"));
            }
        }
    }

    #[test]
    fn match_shuffle_conserves_balanced_multiset() {
        let alternating: Vec<&str> = (0..20)
            .map(|i| if i % 2 == 0 { "1" } else { "2" })
            .collect();
        let ps = vec![poss(&alternating[..10]), poss(&alternating[..10])];
        for seed in 0..50 {
            let out = randomize_possessions(&ps, NullPolicy::TouchShuffleMatch, seed, 100).unwrap();
            assert_eq!(
                touch_multiset(&out),
                BTreeMap::from([("1".into(), 10), ("2".into(), 10)])
            );
        }
    }

    #[test]
    fn possession_shuffle_conserves_each_possession() {
        let ps = sample_match();
        for seed in 0..50 {
            let out =
                randomize_possessions(&ps, NullPolicy::TouchShufflePossession, seed, 100).unwrap();
            for (a, b) in ps.iter().zip(&out) {
                assert_eq!(
                    touch_multiset(std::slice::from_ref(a)),
                    touch_multiset(std::slice::from_ref(b))
                );
            }
        }
    }

    #[test]
    fn uniform_walk_stays_in_player_set() {
        let ps = sample_match();
        let out = randomize_possessions(&ps, NullPolicy::UniformWalk, 7, 100).unwrap();
        let players: Vec<&str> = vec!["1", "2", "3"];
        for p in &out {
            assert!(p.touch_sequence().iter().all(|t| players.contains(t)));
        }
    }

    #[test]
    fn randomized_passes_keep_timestamps() {
        let ps = sample_match();
        let out = randomize_possessions(&ps, NullPolicy::TouchShuffleMatch, 3, 100).unwrap();
        for (a, b) in ps.iter().zip(&out) {
            let ta: Vec<f64> = a.passes().iter().map(|p| p.timestamp).collect();
            let tb: Vec<f64> = b.passes().iter().map(|p| p.timestamp).collect();
            assert_eq!(ta, tb);
        }
    }

    #[test]
    fn tight_budget_on_forced_alternation_is_degenerate() {
        // Only the strict alternation 1,2,1,...,1 is valid for this multiset.
        let touches: Vec<&str> = (0..41)
            .map(|i| if i % 2 == 0 { "1" } else { "2" })
            .collect();
        let ps = vec![poss(&touches)];
        for seed in 0..5 {
            let err = randomize_possessions(&ps, NullPolicy::TouchShufflePossession, seed, 1)
                .unwrap_err();
            assert!(
                matches!(&err, Error::Degenerate(msg) if msg.contains("possession 0")),
                "{err}"
            );
        }
    }

    #[test]
    fn seeds_depend_on_every_component() {
        let base = derive_seed(1, "M", "T", 0);
        assert_eq!(base, derive_seed(1, "M", "T", 0));
        assert_ne!(base, derive_seed(2, "M", "T", 0));
        assert_ne!(base, derive_seed(1, "N", "T", 0));
        assert_ne!(base, derive_seed(1, "M", "U", 0));
        assert_ne!(base, derive_seed(1, "M", "T", 1));
        assert_ne!(derive_seed(0, "ab", "c", 0), derive_seed(0, "a", "bc", 0));
    }

    #[test]
    fn single_replicate_is_flagged() {
        let ps = sample_match();
        let config = NullModelConfig {
            replicates: 1,
            ..Default::default()
        };
        let null = null_distribution(&ps, 3, &config).unwrap();
        assert!(null.is_degenerate());
        assert!(null.moments.values().all(|m| m.std == 0.0));
        let real = count_motifs(&ps, 3, None).unwrap();
        let z = z_scores(&real, &null).unwrap();
        assert!(z.entries.values().all(|e| e.degenerate && e.z.is_finite()));
    }

    #[test]
    fn one_pass_match_has_zero_null() {
        let ps = vec![poss(&["1", "2"])];
        let config = NullModelConfig {
            replicates: 50,
            ..Default::default()
        };
        let null = null_distribution(&ps, 3, &config).unwrap();
        assert!(null.moments.values().all(|m| m.mean == 0.0 && m.std == 0.0));
    }

    #[test]
    fn null_is_deterministic() {
        let ps = sample_match();
        let config = NullModelConfig {
            replicates: 200,
            master_seed: 42,
            ..Default::default()
        };
        let a = null_distribution(&ps, 3, &config).unwrap();
        let b = null_distribution(&ps, 3, &config).unwrap();
        for (x, y) in a.moments.values().zip(b.moments.values()) {
            assert_eq!(x.mean.to_bits(), y.mean.to_bits());
            assert_eq!(x.std.to_bits(), y.std.to_bits());
        }
    }

    #[test]
    fn moments_match_two_pass_formula() {
        let alphabet = MotifAlphabet::new(3).unwrap();
        let counts = vec![
            vec![1, 0, 0, 0, 4],
            vec![3, 0, 0, 0, 4],
            vec![5, 0, 0, 0, 4],
        ];
        let null = NullDistribution::from_counts(&alphabet, &counts);
        let m = null.get("ABAB").unwrap();
        assert_eq!(m.mean, 3.0);
        assert_eq!(m.std, 2.0);
        assert_eq!(
            null.get("ABCD").unwrap(),
            NullMoments {
                mean: 4.0,
                std: 0.0
            }
        );
    }

    fn profile_for(count: u64, mean: f64, std: f64) -> ZScoreEntry {
        let alphabet = MotifAlphabet::new(3).unwrap();
        let mut dense = vec![0; 5];
        dense[0] = count;
        let real = MotifCountVector::from_dense("M", "T", &alphabet, &dense);
        let mut null = NullDistribution::from_counts(&alphabet, &[vec![0; 5], vec![0; 5]]);
        *null.moments.values_mut().next().unwrap() = NullMoments { mean, std };
        z_scores(&real, &null)
            .unwrap()
            .entries
            .values()
            .next()
            .copied()
            .unwrap()
    }

    #[test]
    fn z_score_conventions() {
        let e = profile_for(8, 4.0, 2.0);
        assert_eq!((e.z, e.degenerate), (2.0, false));
        let e = profile_for(4, 4.0, 0.0);
        assert_eq!((e.z, e.degenerate), (0.0, false));
        let e = profile_for(5, 4.0, 0.0);
        assert_eq!((e.z, e.degenerate), (10.0, true));
        let e = profile_for(3, 4.0, 0.0);
        assert_eq!((e.z, e.degenerate), (-10.0, true));
    }

    #[test]
    fn z_scores_reject_k_mismatch() {
        let real = count_motifs(&sample_match(), 3, None).unwrap();
        let null = NullDistribution::from_counts(&MotifAlphabet::new(2).unwrap(), &[]);
        assert!(matches!(z_scores(&real, &null), Err(Error::Contract(_))));
    }

    #[test]
    fn replicates_never_repeat_adjacent() {
        let ps = sample_match();
        for policy in [
            NullPolicy::TouchShuffleMatch,
            NullPolicy::TouchShufflePossession,
            NullPolicy::UniformWalk,
        ] {
            for seed in 0..200 {
                let out = randomize_possessions(&ps, policy, seed, 100).unwrap();
                assert_eq!(out.len(), ps.len());
                for (a, b) in ps.iter().zip(&out) {
                    assert_eq!(a.len(), b.len());
                }
            }
        }
    }
}
