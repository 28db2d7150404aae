//! Synthetic pass-event logs with controllable passing style.
//!
//! Every possession is a random walk over the squad. With probability
//! `back_pass_bias` the ball goes back to the player it came from; otherwise
//! it goes to a uniformly chosen teammate. Passes inside a possession are one
//! second apart and possessions are separated by more than the default
//! `t_max`, so segmentation recovers the generated possessions exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{MatchEventLog, PassEvent};
use crate::possession::DEFAULT_T_MAX;

pub const DEFAULT_MATCHES: usize = 38;

/// Gap between the last pass of a possession and the first of the next.
pub const POSSESSION_GAP_S: f64 = DEFAULT_T_MAX + 1.0;

fn default_matches() -> usize {
    DEFAULT_MATCHES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamStyleParams {
    /// Filled in from the team's position by [`generate_league`] when empty.
    #[serde(default)]
    pub team_id: String,
    pub squad_size: usize,
    pub possessions_per_match: usize,
    /// Mean number of passes per possession (geometric, at least 1).
    pub mean_possession_length: f64,
    pub back_pass_bias: f64,
    #[serde(default = "default_matches")]
    pub matches: usize,
}

impl Default for TeamStyleParams {
    fn default() -> Self {
        TeamStyleParams {
            team_id: String::new(),
            squad_size: 11,
            possessions_per_match: 120,
            mean_possession_length: 4.0,
            back_pass_bias: 0.0,
            matches: DEFAULT_MATCHES,
        }
    }
}

impl TeamStyleParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Domain(format!("team `{}`: {msg}", self.team_id)));
        if self.squad_size < 4 {
            return fail(format!(
                "squad_size must be at least 4, got {}",
                self.squad_size
            ));
        }
        if self.possessions_per_match == 0 {
            return fail("possessions_per_match must be positive".into());
        }
        if !(self.mean_possession_length >= 1.0 && self.mean_possession_length.is_finite()) {
            return fail(format!(
                "mean_possession_length must be at least 1, got {}",
                self.mean_possession_length
            ));
        }
        if !(0.0..=1.0).contains(&self.back_pass_bias) {
            return fail(format!(
                "back_pass_bias must be in [0, 1], got {}",
                self.back_pass_bias
            ));
        }
        if self.matches == 0 {
            return fail("matches must be positive".into());
        }
        Ok(())
    }

    /// Whether every `k`-pass motif can occur with this squad.
    pub fn realizes_all_patterns(&self, k: usize) -> bool {
        self.squad_size > k
    }
}

fn player_name(i: usize) -> String {
    format!("p{:02}", i + 1)
}

/// Seed of one match of one team in a league.
pub fn match_seed(league_seed: u64, team_index: usize, match_index: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"flowmotif/synth/v1");
    hasher.update(league_seed.to_le_bytes());
    hasher.update((team_index as u64).to_le_bytes());
    hasher.update((match_index as u64).to_le_bytes());
    u64::from_le_bytes(hasher.finalize()[..8].try_into().unwrap())
}

/// Ball holders of one possession: `passes + 1` entries, no equal neighbours.
fn walk(params: &TeamStyleParams, passes: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let squad = params.squad_size;
    let other_than = |current: usize, rng: &mut ChaCha8Rng| {
        let r = rng.random_range(0..squad - 1);
        if r >= current {
            r + 1
        } else {
            r
        }
    };
    let mut holders = Vec::with_capacity(passes + 1);
    holders.push(rng.random_range(0..squad));
    for m in 0..passes {
        let current = holders[m];
        let next = if m >= 1 && rng.random_bool(params.back_pass_bias) {
            holders[m - 1]
        } else {
            other_than(current, rng)
        };
        holders.push(next);
    }
    holders
}

pub fn generate_match(
    params: &TeamStyleParams,
    match_index: usize,
    seed: u64,
) -> Result<MatchEventLog> {
    params.validate()?;
    let team_id = if params.team_id.is_empty() {
        "T"
    } else {
        params.team_id.as_str()
    };
    let match_id = format!("{team_id}-M{:02}", match_index + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lengths = Geometric::new(1.0 / params.mean_possession_length)
        .map_err(|e| Error::Domain(e.to_string()))?;

    let mut events = Vec::new();
    let mut t = 0.0;
    for _ in 0..params.possessions_per_match {
        let passes = 1 + lengths.sample(&mut rng) as usize;
        let holders = walk(params, passes, &mut rng);
        for w in holders.windows(2) {
            events.push(PassEvent {
                match_id: match_id.clone(),
                team_id: team_id.to_string(),
                passer: player_name(w[0]),
                receiver: player_name(w[1]),
                timestamp: t,
            });
            t += 1.0;
        }
        t += POSSESSION_GAP_S - 1.0;
    }
    MatchEventLog::new(match_id, team_id, events)
}

/// Every match of every team, teams in input order and matches in order.
pub fn generate_league(teams: &[TeamStyleParams], seed: u64) -> Result<Vec<MatchEventLog>> {
    let teams: Vec<TeamStyleParams> = teams
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut t = t.clone();
            if t.team_id.is_empty() {
                t.team_id = format!("T{:02}", i + 1);
            }
            t.validate().map(|()| t)
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = teams
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| (0..t.matches).map(move |mi| (ti, mi)))
        .collect();
    jobs.into_par_iter()
        .map(|(ti, mi)| generate_match(&teams[ti], mi, match_seed(seed, ti, mi)))
        .collect()
}
