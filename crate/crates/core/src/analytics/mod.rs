//! Team fingerprints and the analyses run on them.

mod kmeans;
mod pca;
mod ward;

pub use kmeans::{
    kmeans, lloyd, ClusterAssignment, LloydRun, DEFAULT_CLUSTERS, DEFAULT_MAX_ITER, KMEANS_RESTARTS,
};
pub use pca::{pca_project, PcaOptions, PcaProjection};
pub use ward::{ward_cluster, Dendrogram, DendrogramNode, Merge};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::motif::MotifPattern;
use crate::null_model::ZScoreProfile;

/// Mean z-score per motif over a team's matches.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamFingerprint {
    pub team_id: String,
    pub k: usize,
    pub patterns: Vec<MotifPattern>,
    pub features: Vec<f64>,
    pub matches_used: usize,
}

impl TeamFingerprint {
    pub fn feature(&self, pattern: &str) -> Option<f64> {
        self.patterns
            .iter()
            .position(|p| p.as_str() == pattern)
            .map(|i| self.features[i])
    }
}

/// Averages the profiles of one team.
pub fn team_fingerprint(profiles: &[ZScoreProfile]) -> Result<TeamFingerprint> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::Domain("a fingerprint needs at least one profile".into()))?;
    let patterns: Vec<MotifPattern> = first.entries.keys().cloned().collect();
    let mut sums = vec![0.0; patterns.len()];
    for p in profiles {
        if p.team_id != first.team_id || p.k != first.k {
            return Err(Error::Contract(format!(
                "profile of team {} (k = {}) mixed into team {} (k = {})",
                p.team_id, p.k, first.team_id, first.k
            )));
        }
        if !p.entries.keys().eq(patterns.iter()) {
            return Err(Error::Contract(
                "profiles disagree on motif patterns".into(),
            ));
        }
        for (s, e) in sums.iter_mut().zip(p.entries.values()) {
            *s += e.z;
        }
    }
    let n = profiles.len() as f64;
    Ok(TeamFingerprint {
        team_id: first.team_id.clone(),
        k: first.k,
        patterns,
        features: sums.into_iter().map(|s| s / n).collect(),
        matches_used: profiles.len(),
    })
}

/// One fingerprint per team, ordered by team id.
pub fn fingerprints_by_team(profiles: &[ZScoreProfile]) -> Result<Vec<TeamFingerprint>> {
    let mut teams: BTreeMap<&str, Vec<ZScoreProfile>> = BTreeMap::new();
    for p in profiles {
        teams.entry(p.team_id.as_str()).or_default().push(p.clone());
    }
    teams.values().map(|ps| team_fingerprint(ps)).collect()
}

/// Checks that fingerprints are comparable and returns their feature dimension.
pub(crate) fn check_fingerprints(fingerprints: &[TeamFingerprint]) -> Result<usize> {
    let dim = fingerprints.first().map_or(0, |f| f.features.len());
    for f in fingerprints {
        if f.features.len() != dim || f.k != fingerprints[0].k {
            return Err(Error::Contract(
                "fingerprints have different feature layouts".into(),
            ));
        }
        if f.features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!(
                "fingerprint of {} is not finite",
                f.team_id
            )));
        }
    }
    Ok(dim)
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum of squared deviations from the grand mean.
pub(crate) fn total_sum_of_squares(points: &[&[f64]]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let mut mean = vec![0.0; first.len()];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= points.len() as f64);
    points.iter().map(|p| squared_distance(p, &mean)).sum()
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::TeamFingerprint;
    use crate::motif::enumerate_patterns;

    pub fn fp(team: &str, features: &[f64]) -> TeamFingerprint {
        TeamFingerprint {
            team_id: team.to_string(),
            k: 3,
            patterns: enumerate_patterns(3)
                .unwrap()
                .into_iter()
                .take(features.len())
                .collect(),
            features: features.to_vec(),
            matches_used: 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::null_model::ZScoreEntry;

    fn profile(team: &str, z: [f64; 5]) -> ZScoreProfile {
        let entries = crate::motif::enumerate_patterns(3)
            .unwrap()
            .into_iter()
            .zip(z)
            .map(|(p, z)| {
                let e = ZScoreEntry {
                    count: 0,
                    null_mean: 0.0,
                    null_std: 1.0,
                    z,
                    degenerate: false,
                };
                (p, e)
            })
            .collect();
        ZScoreProfile {
            match_id: "M".into(),
            team_id: team.into(),
            k: 3,
            entries,
        }
    }

    #[test]
    fn one_profile_is_its_own_fingerprint() {
        let f = team_fingerprint(&[profile("T", [1.0, -2.0, 0.5, 3.0, 0.0])]).unwrap();
        assert_eq!(f.features, vec![1.0, -2.0, 0.5, 3.0, 0.0]);
        assert_eq!(f.matches_used, 1);
    }

    #[test]
    fn fingerprint_is_the_mean() {
        let f = team_fingerprint(&[
            profile("T", [1.0, 0.0, 0.0, 0.0, 0.0]),
            profile("T", [3.0, 0.0, 0.0, 0.0, 0.0]),
        ])
        .unwrap();
        assert_eq!(f.feature("ABAB"), Some(2.0));
    }

    #[test]
    fn equal_profiles_are_idempotent() {
        let z = [0.3, -1.7, 2.25, 0.125, -0.5];
        let profiles: Vec<_> = (0..38).map(|_| profile("T", z)).collect();
        let f = team_fingerprint(&profiles).unwrap();
        for (a, b) in f.features.iter().zip(z) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(f.matches_used, 38);
    }

    #[test]
    fn fingerprint_errors() {
        assert!(matches!(team_fingerprint(&[]), Err(Error::Domain(_))));
        let mixed = [profile("T", [0.0; 5]), profile("U", [0.0; 5])];
        assert!(matches!(team_fingerprint(&mixed), Err(Error::Contract(_))));
    }

    #[test]
    fn grouping_by_team() {
        let profiles = [
            profile("B", [1.0; 5]),
            profile("A", [2.0; 5]),
            profile("B", [3.0; 5]),
        ];
        let fps = fingerprints_by_team(&profiles).unwrap();
        assert_eq!(
            fps.iter().map(|f| f.team_id.as_str()).collect::<Vec<_>>(),
            ["A", "B"]
        );
        assert_eq!(fps[1].features, vec![2.0; 5]);
    }
}
