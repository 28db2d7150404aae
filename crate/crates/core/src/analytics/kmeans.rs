use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_fingerprints, squared_distance, total_sum_of_squares, TeamFingerprint};
use crate::error::{Error, Result};

pub const DEFAULT_CLUSTERS: usize = 4;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const KMEANS_RESTARTS: usize = 10;

/// Result of k-means over team fingerprints.
///
/// Cluster indices are numbered by first appearance in the input order, so the
/// first team is always in cluster 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub assignments: BTreeMap<String, usize>,
    pub centroids: Vec<Vec<f64>>,
    pub within_ss: f64,
    pub total_ss: f64,
    pub between_over_total: f64,
}

impl ClusterAssignment {
    /// `within_ss / total_ss`, taken as 1 when there is no spread at all.
    pub fn within_over_total(&self) -> f64 {
        if self.total_ss > 0.0 {
            self.within_ss / self.total_ss
        } else {
            1.0
        }
    }

    pub fn cluster_of(&self, team_id: &str) -> Option<usize> {
        self.assignments.get(team_id).copied()
    }

    pub fn members(&self, cluster: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &c)| c == cluster)
            .map(|(t, _)| t.as_str())
            .collect()
    }
}

/// State of one Lloyd run.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Objective after each centroid update.
    pub within_ss_trace: Vec<f64>,
    pub converged: bool,
}

impl LloydRun {
    pub fn within_ss(&self) -> f64 {
        self.within_ss_trace.last().copied().unwrap_or(0.0)
    }
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn within_ss(points: &[&[f64]], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| squared_distance(p, &centroids[l]))
        .sum()
}

/// Recomputes centroids as member means. An empty cluster takes over the
/// point farthest from its centroid among clusters with more than one member.
fn update_centroids(points: &[&[f64]], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            break;
        };
        let donor = (0..points.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .map(|i| (i, squared_distance(points[i], &centroids[labels[i]])))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            })
            .map(|(i, _)| i)
            .expect("k never exceeds the number of points");
        labels[donor] = empty;
        centroids[empty] = points[donor].to_vec();
    }
    let dim = points.first().map_or(0, |p| p.len());
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels.iter()) {
        sizes[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p.iter()) {
            *s += x;
        }
    }
    for ((centroid, sum), size) in centroids.iter_mut().zip(sums).zip(sizes) {
        *centroid = sum.into_iter().map(|s| s / size as f64).collect();
    }
}

/// Lloyd iterations from the given initial centroids.
pub fn lloyd(points: &[&[f64]], initial: Vec<Vec<f64>>, max_iter: usize) -> LloydRun {
    let mut centroids = initial;
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter.max(1) {
        update_centroids(points, &mut labels, &mut centroids);
        trace.push(within_ss(points, &labels, &centroids));
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    if !converged {
        update_centroids(points, &mut labels, &mut centroids);
        trace.push(within_ss(points, &labels, &centroids));
    }
    LloydRun {
        labels,
        centroids,
        within_ss_trace: trace,
        converged,
    }
}

/// k-means++ seeding.
fn plus_plus(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Best of [`KMEANS_RESTARTS`] k-means++/Lloyd runs by within-cluster sum of squares.
pub fn kmeans(
    fingerprints: &[TeamFingerprint],
    clusters: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterAssignment> {
    check_fingerprints(fingerprints)?;
    if clusters == 0 || clusters > fingerprints.len() {
        return Err(Error::Domain(format!(
            "cannot form {clusters} clusters from {} teams",
            fingerprints.len()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = fingerprints
        .iter()
        .find(|f| !seen.insert(f.team_id.as_str()))
    {
        return Err(Error::Contract(format!(
            "team {} appears twice",
            dup.team_id
        )));
    }
    let points: Vec<&[f64]> = fingerprints.iter().map(|f| f.features.as_slice()).collect();

    let mut best: Option<LloydRun> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let run = lloyd(&points, plus_plus(&points, clusters, &mut rng), max_iter);
        if best
            .as_ref()
            .is_none_or(|b| run.within_ss() < b.within_ss())
        {
            best = Some(run);
        }
    }
    let run = best.unwrap();

    // Renumber clusters by first appearance.
    let mut remap = vec![usize::MAX; clusters];
    let mut next = 0;
    for &l in &run.labels {
        if remap[l] == usize::MAX {
            remap[l] = next;
            next += 1;
        }
    }
    let mut centroids = vec![Vec::new(); clusters];
    for (old, centroid) in run.centroids.iter().enumerate() {
        centroids[remap[old]] = centroid.clone();
    }
    let assignments = fingerprints
        .iter()
        .zip(&run.labels)
        .map(|(f, &l)| (f.team_id.clone(), remap[l]))
        .collect();

    let within = run.within_ss();
    let total = total_sum_of_squares(&points);
    let between_over_total = if total > 0.0 {
        1.0 - within / total
    } else {
        0.0
    };
    Ok(ClusterAssignment {
        assignments,
        centroids,
        within_ss: within,
        total_ss: total,
        between_over_total,
    })
}
