use serde::Serialize;

use super::{check_fingerprints, squared_distance, TeamFingerprint};
use crate::error::{Error, Result};

/// One agglomeration step. Node ids below the leaf count are leaves; merge
/// `i` creates node `leaves + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// Increase in total within-cluster sum of squares caused by the merge.
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
}

/// Nested view of a dendrogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DendrogramNode {
    Leaf {
        team_id: String,
    },
    Merge {
        height: f64,
        size: usize,
        children: [Box<DendrogramNode>; 2],
    },
}

impl Dendrogram {
    pub fn root(&self) -> usize {
        self.leaves.len() + self.merges.len() - 1
    }

    pub fn tree(&self) -> DendrogramNode {
        self.node(self.root())
    }

    fn node(&self, id: usize) -> DendrogramNode {
        if id < self.leaves.len() {
            DendrogramNode::Leaf {
                team_id: self.leaves[id].clone(),
            }
        } else {
            let m = &self.merges[id - self.leaves.len()];
            DendrogramNode::Merge {
                height: m.height,
                size: m.size,
                children: [Box::new(self.node(m.left)), Box::new(self.node(m.right))],
            }
        }
    }

    /// Leaf indices in left-to-right drawing order.
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.leaves.len());
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            if id < self.leaves.len() {
                out.push(id);
            } else {
                let m = &self.merges[id - self.leaves.len()];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    }

    /// Sum of all merge heights; equals the total sum of squares of the input.
    pub fn total_height(&self) -> f64 {
        self.merges.iter().map(|m| m.height).sum()
    }
}

struct Cluster {
    node: usize,
    size: usize,
    /// Smallest team id among members, used for tie-breaks.
    label: String,
}

/// Ward agglomerative clustering with Lance-Williams updates.
///
/// Ties between equal merge costs go to the pair whose smallest member team
/// ids sort first.
pub fn ward_cluster(fingerprints: &[TeamFingerprint]) -> Result<Dendrogram> {
    check_fingerprints(fingerprints)?;
    let n = fingerprints.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "ward clustering needs at least 2 teams, got {n}"
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

    // cost[i][j]: ESS increase of merging slots i and j.
    let mut cost = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let d = squared_distance(&fingerprints[i].features, &fingerprints[j].features) / 2.0;
            cost[i][j] = d;
            cost[j][i] = d;
        }
    }
    let mut slots: Vec<Option<Cluster>> = fingerprints
        .iter()
        .enumerate()
        .map(|(i, f)| {
            Some(Cluster {
                node: i,
                size: 1,
                label: f.team_id.clone(),
            })
        })
        .collect();

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..n {
            let Some(ci) = &slots[i] else { continue };
            for j in i + 1..n {
                let Some(cj) = &slots[j] else { continue };
                let better = match best {
                    None => true,
                    Some((bi, bj)) => {
                        let (c, bc) = (cost[i][j], cost[bi][bj]);
                        c < bc || (c == bc && pair_key(ci, cj) < pair_key_at(&slots, bi, bj))
                    }
                };
                if better {
                    best = Some((i, j));
                }
            }
        }
        let (a, b) = best.unwrap();
        let ca = slots[a].take().unwrap();
        let cb = slots[b].take().unwrap();
        let height = cost[a][b];
        let (na, nb) = (ca.size as f64, cb.size as f64);
        for x in 0..n {
            let Some(cx) = &slots[x] else { continue };
            let nx = cx.size as f64;
            let updated =
                ((na + nx) * cost[a][x] + (nb + nx) * cost[b][x] - nx * height) / (na + nb + nx);
            cost[a][x] = updated;
            cost[x][a] = updated;
        }
        let (left, right) = if ca.label <= cb.label {
            (&ca, &cb)
        } else {
            (&cb, &ca)
        };
        merges.push(Merge {
            left: left.node,
            right: right.node,
            height,
            size: ca.size + cb.size,
        });
        slots[a] = Some(Cluster {
            node: n + step,
            size: ca.size + cb.size,
            label: left.label.clone(),
        });
    }
    Ok(Dendrogram {
        leaves: fingerprints.iter().map(|f| f.team_id.clone()).collect(),
        merges,
    })
}

fn pair_key<'a>(a: &'a Cluster, b: &'a Cluster) -> (&'a str, &'a str) {
    if a.label <= b.label {
        (&a.label, &b.label)
    } else {
        (&b.label, &a.label)
    }
}

fn pair_key_at(slots: &[Option<Cluster>], i: usize, j: usize) -> (&str, &str) {
    pair_key(slots[i].as_ref().unwrap(), slots[j].as_ref().unwrap())
}
