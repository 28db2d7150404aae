use std::collections::BTreeMap;

use super::{check_fingerprints, TeamFingerprint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcaOptions {
    pub dims: usize,
    /// Divide each feature by its sample standard deviation after centering.
    pub standardize: bool,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            dims: 2,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub coordinates: BTreeMap<String, Vec<f64>>,
    /// Squared singular value over `n - 1` for each kept axis.
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Unit principal axes, one row per kept component.
    pub components: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Per-feature divisor when standardizing.
    pub scale: Option<Vec<f64>>,
}

/// Projects fingerprints onto their top principal axes.
///
/// Axes come from the SVD of the mean-centered feature matrix. Each axis is
/// oriented so that its largest-magnitude loading is positive.
pub fn pca_project(fingerprints: &[TeamFingerprint], options: PcaOptions) -> Result<PcaProjection> {
    let dim = check_fingerprints(fingerprints)?;
    let n = fingerprints.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "pca needs at least 2 teams, got {n}"
        )));
    }
    if options.dims == 0 || options.dims > dim {
        return Err(Error::Domain(format!(
            "pca dimensions must be in 1..={dim}, got {}",
            options.dims
        )));
    }

    let mut mean = vec![0.0; dim];
    for f in fingerprints {
        for (m, x) in mean.iter_mut().zip(&f.features) {
            *m += x / n as f64;
        }
    }
    let scale = options.standardize.then(|| {
        (0..dim)
            .map(|j| {
                let var = fingerprints
                    .iter()
                    .map(|f| (f.features[j] - mean[j]).powi(2))
                    .sum::<f64>()
                    / (n - 1) as f64;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect::<Vec<f64>>()
    });
    let centered: Vec<Vec<f64>> = fingerprints
        .iter()
        .map(|f| {
            (0..dim)
                .map(|j| {
                    let x = f.features[j] - mean[j];
                    scale.as_ref().map_or(x, |s| x / s[j])
                })
                .collect()
        })
        .collect();

    let (singular_values, axes) = right_singular_vectors(&centered, dim);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| singular_values[b].total_cmp(&singular_values[a]));

    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let mut components = Vec::with_capacity(options.dims);
    let mut explained_variance = Vec::with_capacity(options.dims);
    let mut explained_variance_ratio = Vec::with_capacity(options.dims);
    for &axis in order.iter().take(options.dims) {
        let mut v = axes[axis].clone();
        let pivot = v.iter().enumerate().fold(
            0,
            |best, (j, x)| if x.abs() > v[best].abs() { j } else { best },
        );
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let s2 = singular_values[axis].powi(2);
        components.push(v);
        explained_variance.push(s2 / (n - 1) as f64);
        explained_variance_ratio.push(if total > 0.0 { s2 / total } else { 0.0 });
    }

    let coordinates = fingerprints
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let row = &centered[i];
            let coords = components
                .iter()
                .map(|v| row.iter().zip(v).map(|(x, w)| x * w).sum())
                .collect();
            (f.team_id.clone(), coords)
        })
        .collect();

    Ok(PcaProjection {
        coordinates,
        explained_variance,
        explained_variance_ratio,
        components,
        mean,
        scale,
    })
}

/// One-sided Jacobi SVD of an `n x dim` matrix given as rows.
///
/// Returns the singular values and matching unit right singular vectors, one
/// per column of the input (`dim` of each, zero values included).
fn right_singular_vectors(rows: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut cols: Vec<Vec<f64>> = (0..dim)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..dim)
        .map(|j| (0..dim).map(|i| f64::from(u8::from(i == j))).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let rotate = |a: &mut Vec<Vec<f64>>, i: usize, j: usize, c: f64, s: f64| {
        for k in 0..a[i].len() {
            let (x, y) = (a[i][k], a[j][k]);
            a[i][k] = c * x - s * y;
            a[j][k] = s * x + c * y;
        }
    };
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..dim {
            for j in i + 1..dim {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let singular_values = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    (singular_values, v)
}
