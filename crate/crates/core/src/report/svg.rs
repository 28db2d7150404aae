//! Static SVG views of the clustering outputs.

use std::fmt::Write;

use crate::analytics::{ClusterAssignment, Dendrogram, PcaProjection};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 520.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

/// Maps `[lo, hi]` onto `[a, b]`, padding degenerate ranges.
fn scale(lo: f64, hi: f64, a: f64, b: f64) -> impl Fn(f64) -> f64 {
    let (lo, hi) = if hi - lo > 1e-12 {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    };
    let pad = (hi - lo) * 0.05;
    let (lo, hi) = (lo - pad, hi + pad);
    move |x| a + (x - lo) / (hi - lo) * (b - a)
}

/// Scatter of the first two principal coordinates, colored by cluster.
pub fn pca_scatter(projection: &PcaProjection, clusters: Option<&ClusterAssignment>) -> String {
    let mut out = String::new();
    header(&mut out, "Team motif fingerprints (PCA)");
    let coord = |c: &Vec<f64>, i: usize| c.get(i).copied().unwrap_or(0.0);
    let xs: Vec<f64> = projection
        .coordinates
        .values()
        .map(|c| coord(c, 0))
        .collect();
    let ys: Vec<f64> = projection
        .coordinates
        .values()
        .map(|c| coord(c, 1))
        .collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (x0, x1, y0, y1) = if xs.is_empty() {
        (0.0, 1.0, 0.0, 1.0)
    } else {
        (min(&xs), max(&xs), min(&ys), max(&ys))
    };
    let sx = scale(x0, x1, MARGIN, WIDTH - MARGIN);
    let sy = scale(y0, y1, HEIGHT - MARGIN, MARGIN);

    let _ = writeln!(
        out,
        r#"<g stroke="black"><line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}"/></g>"#,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let ratio = |i: usize| {
        projection
            .explained_variance_ratio
            .get(i)
            .copied()
            .unwrap_or(0.0)
            * 100.0
    };
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">PC1 ({:.1}%)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        ratio(0)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">PC2 ({:.1}%)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        ratio(1)
    );
    for (team, c) in &projection.coordinates {
        let (x, y) = (sx(coord(c, 0)), sy(coord(c, 1)));
        let color = clusters
            .and_then(|cl| cl.cluster_of(team))
            .map_or("#333333", |l| PALETTE[l % PALETTE.len()]);
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="{color}"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 7.0,
            y - 4.0,
            escape(team)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Dendrogram with leaves along the bottom and merge height on the vertical axis.
pub fn dendrogram(dendrogram: &Dendrogram) -> String {
    let mut out = String::new();
    header(
        &mut out,
        "Ward clustering (height = increase in within-cluster SS)",
    );
    let n = dendrogram.leaves.len();
    let order = dendrogram.leaf_order();
    let bottom = HEIGHT - 110.0;
    let step = (WIDTH - 2.0 * MARGIN) / n.max(1) as f64;
    let max_h = dendrogram
        .merges
        .iter()
        .map(|m| m.height)
        .fold(0.0, f64::max);
    let sy = scale(0.0, max_h, bottom, MARGIN);

    // x position and height of every node
    let mut pos = vec![(0.0, 0.0); n + dendrogram.merges.len()];
    for (slot, &leaf) in order.iter().enumerate() {
        pos[leaf] = (MARGIN + step * (slot as f64 + 0.5), 0.0);
    }
    let _ = writeln!(out, r#"<g stroke="black" fill="none">"#);
    for (i, m) in dendrogram.merges.iter().enumerate() {
        let (xl, hl) = pos[m.left];
        let (xr, hr) = pos[m.right];
        let y = sy(m.height);
        let _ = writeln!(
            out,
            r#"<path d="M{xl:.2},{:.2} V{y:.2} H{xr:.2} V{:.2}"/>"#,
            sy(hl),
            sy(hr)
        );
        pos[n + i] = ((xl + xr) / 2.0, m.height);
    }
    let _ = writeln!(out, "</g>");
    for &leaf in &order {
        let x = pos[leaf].0;
        let y = sy(0.0) + 8.0;
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="end" transform="rotate(-60 {x:.2} {y:.2})">{}</text>"#,
            escape(&dendrogram.leaves[leaf])
        );
    }
    out.push_str("</svg>\n");
    out
}
