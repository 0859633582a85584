//! Forward-pass wall time of GCN and GCN² on square lattices of growing
//! size.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::degree_features;
use crate::error::Result;
use crate::message::NetSpec;
use crate::model::{Model, ModelConfig};

use super::lattice::Lattice;
use super::log_log_slope;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub width: usize,
    pub layers: usize,
    pub net: NetSpec,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: (10..=16).map(|k| 1 << k).collect(),
            width: 32,
            layers: 3,
            net: NetSpec {
                hidden: 32,
                ..NetSpec::default()
            },
            repeats: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchRow {
    pub nodes: usize,
    pub edges: usize,
    /// Best-of-repeats forward seconds.
    pub gcn: f64,
    pub gcn2: f64,
    /// One-off structure preparation for GCN².
    pub gcn2_prepare: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    pub gcn_slope: f64,
    pub gcn2_slope: f64,
    /// GCN²/GCN time at the largest size.
    pub ratio_at_largest: f64,
}

/// Rows and columns of a near-square patch with `nodes` nodes.
fn shape(nodes: usize) -> (usize, usize) {
    let mut r = (nodes as f64).sqrt() as usize;
    while r > 1 && !nodes.is_multiple_of(r) {
        r -= 1;
    }
    (r, nodes / r)
}

fn best_of(repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        f()?;
        best = best.min(t.elapsed().as_secs_f64());
    }
    Ok(best)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    let gcn = Model::<f32>::new(ModelConfig::gcn(1, cfg.width, cfg.layers).with_seed(cfg.seed))?;
    let gcn2 = Model::<f32>::new(ModelConfig::gcn2(1, cfg.width, cfg.layers, cfg.net).with_seed(cfg.seed))?;
    // one untimed pass at the largest size, so every size is timed with the
    // allocator already holding large blocks
    if let Some(&n) = cfg.sizes.iter().max() {
        let (r, c) = shape(n);
        let g = Lattice::Square.patch(r, c);
        let x = degree_features(&g);
        gcn2.embed(&gcn2.prepare(&[&g], &[&x])?)?;
    }
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let (r, c) = shape(n);
        let g = Lattice::Square.patch(r, c);
        let x = degree_features(&g);
        let b1 = gcn.prepare(&[&g], &[&x])?;
        let t = Instant::now();
        let b2 = gcn2.prepare(&[&g], &[&x])?;
        let gcn2_prepare = t.elapsed().as_secs_f64();
        let t1 = best_of(cfg.repeats, || gcn.embed(&b1).map(|_| ()))?;
        let t2 = best_of(cfg.repeats, || gcn2.embed(&b2).map(|_| ()))?;
        log::info!("{n} nodes: gcn {t1:.4}s, gcn2 {t2:.4}s");
        rows.push(BenchRow {
            nodes: g.node_count(),
            edges: g.edge_count(),
            gcn: t1,
            gcn2: t2,
            gcn2_prepare,
        });
    }
    let slope = |f: fn(&BenchRow) -> f64| log_log_slope(&rows.iter().map(|r| (r.nodes as f64, f(r))).collect::<Vec<_>>());
    let last = rows.last().expect("at least one size");
    Ok(BenchReport {
        config: cfg.clone(),
        gcn_slope: slope(|r| r.gcn),
        gcn2_slope: slope(|r| r.gcn2),
        ratio_at_largest: last.gcn2 / last.gcn,
        rows,
    })
}

/// Log-log line plot of both timings.
pub fn bench_svg(report: &BenchReport) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = report.rows.iter().flat_map(|r| [(r.nodes as f64, r.gcn), (r.nodes as f64, r.gcn2)]).collect();
    let (x0, x1) = pts.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.0.ln()), b.max(p.0.ln())));
    let (y0, y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1.ln()), b.max(p.1.ln())));
    let sx = |x: f64| m + (x.ln() - x0) / (x1 - x0).max(1e-9) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y.ln() - y0) / (y1 - y0).max(1e-9) * (h - 2.0 * m);
    let line = |f: fn(&BenchRow) -> f64, colour: &str| {
        let d: Vec<String> = report.rows.iter().map(|r| format!("{:.1},{:.1}", sx(r.nodes as f64), sy(f(r)))).collect();
        format!("<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>", d.join(" "))
    };
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    s += &format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n");
    s += &format!(
        "<line x1=\"{m}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/><line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{0}\" stroke=\"black\"/>\n",
        h - m,
        w - m
    );
    s += &line(|r| r.gcn, "#1f77b4");
    s += "\n";
    s += &line(|r| r.gcn2, "#d62728");
    s += "\n";
    for r in &report.rows {
        s += &format!(
            "<text x=\"{:.1}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
            sx(r.nodes as f64),
            h - m + 15.0,
            r.nodes
        );
    }
    s += &format!(
        "<text x=\"{}\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">forward time (log-log): GCN slope {:.2} (blue), GCN2 slope {:.2} (red)</text>\n",
        w / 2.0,
        report.gcn_slope,
        report.gcn2_slope
    );
    s += &format!("<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">nodes</text>\n", w / 2.0, h - 15.0);
    s += "</svg>\n";
    s
}
