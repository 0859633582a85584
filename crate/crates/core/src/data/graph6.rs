//! graph6 lines (short form, `n ≤ 62`).

use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::ConcreteGraph;

/// Parses one graph6 line into an undirected graph on `0..n`.
pub fn parse_graph6_line(line: &str) -> std::result::Result<ConcreteGraph, String> {
    let bytes = line.trim_end().as_bytes();
    let (&head, body) = bytes.split_first().ok_or("empty line")?;
    if !(63..=126).contains(&head) {
        return Err(format!("bad header byte {head:#x}"));
    }
    if head == 126 {
        return Err("long-form sizes (n > 62) are not supported".into());
    }
    let n = (head - 63) as usize;
    let bits = n * n.saturating_sub(1) / 2;
    if body.len() != bits.div_ceil(6) {
        return Err(format!("{} data bytes for n = {n}, expected {}", body.len(), bits.div_ceil(6)));
    }
    if let Some(b) = body.iter().find(|b| !(63..=126).contains(*b)) {
        return Err(format!("bad data byte {b:#x}"));
    }
    let bit = |k: usize| (body[k / 6] - 63) >> (5 - k % 6) & 1 == 1;
    let mut edges = Vec::new();
    let mut k = 0;
    for j in 1..n {
        for i in 0..j {
            if bit(k) {
                edges.push((i, j));
            }
            k += 1;
        }
    }
    ConcreteGraph::undirected_n(n, edges).map_err(|e| e.to_string())
}

/// Parses graph6 text, skipping blank lines and the optional `>>graph6<<`
/// header.
pub fn parse_graph6(text: &str, origin: &str) -> Result<Vec<ConcreteGraph>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let l = l.trim().strip_prefix(">>graph6<<").unwrap_or(l.trim());
            parse_graph6_line(l).map_err(|m| Error::parse(origin, i + 1, m))
        })
        .collect()
}

pub fn load_graph6(path: &Path) -> Result<Vec<ConcreteGraph>> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::parse(&name, 0, format!("cannot read: {e}")))?;
    parse_graph6(&text, &name)
}
