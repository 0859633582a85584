//! TU-format directories: `DS_A.txt`, `DS_graph_indicator.txt`,
//! `DS_graph_labels.txt` and optionally `DS_node_labels.txt`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::ConcreteGraph;

use super::GraphDataset;

struct Lines {
    path: String,
    text: String,
}

impl Lines {
    fn open(path: PathBuf) -> Result<Self> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(&path).map_err(|e| Error::parse(&name, 0, format!("cannot read: {e}")))?;
        Ok(Lines { path: name, text })
    }

    /// Non-empty lines with their 1-based numbers.
    fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
    }

    fn ints(&self) -> Result<Vec<i64>> {
        self.iter()
            .map(|(n, l)| l.parse().map_err(|_| Error::parse(&self.path, n, format!("expected one integer, got `{l}`"))))
            .collect()
    }
}

/// Loads a TU directory; the dataset name is the directory's name.
pub fn load_tu(dir: &Path) -> Result<GraphDataset> {
    let name = dir
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Contract(format!("`{}` has no directory name", dir.display())))?
        .to_string();
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let indicator = Lines::open(file("graph_indicator"))?;
    let owner = indicator.ints()?;
    let graph_labels = Lines::open(file("graph_labels"))?.ints()?;
    let count = graph_labels.len();
    for (n, l) in indicator.iter() {
        let g: i64 = l.parse().unwrap_or(0);
        if g < 1 || g as usize > count {
            return Err(Error::parse(&indicator.path, n, format!("graph {g} outside 1..={count}")));
        }
    }

    // local position of each global node within its graph
    let mut original_ids = vec![Vec::new(); count];
    let mut local = Vec::with_capacity(owner.len());
    for (i, &g) in owner.iter().enumerate() {
        let g = g as usize - 1;
        local.push(original_ids[g].len());
        original_ids[g].push(i + 1);
    }

    let adj = Lines::open(file("A"))?;
    let mut edges: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); count];
    for (n, l) in adj.iter() {
        let parts: Vec<&str> = l.split(',').map(str::trim).collect();
        let pair = match parts.as_slice() {
            [a, b] => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
            _ => None,
        };
        let (a, b) = pair.ok_or_else(|| Error::parse(&adj.path, n, format!("expected `i, j`, got `{l}`")))?;
        for x in [a, b] {
            if x < 1 || x > owner.len() {
                return Err(Error::parse(&adj.path, n, format!("node {x} outside 1..={}", owner.len())));
            }
        }
        let (ga, gb) = (owner[a - 1], owner[b - 1]);
        if ga != gb {
            return Err(Error::parse(&adj.path, n, format!("edge joins graphs {ga} and {gb}")));
        }
        if a == b {
            log::warn!("{}:{n}: dropping self-loop at node {a}", adj.path);
            continue;
        }
        edges[ga as usize - 1].insert((local[a - 1], local[b - 1]));
    }

    let mut graphs = Vec::with_capacity(count);
    for (g, set) in edges.into_iter().enumerate() {
        let n = original_ids[g].len();
        let directed = ConcreteGraph::new(0..n, set)?;
        if directed.is_symmetric() {
            graphs.push(directed);
        } else {
            log::warn!("{name}: graph {} is not symmetric; adding reverse edges", g + 1);
            graphs.push(directed.symmetrized());
        }
    }

    let mut values = graph_labels.clone();
    values.sort_unstable();
    values.dedup();
    let labels = graph_labels.iter().map(|v| values.binary_search(v).expect("present")).collect();

    let node_file = file("node_labels");
    let node_labels = if node_file.exists() {
        let nl = Lines::open(node_file)?;
        let flat = nl.ints()?;
        if flat.len() != owner.len() {
            return Err(Error::parse(&nl.path, flat.len(), format!("{} node labels for {} nodes", flat.len(), owner.len())));
        }
        let mut per = vec![Vec::new(); count];
        for (i, &v) in flat.iter().enumerate() {
            per[owner[i] as usize - 1].push(v);
        }
        Some(per)
    } else {
        None
    };

    let ds = GraphDataset {
        name,
        graphs,
        labels,
        classes: values.len(),
        node_labels,
        original_ids,
    };
    ds.validate()?;
    Ok(ds)
}
