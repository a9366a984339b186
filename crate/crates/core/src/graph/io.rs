//! Plain-text graph files.
//!
//! ```text
//! n=<nodes> d=<feature dim> c=<classes or 0>
//! <n lines of d feature values>
//! <n label lines, only when c > 0>
//! edges
//! <one "u v" line per undirected edge, u < v>
//! ```
//!
//! Floats are written in shortest round-trip form, so a save/load cycle is
//! bit-exact.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Graph, LabelVector};
use crate::error::FormatError;
use crate::matrix::{FeatureMatrix, Matrix};

/// A graph together with its node features and optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: Option<LabelVector>,
}

fn parse_header(line: &str) -> Result<(usize, usize, usize), FormatError> {
    let bad = || FormatError::MalformedHeader(line.to_string());
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(bad());
    }
    let mut values = [0usize; 3];
    for ((field, key), slot) in fields.iter().zip(["n", "d", "c"]).zip(&mut values) {
        let (k, v) = field.split_once('=').ok_or_else(bad)?;
        if k != key {
            return Err(bad());
        }
        *slot = v.parse().map_err(|_| bad())?;
    }
    Ok((values[0], values[1], values[2]))
}

pub fn read_graph<R: Read>(reader: R) -> Result<Dataset, FormatError> {
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next_line = |what: &str| -> Result<(usize, String), FormatError> {
        match lines.next() {
            Some((no, line)) => Ok((no, line?)),
            None => Err(FormatError::MalformedLine {
                line: 0,
                detail: format!("unexpected end of file while reading {what}"),
            }),
        }
    };

    let (_, header) = next_line("header")
        .map_err(|_| FormatError::MalformedHeader("empty file".into()))?;
    let (n, d, c) = parse_header(header.trim())?;

    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n {
        let (no, line) = next_line("features")?;
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| FormatError::MalformedLine {
                line: no,
                detail: format!("bad feature value {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(FormatError::MalformedLine {
                    line: no,
                    detail: "non-finite feature value".into(),
                });
            }
            values.push(v);
        }
        if values.len() - before != d {
            return Err(FormatError::MalformedLine {
                line: no,
                detail: format!("expected {d} values, found {}", values.len() - before),
            });
        }
    }
    let features = Matrix::from_vec(n, d, values).expect("row count checked");

    let labels = if c > 0 {
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let (no, line) = next_line("labels")?;
            let label: usize = line.trim().parse().map_err(|_| FormatError::MalformedLine {
                line: no,
                detail: format!("bad label {:?}", line.trim()),
            })?;
            if label >= c {
                return Err(FormatError::LabelOutOfRange {
                    line: no,
                    label,
                    classes: c,
                });
            }
            labels.push(label);
        }
        Some(LabelVector::new(labels, c).expect("labels range-checked"))
    } else {
        None
    };

    let (_, sentinel) = next_line("sentinel").map_err(|_| FormatError::MissingSentinel)?;
    if sentinel.trim() != "edges" {
        return Err(FormatError::MissingSentinel);
    }

    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (no, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = || FormatError::MalformedLine {
            line: no,
            detail: format!("bad edge line {line:?}"),
        };
        let mut it = line.split_whitespace();
        let u: usize = it.next().ok_or_else(malformed)?.parse().map_err(|_| malformed())?;
        let v: usize = it.next().ok_or_else(malformed)?.parse().map_err(|_| malformed())?;
        if it.next().is_some() {
            return Err(malformed());
        }
        if u >= n || v >= n {
            return Err(FormatError::IndexOutOfRange { line: no, u, v, n });
        }
        if u >= v {
            return Err(FormatError::NonCanonicalEdge { line: no, u, v });
        }
        if !seen.insert((u, v)) {
            return Err(FormatError::DuplicateEdge { line: no, u, v });
        }
        edges.push((u, v));
    }
    let graph = Graph::from_edges(n, &edges).expect("edges validated");
    Ok(Dataset {
        graph,
        features,
        labels,
    })
}

pub fn write_graph<W: Write>(
    mut w: W,
    graph: &Graph,
    features: &FeatureMatrix,
    labels: Option<&LabelVector>,
) -> std::io::Result<()> {
    let n = graph.num_nodes();
    assert_eq!(features.rows(), n, "feature rows must match node count");
    let c = labels.map_or(0, |l| l.classes());
    writeln!(w, "n={n} d={} c={c}", features.cols())?;
    for row in features.row_iter() {
        let mut first = true;
        for v in row {
            if !first {
                w.write_all(b" ")?;
            }
            write!(w, "{v:?}")?;
            first = false;
        }
        writeln!(w)?;
    }
    if let Some(labels) = labels {
        for l in labels.as_slice() {
            writeln!(w, "{l}")?;
        }
    }
    writeln!(w, "edges")?;
    for (u, v) in graph.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<Dataset, FormatError> {
    read_graph(File::open(path)?)
}

pub fn save_graph(
    path: impl AsRef<Path>,
    graph: &Graph,
    features: &FeatureMatrix,
    labels: Option<&LabelVector>,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_graph(&mut w, graph, features, labels)?;
    w.flush()
}
