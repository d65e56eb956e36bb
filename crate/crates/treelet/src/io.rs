//! Edge-list files.
//!
//! The first non-comment line is `n m`, followed by `m` lines `u v` with
//! 0-based ids. Blank lines and lines starting with `#` are skipped.
//! Templates use the same format.

use std::path::Path;

use treelet_core::graph::BuildReport;
use treelet_core::template::RootChoice;
use treelet_core::{Graph, Template};

use crate::error::{Error, Result};

pub struct EdgeList {
    pub n_vertices: usize,
    pub edges: Vec<(u32, u32)>,
}

pub fn parse_edge_list(text: &str, path: &Path) -> Result<EdgeList> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err(line_no, format!("expected two fields, got {line:?}")));
        };
        let parse = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| err(line_no, format!("not a non-negative integer: {s:?}")))
        };
        let (a, b) = (parse(a)?, parse(b)?);
        match header {
            None => {
                let n = usize::try_from(a)
                    .ok()
                    .filter(|&n| n <= u32::MAX as usize)
                    .ok_or_else(|| err(line_no, format!("vertex count {a} too large")))?;
                header = Some((n, b as usize));
                edges.reserve(b.min(1 << 24) as usize);
            }
            Some((n, _)) => {
                for v in [a, b] {
                    if v >= n as u64 {
                        return Err(err(line_no, format!("vertex {v} not below declared count {n}")));
                    }
                }
                edges.push((a as u32, b as u32));
            }
        }
    }
    let Some((n_vertices, m)) = header else {
        return Err(err(0, "missing \"n m\" header".into()));
    };
    if edges.len() != m {
        return Err(err(0, format!("header declares {m} edges, found {}", edges.len())));
    }
    Ok(EdgeList { n_vertices, edges })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a graph, dropping self-loops and repeated edges; the report says
/// how many were dropped.
pub fn load_edge_list(path: &Path) -> Result<(Graph, BuildReport)> {
    let list = parse_edge_list(&read(path)?, path)?;
    Ok(Graph::from_edges(list.n_vertices, &list.edges)?)
}

pub fn parse_template(text: &str, path: &Path, root: RootChoice) -> Result<Template> {
    let list = parse_edge_list(text, path)?;
    let edges: Vec<(usize, usize)> = list
        .edges
        .iter()
        .map(|&(a, b)| (a as usize, b as usize))
        .collect();
    Ok(Template::new(list.n_vertices, &edges, root)?)
}

pub fn load_template(path: &Path, root: RootChoice) -> Result<Template> {
    parse_template(&read(path)?, path, root)
}

pub fn write_edge_list(path: &Path, g: &Graph, comment: &str) -> Result<()> {
    use std::io::Write;
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    (|| -> std::io::Result<()> {
        if !comment.is_empty() {
            writeln!(w, "# {comment}")?;
        }
        writeln!(w, "{} {}", g.n_vertices(), g.n_edges())?;
        for (u, v) in g.edges() {
            writeln!(w, "{u} {v}")?;
        }
        w.flush()
    })()
    .map_err(io_err)
}
