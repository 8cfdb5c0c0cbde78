//! Plain-text graph and matrix formats.
//!
//! Edge lists hold one `u v [w]` edge per line with 0-based node ids.
//! `# color <node> <label>` assigns a node color; any other line starting
//! with `#` is a comment. The node count is one more than the largest id seen.

use super::Graph;
use crate::error::{CanonError, Result};
use crate::linalg::Matrix;

fn parse_err(line: usize, message: impl Into<String>) -> CanonError {
    CanonError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("expected a node index, found `{tok}`")))
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut edges: Vec<(usize, usize, f64, usize)> = Vec::new();
    let mut colors: Vec<(usize, String, usize)> = Vec::new();
    let mut max_id: Option<usize> = None;
    let mut bump = |i: usize| max_id = Some(max_id.map_or(i, |m: usize| m.max(i)));

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.first() == Some(&"color") {
                if toks.len() != 3 {
                    return Err(parse_err(line, "expected `# color <node> <label>`"));
                }
                let node = parse_index(toks[1], line)?;
                bump(node);
                colors.push((node, toks[2].to_string(), line));
            }
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if !(2..=3).contains(&toks.len()) {
            return Err(parse_err(
                line,
                format!("expected `u v [w]`, found {} fields", toks.len()),
            ));
        }
        let u = parse_index(toks[0], line)?;
        let v = parse_index(toks[1], line)?;
        let w = match toks.get(2) {
            Some(t) => t
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite() && *w != 0.0)
                .ok_or_else(|| parse_err(line, format!("invalid edge weight `{t}`")))?,
            None => 1.0,
        };
        if u == v {
            return Err(parse_err(line, format!("self-loop at node {u}")));
        }
        bump(u);
        bump(v);
        edges.push((u, v, w, line));
    }

    let n = max_id
        .map(|m| m + 1)
        .ok_or_else(|| parse_err(0, "no edges or nodes"))?;
    let mut a = Matrix::zeros(n, n);
    for (u, v, w, line) in edges {
        if a[(u, v)] != 0.0 {
            return Err(parse_err(line, format!("duplicate edge {u} {v}")));
        }
        a[(u, v)] = w;
        a[(v, u)] = w;
    }
    let graph = Graph::new(a)?;
    if colors.is_empty() {
        return Ok(graph);
    }
    let mut labels: Vec<Option<String>> = vec![None; n];
    for (node, label, line) in colors {
        if labels[node].replace(label).is_some() {
            return Err(parse_err(line, format!("node {node} colored twice")));
        }
    }
    graph.with_colors(labels.into_iter().map(Option::unwrap_or_default).collect())
}

/// Dense matrix, one row per line, entries separated by commas or whitespace.
/// Blank lines and `#` comments are skipped.
pub fn parse_dense_matrix(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(line, format!("invalid number `{t}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    line,
                    format!("row has {} entries, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "empty matrix"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(Matrix::from_row_iterator(r, c, rows.into_iter().flatten()))
}

fn fmt_entry(x: f64) -> String {
    let x = x + 0.0;
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

/// One line per row, entries comma separated, in shortest round-trip form.
pub fn format_matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| fmt_entry(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Adjacency matrices as CSV blocks separated by blank lines.
pub fn format_matrix_blocks(blocks: &[Matrix]) -> String {
    blocks
        .iter()
        .map(format_matrix_csv)
        .collect::<Vec<_>>()
        .join("\n")
}
