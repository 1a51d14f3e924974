//! Native text mesh format: a header `dim nv nc`, then `nv` lines of `dim`
//! coordinates, then `nc` lines of `dim + 1` zero-based vertex indices.
//! Lines starting with `#` and blank lines are ignored.

use std::fmt::Write;

use super::SimplicialMesh;
use crate::error::{Error, Result};

struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn tokenize_lines(text: &str) -> Vec<Vec<Token<'_>>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut toks = Vec::new();
        let mut start = None;
        for (i, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    toks.push(Token {
                        text: &line[s..i],
                        line: ln + 1,
                        column: s + 1,
                    });
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        out.push(toks);
    }
    out
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn parse_tok<T: std::str::FromStr>(t: &Token<'_>, what: &str) -> Result<T> {
    t.text
        .parse()
        .map_err(|_| parse_err(t.line, t.column, format!("expected {what}, found `{}`", t.text)))
}

fn expect_count(toks: &[Token<'_>], n: usize, what: &str, last_line: usize) -> Result<()> {
    if toks.len() != n {
        let (line, column) = toks
            .get(n.min(toks.len().saturating_sub(1)))
            .map_or((last_line, 1), |t| (t.line, t.column));
        return Err(parse_err(
            line,
            column,
            format!("expected {n} values for {what}, found {}", toks.len()),
        ));
    }
    Ok(())
}

/// Parses the native mesh format and validates the result.
pub fn load_mesh(text: &str) -> Result<SimplicialMesh> {
    let lines = tokenize_lines(text);
    let mut it = lines.iter();
    let header = it.next().ok_or_else(|| parse_err(1, 1, "missing header line"))?;
    expect_count(header, 3, "the header `dim nv nc`", 1)?;
    let dim: usize = parse_tok(&header[0], "dimension")?;
    let nv: usize = parse_tok(&header[1], "vertex count")?;
    let nc: usize = parse_tok(&header[2], "cell count")?;
    if dim != 2 && dim != 3 {
        return Err(parse_err(header[0].line, header[0].column, "dimension must be 2 or 3"));
    }
    let last_line = text.lines().count();
    let mut coords = Vec::with_capacity(nv * dim);
    for i in 0..nv {
        let toks = it.next().ok_or_else(|| {
            parse_err(last_line + 1, 1, format!("missing vertex line {} of {nv}", i + 1))
        })?;
        expect_count(toks, dim, "a vertex", last_line)?;
        for t in toks {
            coords.push(parse_tok::<f64>(t, "a real coordinate")?);
        }
    }
    let mut cells = Vec::with_capacity(nc * (dim + 1));
    for i in 0..nc {
        let toks = it.next().ok_or_else(|| {
            parse_err(last_line + 1, 1, format!("missing cell line {} of {nc}", i + 1))
        })?;
        expect_count(toks, dim + 1, "a cell", last_line)?;
        for t in toks {
            cells.push(parse_tok::<usize>(t, "a vertex index")?);
        }
    }
    if let Some(extra) = it.next() {
        return Err(parse_err(extra[0].line, extra[0].column, "unexpected trailing data"));
    }
    SimplicialMesh::new(dim, coords, cells)
}

/// Serializes with 17 significant digits so that `load_mesh` reproduces the
/// coordinates exactly.
pub fn write_mesh(mesh: &SimplicialMesh) -> String {
    let d = mesh.dim();
    let mut s = String::new();
    writeln!(s, "{} {} {}", d, mesh.num_vertices(), mesh.num_cells()).unwrap();
    for p in mesh.coords().chunks(d) {
        let line: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(s, "{}", line.join(" ")).unwrap();
    }
    for c in mesh.cells() {
        let line: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        writeln!(s, "{}", line.join(" ")).unwrap();
    }
    s
}
