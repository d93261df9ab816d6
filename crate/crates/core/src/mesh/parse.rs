//! Plain-text mesh format.
//!
//! ```text
//! # comment
//! vertices N
//! x y z          (N lines)
//! cells M
//! i0 i1 i2 i3    (M lines)
//! boundary K     (optional)
//! f0 f1 f2 flag  (K lines)
//! ```

use std::fmt::Write as _;

use super::{CoarseMesh, Point};
use crate::error::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-empty line with comments stripped, split into tokens.
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (n, raw) in self.inner.by_ref() {
            self.last = n + 1;
            let line = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((n + 1, tokens));
            }
        }
        None
    }

    fn expect_tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next_tokens().ok_or_else(|| Error::Parse {
            line: self.last + 1,
            message: format!("unexpected end of input, expected {what}"),
        })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{token}'")))
}

fn header(lines: &mut Lines<'_>, keyword: &str) -> Result<usize> {
    let (n, tokens) = lines.expect_tokens(&format!("'{keyword} <count>'"))?;
    match tokens.as_slice() {
        [k, count] if *k == keyword => field(n, count, "count"),
        _ => Err(parse_err(n, format!("expected '{keyword} <count>'"))),
    }
}

fn record<'a>(lines: &mut Lines<'a>, arity: usize, what: &str) -> Result<(usize, Vec<&'a str>)> {
    let (n, tokens) = lines.expect_tokens(what)?;
    if tokens.len() != arity {
        return Err(parse_err(
            n,
            format!("expected {arity} fields for {what}, found {}", tokens.len()),
        ));
    }
    Ok((n, tokens))
}

/// Parses and validates a mesh file.
pub fn parse_mesh(text: &str) -> Result<CoarseMesh> {
    let mut lines = Lines::new(text);

    let nv = header(&mut lines, "vertices")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, t) = record(&mut lines, 3, "vertex")?;
        let mut p: Point = [0.0; 3];
        for d in 0..3 {
            p[d] = field(n, t[d], "coordinate")?;
            if !p[d].is_finite() {
                return Err(parse_err(n, "coordinate is not finite"));
            }
        }
        vertices.push(p);
    }

    let nc = header(&mut lines, "cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (n, t) = record(&mut lines, 4, "cell")?;
        let mut c = [0usize; 4];
        for d in 0..4 {
            c[d] = field(n, t[d], "vertex id")?;
            if c[d] >= nv {
                return Err(parse_err(n, format!("vertex id {} out of range 0..{nv}", c[d])));
            }
        }
        cells.push(c);
    }

    let mut boundary = Vec::new();
    if let Some((n, tokens)) = lines.next_tokens() {
        let nb: usize = match tokens.as_slice() {
            ["boundary", count] => field(n, count, "count")?,
            _ => return Err(parse_err(n, "expected 'boundary <count>' or end of input")),
        };
        for _ in 0..nb {
            let (n, t) = record(&mut lines, 4, "boundary face")?;
            let mut f = [0usize; 3];
            for d in 0..3 {
                f[d] = field(n, t[d], "vertex id")?;
            }
            let flag: i32 = field(n, t[3], "flag")?;
            boundary.push((f, flag));
        }
        if let Some((n, _)) = lines.next_tokens() {
            return Err(parse_err(n, "trailing content after boundary section"));
        }
    }

    CoarseMesh::new(vertices, cells, &boundary)
}

/// Writes a mesh in canonical form; `parse_mesh` of the result reproduces
/// the same mesh.
pub fn serialize_mesh(mesh: &CoarseMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "vertices {}", mesh.vertices().len());
    for p in mesh.vertices() {
        // `{:?}` prints the shortest representation that round-trips
        let _ = writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    let _ = writeln!(out, "cells {}", mesh.num_cells());
    for c in mesh.cells() {
        let _ = writeln!(out, "{} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let overrides = mesh.boundary_overrides();
    if !overrides.is_empty() {
        let _ = writeln!(out, "boundary {}", overrides.len());
        for (f, flag) in overrides {
            let _ = writeln!(out, "{} {} {} {}", f[0], f[1], f[2], flag);
        }
    }
    out
}
