//! Plain-text mesh files.
//!
//! ```text
//! mesh2d 1
//! nodes <n>          then n lines `x y`
//! triangles <n>      then n lines `i j k` (0-based, counterclockwise)
//! boundary <n>       then n lines `i j label`
//! curves <n>         optional; `label circle cx cy r` or `label line ax ay bx by`
//! ```
//!
//! Tokens are whitespace-separated and `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use mixflow_core::geometry::Curve;
use mixflow_core::{Mesh, Segment};

use crate::error::{io_err, CliError, Result};

struct Lines<'a> {
    iter: std::iter::Peekable<Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a>>,
    path: &'a Path,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &'a Path) -> Self {
        let it: Box<dyn Iterator<Item = (usize, Vec<&'a str>)>> = Box::new(text.lines().enumerate().filter_map(|(i, l)| {
            let body = l.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            (!toks.is_empty()).then_some((i + 1, toks))
        }));
        Self { iter: it.peekable(), path, last: 0 }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::Format { path: self.path.to_path_buf(), line, message: message.into() }
    }

    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.iter.next() {
            Some(l) => {
                self.last = l.0;
                Ok(l)
            }
            None => Err(self.err(self.last + 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let (line, toks) = self.next(&format!("'{keyword} <count>'"))?;
        if toks.len() != 2 || toks[0] != keyword {
            return Err(self.err(line, format!("expected '{keyword} <count>', found '{}'", toks.join(" "))));
        }
        toks[1].parse().map_err(|_| self.err(line, format!("invalid count '{}'", toks[1])))
    }

    fn record<T: std::str::FromStr>(&mut self, what: &str, n: usize) -> Result<(usize, Vec<T>)> {
        let (line, toks) = self.next(what)?;
        if toks.len() != n {
            return Err(self.err(line, format!("expected {n} values for {what}, found {}", toks.len())));
        }
        let mut out = Vec::with_capacity(n);
        for t in toks {
            out.push(t.parse().map_err(|_| self.err(line, format!("invalid value '{t}' in {what}")))?);
        }
        Ok((line, out))
    }
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let mut lines = Lines::new(text, path);
    let (line, head) = lines.next("'mesh2d 1'")?;
    if head != ["mesh2d", "1"] {
        return Err(lines.err(line, "expected header 'mesh2d 1'"));
    }
    let n = lines.header("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, v) = lines.record::<f64>("node", 2)?;
        if !v.iter().all(|c| c.is_finite()) {
            return Err(lines.err(line, "node coordinates must be finite"));
        }
        nodes.push([v[0], v[1]]);
    }
    let m = lines.header("triangles")?;
    let mut tris = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, v) = lines.record::<usize>("triangle", 3)?;
        if let Some(bad) = v.iter().find(|&&i| i >= n) {
            return Err(lines.err(line, format!("node index {bad} out of range (mesh has {n} nodes)")));
        }
        tris.push([v[0], v[1], v[2]]);
    }
    let b = lines.header("boundary")?;
    let mut boundary = Vec::with_capacity(b);
    for _ in 0..b {
        let (line, v) = lines.record::<i64>("boundary edge", 3)?;
        if v[0] < 0 || v[1] < 0 || v[0] as usize >= n || v[1] as usize >= n {
            return Err(lines.err(line, format!("boundary edge ({}, {}) references a missing node", v[0], v[1])));
        }
        if !(1..=7).contains(&v[2]) {
            return Err(lines.err(line, format!("boundary label {} is outside 1..=7", v[2])));
        }
        boundary.push(([v[0] as usize, v[1] as usize], v[2]));
    }
    let mut curves = Vec::new();
    if lines.iter.peek().is_some() {
        let c = lines.header("curves")?;
        for _ in 0..c {
            let (line, toks) = lines.next("curve")?;
            curves.push(parse_curve(&toks).map_err(|m| lines.err(line, m))?);
        }
    }
    if let Some((line, toks)) = lines.iter.next() {
        return Err(lines.err(line, format!("trailing content '{}'", toks.join(" "))));
    }
    let mut mesh = Mesh::new(nodes, tris, boundary).map_err(|e| CliError::field(path.display().to_string(), e.to_string()))?;
    mesh.curves = curves;
    Ok(mesh)
}

fn parse_curve(toks: &[&str]) -> Result<(Segment, Curve), String> {
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("invalid value '{s}' in curve"));
    let label: i64 = toks.first().ok_or("empty curve")?.parse().map_err(|_| format!("invalid curve label '{}'", toks[0]))?;
    let seg = Segment::new(label).map_err(|e| e.to_string())?;
    match (toks.get(1).copied(), toks.len()) {
        (Some("circle"), 5) => {
            let r = num(toks[4])?;
            if !(r > 0.0) {
                return Err("circle radius must be positive".into());
            }
            Ok((seg, Curve::Circle { center: [num(toks[2])?, num(toks[3])?], radius: r }))
        }
        (Some("line"), 6) => Ok((seg, Curve::Line { a: [num(toks[2])?, num(toks[3])?], b: [num(toks[4])?, num(toks[5])?] })),
        _ => Err("expected 'label circle cx cy r' or 'label line ax ay bx by'".into()),
    }
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_mesh(&text, path)
}

/// Serializes `mesh`; floats use the shortest round-trip representation.
pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::from("mesh2d 1\n");
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:e} {:e}", p[0], p[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.triangles.len());
    for t in &mesh.triangles {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "boundary {}", mesh.boundary.len());
    for e in &mesh.boundary {
        let _ = writeln!(s, "{} {} {}", e.nodes[0], e.nodes[1], e.label.get());
    }
    if !mesh.curves.is_empty() {
        let _ = writeln!(s, "curves {}", mesh.curves.len());
        for (seg, c) in &mesh.curves {
            match c {
                Curve::Circle { center, radius } => {
                    let _ = writeln!(s, "{} circle {:e} {:e} {:e}", seg.get(), center[0], center[1], radius);
                }
                Curve::Line { a, b } => {
                    let _ = writeln!(s, "{} line {:e} {:e} {:e} {:e}", seg.get(), a[0], a[1], b[0], b[1]);
                }
            }
        }
    }
    s
}

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    std::fs::write(path, format_mesh(mesh)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "\
mesh2d 1   # unit square, two triangles
nodes 4
0 0
1 0
1 1
0 1
triangles 2
0 1 2
0 2 3
boundary 4
0 1 1
1 2 7
2 3 1
3 0 1
";

    #[test]
    fn parses_and_round_trips() {
        let p = Path::new("square.mesh");
        let m = parse_mesh(SQUARE, p).unwrap();
        assert_eq!(m.nodes.len(), 4);
        assert_eq!(m.boundary.iter().filter(|e| e.label == Segment::G7).count(), 1);
        let again = parse_mesh(&format_mesh(&m), p).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn errors_name_the_line() {
        let p = Path::new("bad.mesh");
        let bad = SQUARE.replace("1 2 7", "1 2 9");
        match parse_mesh(&bad, p).unwrap_err() {
            CliError::Format { line, .. } => assert_eq!(line, 12),
            e => panic!("{e}"),
        }
        let short = SQUARE.replace("triangles 2", "triangles 3");
        assert!(matches!(parse_mesh(&short, p).unwrap_err(), CliError::Format { line: 10, .. }));
        assert!(matches!(parse_mesh("mesh2d 2\n", p).unwrap_err(), CliError::Format { line: 1, .. }));
    }

    #[test]
    fn curves_section() {
        let p = Path::new("c.mesh");
        let text = format!("{SQUARE}curves 1\n7 line 1 0 1 1\n");
        let m = parse_mesh(&text, p).unwrap();
        assert_eq!(m.curves, vec![(Segment::G7, Curve::Line { a: [1.0, 0.0], b: [1.0, 1.0] })]);
        assert!(parse_mesh(&format!("{SQUARE}curves 1\n7 circle 0 0 -1\n"), p).is_err());
    }
}
