//! Line-based mesh text format.
//!
//! ```text
//! mesh2d 1
//! v <x> <y>
//! t <i> <j> <k> <mat>
//! be <i> <j> <tag>
//! mat <id> <value>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{BoundaryEdge, Mesh2D, Point, Triangle};
use crate::error::{HsieError, Result};

struct Fields<'a> {
    line: usize,
    text: &'a str,
    tokens: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Fields<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, ch) in text.char_indices() {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    tokens.push((s, &text[s..i]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            tokens.push((s, &text[s..]));
        }
        Self { line, text, tokens, pos: 0 }
    }

    fn err(&self, column: usize, message: impl Into<String>) -> HsieError {
        HsieError::Parse {
            line: self.line,
            column: column + 1,
            message: message.into(),
        }
    }

    fn next<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let Some(&(col, tok)) = self.tokens.get(self.pos) else {
            return Err(self.err(self.text.trim_end().len(), format!("expected {what}")));
        };
        self.pos += 1;
        tok.parse().map_err(|_| self.err(col, format!("invalid {what} `{tok}`")))
    }

    fn finish(&self) -> Result<()> {
        match self.tokens.get(self.pos) {
            Some(&(col, tok)) => Err(self.err(col, format!("unexpected token `{tok}`"))),
            None => Ok(()),
        }
    }
}

/// Parses and validates mesh text.
pub fn parse_mesh(text: &str) -> Result<Mesh2D> {
    let mut vertices: Vec<Point> = Vec::new();
    let mut triangles = Vec::new();
    let mut edges = Vec::new();
    let mut materials = BTreeMap::new();
    let mut header = false;

    for (k, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut f = Fields::new(k + 1, content);
        let Some(&(col, kw)) = f.tokens.first() else {
            continue;
        };
        f.pos = 1;
        if !header {
            if kw != "mesh2d" {
                return Err(f.err(col, "expected header `mesh2d 1`"));
            }
            let version: u32 = f.next("version")?;
            if version != 1 {
                return Err(f.err(f.tokens[1].0, format!("unsupported version {version}")));
            }
            f.finish()?;
            header = true;
            continue;
        }
        match kw {
            "v" => {
                let x: f64 = f.next("x coordinate")?;
                let y: f64 = f.next("y coordinate")?;
                vertices.push([x, y]);
            }
            "t" => {
                let v = [f.next("vertex index")?, f.next("vertex index")?, f.next("vertex index")?];
                let material = f.next("material id")?;
                triangles.push(Triangle { v, material });
            }
            "be" => {
                let v = [f.next("vertex index")?, f.next("vertex index")?];
                let tag = f.next("edge tag")?;
                edges.push(BoundaryEdge { v, tag });
            }
            "mat" => {
                let id: u32 = f.next("material id")?;
                let value: f64 = f.next("material value")?;
                if materials.insert(id, value).is_some() {
                    return Err(f.err(col, format!("material {id} defined twice")));
                }
            }
            "mesh2d" => return Err(f.err(col, "duplicate header")),
            other => return Err(f.err(col, format!("unknown record `{other}`"))),
        }
        f.finish()?;
    }
    if !header {
        return Err(HsieError::Parse {
            line: 1,
            column: 1,
            message: "missing header `mesh2d 1`".into(),
        });
    }
    Mesh2D::new(vertices, triangles, edges, materials)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh2D> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| HsieError::InvalidParameter(format!("cannot read mesh {}: {e}", path.display())))?;
    parse_mesh(&text)
}

/// Writes a mesh; floats use the shortest representation that round-trips.
pub fn write_mesh(mesh: &Mesh2D) -> String {
    let mut s = String::new();
    s.push_str("mesh2d 1\n");
    for (id, n) in &mesh.materials {
        let _ = writeln!(s, "mat {id} {n:?}");
    }
    for p in &mesh.vertices {
        let _ = writeln!(s, "v {:?} {:?}", p[0], p[1]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "t {} {} {} {}", t.v[0], t.v[1], t.v[2], t.material);
    }
    for e in &mesh.boundary_edges {
        let _ = writeln!(s, "be {} {} {}", e.v[0], e.v[1], e.tag);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "\
# unit square
mesh2d 1
mat 1 1.0
v 0 0
v 1 0
v 1 1
v 0 1   # last
t 0 1 2 1
t 0 2 3 1
be 0 1 2
be 1 2 3
be 2 3 4
be 3 0 1
";

    #[test]
    fn parses_unit_square() {
        let m = parse_mesh(SQUARE).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.triangles.len(), 2);
        assert_eq!(m.boundary_edges.len(), 4);
        assert_eq!(m.materials[&1], 1.0);
    }

    #[test]
    fn round_trip_is_exact() {
        let m = parse_mesh(&write_mesh(&parse_mesh(SQUARE).unwrap())).unwrap();
        let again = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(m, again);
        let text = "mesh2d 1\nmat 1 2.1025\nv 0.1 0.2\nv 0.30000000000000004 0.2\nv 0.1 0.7\nt 0 1 2 1\nbe 0 1 1\nbe 1 2 1\nbe 2 0 1\n";
        let m = parse_mesh(text).unwrap();
        assert_eq!(m.vertices[1][0], 0.30000000000000004);
        assert_eq!(parse_mesh(&write_mesh(&m)).unwrap(), m);
    }

    #[test]
    fn reports_line_and_column() {
        let bad = "mesh2d 1\nv 0 0\nv 1 zz\n";
        match parse_mesh(bad).unwrap_err() {
            HsieError::Parse { line, column, .. } => assert_eq!((line, column), (3, 5)),
            e => panic!("unexpected {e:?}"),
        }
        match parse_mesh("v 0 0\n").unwrap_err() {
            HsieError::Parse { line, column, .. } => assert_eq!((line, column), (1, 1)),
            e => panic!("unexpected {e:?}"),
        }
        match parse_mesh("mesh2d 1\nt 0 1\n").unwrap_err() {
            HsieError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(parse_mesh("mesh2d 1\nv 0 0 0\n"), Err(HsieError::Parse { .. })));
        assert!(matches!(parse_mesh("mesh2d 2\n"), Err(HsieError::Parse { .. })));
    }
}
