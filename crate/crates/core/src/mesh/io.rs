//! Plain-text mesh format:
//!
//! ```text
//! vertices V triangles T
//! x y          (V lines)
//! i j k        (T lines, 0-based, counterclockwise)
//! ```

use std::io::{BufRead, Write};

use super::TriMesh;
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &TriMesh, mut out: W) -> Result<()> {
    writeln!(
        out,
        "vertices {} triangles {}",
        mesh.num_vertices(),
        mesh.num_triangles()
    )?;
    for p in mesh.vertices() {
        writeln!(out, "{} {}", p[0], p[1])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<TriMesh> {
    let bad = |msg: String| Error::MalformedMesh(msg);
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty mesh file".into()))??;
    let words: Vec<&str> = header.split_whitespace().collect();
    let (nv, nt) = match words.as_slice() {
        ["vertices", v, "triangles", t] => (
            v.parse::<usize>().map_err(|e| bad(format!("vertex count: {e}")))?,
            t.parse::<usize>().map_err(|e| bad(format!("triangle count: {e}")))?,
        ),
        _ => return Err(bad(format!("bad header `{header}`"))),
    };
    let mut vertices = Vec::with_capacity(nv);
    let mut triangles = Vec::with_capacity(nt);
    for i in 0..nv + nt {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("unexpected end of file at record {i}")))??;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if i < nv {
            let [x, y] = fields.as_slice() else {
                return Err(bad(format!("vertex line `{line}`")));
            };
            let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
            vertices.push([parse(x)?, parse(y)?]);
        } else {
            let [a, b, c] = fields.as_slice() else {
                return Err(bad(format!("triangle line `{line}`")));
            };
            let parse = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("`{s}`: {e}")));
            triangles.push([parse(a)?, parse(b)?, parse(c)?]);
        }
    }
    TriMesh::new(vertices, triangles)
}
