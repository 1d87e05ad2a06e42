//! Triangulations of planar rectangles with full edge topology.
//!
//! Conventions:
//! - triangles are stored counterclockwise; local edge `i` joins local
//!   vertices `i + 1` and `i + 2` (mod 3) and is opposite local vertex `i`;
//! - every edge stores `tau`, the triangle in which it is traversed as
//!   `vertices[0] -> vertices[1]` in counterclockwise order, and, for interior
//!   edges, `tau_prime`, the neighbour on the other side;
//! - `normal` of an interior edge points from `tau_prime` into `tau`; for a
//!   boundary edge it is the outward normal of the domain;
//! - `tangent` is the unit vector `vertices[0] -> vertices[1]`, i.e. the
//!   counterclockwise tangent of the edge in `tau`.

pub mod condition;
mod io;

pub use condition::{
    estimate_alpha, measure_mesh_condition, verify_fundamental_identity, AlphaEstimate,
    BoundaryEdgeCondition, InteriorEdgeCondition, LinearPoly, MeshConditionReport, QuadraticPoly,
    TriangleGeometry,
};
pub use io::{read_mesh, write_mesh};

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

/// Lower-left corner of the computational square `[0.5, 1.5]^2`.
pub const DOMAIN_ORIGIN: f64 = 0.5;
pub const DOMAIN_SIDE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshKind {
    /// Every square split by its lower-left to upper-right diagonal.
    Regular,
    /// Diagonal direction alternates from column to column.
    Chevron,
    /// Regular split with interior vertices displaced by `delta * h^(1 + q)`.
    Perturbed,
}

impl MeshKind {
    pub fn name(self) -> &'static str {
        match self {
            MeshKind::Regular => "regular",
            MeshKind::Chevron => "chevron",
            MeshKind::Perturbed => "perturbed",
        }
    }
}

impl std::str::FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(MeshKind::Regular),
            "chevron" => Ok(MeshKind::Chevron),
            "perturbed" => Ok(MeshKind::Perturbed),
            other => Err(invalid(format!("unknown mesh kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for MeshKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    pub seed: u64,
    /// Perturbation amplitude `delta`.
    pub delta: f64,
    /// Perturbation exponent `q`; displacements scale like `h^(1 + q)`.
    pub exponent: f64,
    /// Perturbed meshes with a smaller minimum angle (degrees) are rejected.
    pub min_angle_floor_deg: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            seed: 0,
            delta: 0.2,
            exponent: 0.5,
            min_angle_floor_deg: 15.0,
        }
    }
}

/// Structured-family metadata, present for generated meshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshFamily {
    pub kind: MeshKind,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub tau: usize,
    pub tau_prime: Option<usize>,
    pub normal: Point,
    pub tangent: Point,
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tau_prime.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    patches: Vec<Vec<usize>>,
    boundary_vertex: Vec<bool>,
    areas: Vec<f64>,
    bbox: [Point; 2],
    family: Option<MeshFamily>,
}

impl TriMesh {
    /// Builds the topology of a counterclockwise triangulation.
    ///
    /// Rejects triangles with non-positive signed area and non-manifold
    /// edges (shared by more than two triangles or traversed twice in the
    /// same direction).
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::MalformedMesh("no triangles".into()));
        }
        let nv = vertices.len();
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= nv) {
                return Err(Error::MalformedMesh(format!(
                    "triangle {t} references vertex {bad} but only {nv} vertices exist"
                )));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle {
                    index: t,
                    area,
                    vertices: *tri,
                });
            }
            areas.push(area);
        }

        // (min, max) -> edge index
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
        let mut edges: Vec<Edge> = Vec::with_capacity(3 * triangles.len() / 2 + nv);
        let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        lookup.insert(key, edges.len());
                        triangle_edges[t][i] = edges.len();
                        edges.push(Edge {
                            vertices: [a, b],
                            tau: t,
                            tau_prime: None,
                            normal: [0.0; 2],
                            tangent: [0.0; 2],
                            length: 0.0,
                        });
                    }
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.tau_prime.is_some() || edge.vertices != [b, a] {
                            return Err(Error::MalformedMesh(format!(
                                "edge ({a}, {b}) of triangle {t} is non-manifold or inconsistently oriented"
                            )));
                        }
                        edge.tau_prime = Some(t);
                        triangle_edges[t][i] = e;
                    }
                }
            }
        }
        for edge in &mut edges {
            let [a, b] = edge.vertices;
            let d = sub(vertices[b], vertices[a]);
            let len = norm(d);
            edge.length = len;
            edge.tangent = [d[0] / len, d[1] / len];
            // outward normal of tau (right of the ccw tangent)
            let outward = [edge.tangent[1], -edge.tangent[0]];
            edge.normal = if edge.tau_prime.is_some() {
                [-outward[0], -outward[1]]
            } else {
                outward
            };
        }

        let mut boundary_vertex = vec![false; nv];
        for edge in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[edge.vertices[0]] = true;
            boundary_vertex[edge.vertices[1]] = true;
        }

        let mut bbox = [[f64::INFINITY; 2], [f64::NEG_INFINITY; 2]];
        for p in &vertices {
            for c in 0..2 {
                bbox[0][c] = bbox[0][c].min(p[c]);
                bbox[1][c] = bbox[1][c].max(p[c]);
            }
        }

        let mut mesh = TriMesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            patches: Vec::new(),
            boundary_vertex,
            areas,
            bbox,
            family: None,
        };
        mesh.patches = mesh.order_patches()?;
        Ok(mesh)
    }

    /// Incident triangles of every vertex, counterclockwise around it and
    /// rotated to start at the smallest triangle index.
    fn order_patches(&self) -> Result<Vec<Vec<usize>>> {
        let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for (i, &v) in tri.iter().enumerate() {
                incident[v].push((t, i));
            }
        }
        let mut patches = Vec::with_capacity(self.vertices.len());
        for (z, inc) in incident.iter().enumerate() {
            if inc.is_empty() {
                patches.push(Vec::new());
                continue;
            }
            // Crossing the edge (z, previous vertex) moves counterclockwise
            // around z; crossing (z, next vertex) moves clockwise.
            let ccw_next = |t: usize, i: usize| -> Option<usize> {
                let e = &self.edges[self.triangle_edges[t][(i + 1) % 3]];
                e.tau_prime.map(|tp| if tp == t { e.tau } else { tp })
            };
            let local = |t: usize| inc.iter().find(|&&(s, _)| s == t).map(|&(_, i)| i);
            let start = if self.boundary_vertex[z] {
                // first triangle of the fan: its clockwise-side edge is on the boundary
                inc.iter()
                    .find(|&&(t, i)| self.edges[self.triangle_edges[t][(i + 2) % 3]].is_boundary())
                    .map(|&(t, _)| t)
                    .ok_or_else(|| {
                        Error::MalformedMesh(format!("boundary vertex {z} has no boundary fan start"))
                    })?
            } else {
                inc.iter().map(|&(t, _)| t).min().unwrap_or(0)
            };
            let mut fan = vec![start];
            let mut current = start;
            while fan.len() < inc.len() {
                let i = local(current).ok_or_else(|| {
                    Error::MalformedMesh(format!("vertex {z} fan walk left its patch"))
                })?;
                match ccw_next(current, i) {
                    Some(next) if next != start => {
                        fan.push(next);
                        current = next;
                    }
                    _ => break,
                }
            }
            if fan.len() != inc.len() {
                return Err(Error::MalformedMesh(format!(
                    "vertex {z} is not a manifold vertex ({} of {} incident triangles reachable)",
                    fan.len(),
                    inc.len()
                )));
            }
            let smallest = fan
                .iter()
                .enumerate()
                .min_by_key(|&(_, &t)| t)
                .map(|(pos, _)| pos)
                .unwrap_or(0);
            fan.rotate_left(smallest);
            patches.push(fan);
        }
        Ok(patches)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge indices of a triangle; entry `i` is opposite local vertex `i`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// Incident triangles of `z`, counterclockwise, first = smallest index.
    ///
    /// For boundary vertices the list is contiguous except across the
    /// boundary gap.
    pub fn patch(&self, z: usize) -> &[usize] {
        &self.patches[z]
    }

    pub fn is_boundary_vertex(&self, z: usize) -> bool {
        self.boundary_vertex[z]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn bounding_box(&self) -> [Point; 2] {
        self.bbox
    }

    pub fn family(&self) -> Option<MeshFamily> {
        self.family
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Longest edge of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        self.triangle_edges[t]
            .iter()
            .map(|&e| self.edges[e].length)
            .fold(0.0, f64::max)
    }

    /// `h = max_τ h_τ`.
    pub fn h(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| self.diameter(t))
            .fold(0.0, f64::max)
    }

    /// Gradients of the three barycentric (P1 vertex) basis functions.
    pub fn basis_gradients(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.corners(t);
        let two_area = 2.0 * self.areas[t];
        let grad = |p: Point, q: Point| [(p[1] - q[1]) / two_area, (q[0] - p[0]) / two_area];
        [grad(b, c), grad(c, a), grad(a, b)]
    }

    /// Physical point of barycentric coordinates `l` in triangle `t`.
    pub fn map_point(&self, t: usize, l: &[f64; 3]) -> Point {
        let [a, b, c] = self.corners(t);
        [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ]
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.corners(t);
        let total = 2.0 * self.areas[t];
        let l0 = cross(sub(b, p), sub(c, p)) / total;
        let l1 = cross(sub(c, p), sub(a, p)) / total;
        [l0, l1, 1.0 - l0 - l1]
    }

    /// Local position (0..3) of vertex `v` in triangle `t`.
    pub fn local_index(&self, t: usize, v: usize) -> Option<usize> {
        self.triangles[t].iter().position(|&w| w == v)
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        (0..self.num_triangles())
            .flat_map(|t| triangle_angles(self.corners(t)))
            .fold(180.0, f64::min)
    }

    /// Vertices that do not touch any interior edge.
    pub fn nodes_without_interior_edge(&self) -> Vec<usize> {
        let mut touched = vec![false; self.num_vertices()];
        for e in self.edges.iter().filter(|e| !e.is_boundary()) {
            touched[e.vertices[0]] = true;
            touched[e.vertices[1]] = true;
        }
        (0..self.num_vertices()).filter(|&v| !touched[v]).collect()
    }

    /// Copy of the mesh with `τ` and `τ'` exchanged on the given interior
    /// edges (normals flip accordingly). Forms built on jumps and averages
    /// must not depend on this choice.
    pub fn with_swapped_sides(&self, edges: &[usize]) -> Result<TriMesh> {
        let mut out = self.clone();
        for &e in edges {
            let edge = out
                .edges
                .get_mut(e)
                .ok_or_else(|| invalid(format!("edge {e} out of range")))?;
            let tp = edge
                .tau_prime
                .ok_or_else(|| invalid(format!("edge {e} is a boundary edge")))?;
            edge.tau_prime = Some(edge.tau);
            edge.tau = tp;
            edge.normal = [-edge.normal[0], -edge.normal[1]];
        }
        Ok(out)
    }

    /// Whether `p` lies in triangle `t` up to a barycentric tolerance.
    pub(crate) fn contains(&self, t: usize, p: Point, tol: f64) -> bool {
        self.barycentric(t, p).iter().all(|&l| l >= -tol)
    }
}

/// Generates a triangulation of `[0.5, 1.5]^2` on an `n x n` grid of squares.
pub fn build_mesh(kind: MeshKind, n: usize, params: &MeshParams) -> Result<TriMesh> {
    if n == 0 {
        return Err(invalid("mesh resolution N must be at least 1"));
    }
    let h = DOMAIN_SIDE / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints so nested families share vertices bitwise
            let coord = |k: usize| {
                if k == n {
                    DOMAIN_ORIGIN + DOMAIN_SIDE
                } else {
                    DOMAIN_ORIGIN + DOMAIN_SIDE * k as f64 / n as f64
                }
            };
            vertices.push([coord(i), coord(j)]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            let anti = kind == MeshKind::Chevron && i % 2 == 1;
            if anti {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            } else {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
    }

    if kind == MeshKind::Perturbed {
        if !(params.delta >= 0.0) || !params.exponent.is_finite() {
            return Err(invalid("perturbation amplitude must be >= 0 and exponent finite"));
        }
        let amplitude = params.delta * h.powf(1.0 + params.exponent);
        for j in 1..n {
            for i in 1..n {
                let v = idx(i, j);
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(v as u64);
                let angle = rng.random::<f64>() * std::f64::consts::TAU;
                vertices[v][0] += amplitude * angle.cos();
                vertices[v][1] += amplitude * angle.sin();
            }
        }
    }

    let mut mesh = TriMesh::new(vertices, triangles)?;
    if kind == MeshKind::Perturbed {
        let min_angle = mesh.min_angle_deg();
        if min_angle < params.min_angle_floor_deg {
            return Err(invalid(format!(
                "perturbed mesh has minimum angle {min_angle:.2} deg, below the floor {:.2} deg",
                params.min_angle_floor_deg
            )));
        }
    }
    mesh.family = Some(MeshFamily { kind, n });
    Ok(mesh)
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * cross(sub(b, a), sub(c, a))
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn triangle_angles(p: [Point; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let u = sub(p[(i + 1) % 3], p[i]);
        let v = sub(p[(i + 2) % 3], p[i]);
        out[i] = cross(u, v).abs().atan2(dot(u, v)).to_degrees();
    }
    out
}
