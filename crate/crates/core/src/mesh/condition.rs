//! Geometric regularity of a triangulation: approximate-parallelogram and
//! approximate-isosceles defects, the edge coefficients `β_e`, `γ_e`, and the
//! element identity relating `∇(φ - φ_I)` to tangential edge derivatives.
//!
//! Labelling inside a counterclockwise triangle: the edge `e` runs `p -> q`,
//! `o` is the opposite vertex, `e + 1` is the edge following `e`
//! (`q -> o`) and `e - 1` the edge preceding it (`o -> p`).

use super::{cross, dot, norm, sub, Point, TriMesh};
use crate::error::{invalid, Result};
use crate::quadrature::{EdgeRule, TriangleRule};

/// Defects at or below this level are treated as exactly zero.
pub const EXACT_DEFECT: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleGeometry {
    pub corners: [Point; 3],
}

/// Lengths and coefficients of one edge as seen from one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeLocal {
    pub length: f64,
    pub next_length: f64,
    pub prev_length: f64,
    pub cot_opposite: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tangent: Point,
    pub outward_normal: Point,
}

impl TriangleGeometry {
    pub fn new(corners: [Point; 3]) -> Self {
        TriangleGeometry { corners }
    }

    pub fn signed_area(&self) -> f64 {
        let [a, b, c] = self.corners;
        0.5 * cross(sub(b, a), sub(c, a))
    }

    pub fn diameter(&self) -> f64 {
        let [a, b, c] = self.corners;
        norm(sub(b, a)).max(norm(sub(c, b))).max(norm(sub(a, c)))
    }

    /// Local edge `i` (opposite corner `i`).
    pub fn edge(&self, i: usize) -> EdgeLocal {
        let o = self.corners[i];
        let p = self.corners[(i + 1) % 3];
        let q = self.corners[(i + 2) % 3];
        let d = sub(q, p);
        let length = norm(d);
        let next_length = norm(sub(o, q));
        let prev_length = norm(sub(p, o));
        let (u, w) = (sub(p, o), sub(q, o));
        let cot_opposite = dot(u, w) / cross(u, w);
        let area = self.signed_area();
        let tangent = [d[0] / length, d[1] / length];
        EdgeLocal {
            length,
            next_length,
            prev_length,
            cot_opposite,
            beta: cot_opposite * (next_length * next_length - prev_length * prev_length) / 12.0,
            gamma: cot_opposite * area / 3.0,
            tangent,
            outward_normal: [tangent[1], -tangent[0]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorEdgeCondition {
    pub edge: usize,
    /// `|h_{e-1} - h'_{e-1}| + |h_{e+1} - h'_{e+1}|`
    pub defect: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdgeCondition {
    pub edge: usize,
    /// `|h_{e+1} - h_{e-1}|`
    pub defect: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshConditionReport {
    pub h: f64,
    pub interior: Vec<InteriorEdgeCondition>,
    pub boundary: Vec<BoundaryEdgeCondition>,
    pub max_parallelogram_defect: f64,
    pub mean_parallelogram_defect: f64,
    pub max_isosceles_defect: f64,
    pub mean_isosceles_defect: f64,
    pub max_beta_mismatch: f64,
    pub max_gamma_mismatch: f64,
}

impl MeshConditionReport {
    /// Defect driving the exponent fit. Boundary triangles of the structured
    /// splits are right isosceles only about the hypotenuse, so their
    /// isosceles defect is O(h) for every family; it is reported but kept
    /// out of the fit.
    pub fn max_defect(&self) -> f64 {
        self.max_parallelogram_defect
    }
}

pub fn measure_mesh_condition(mesh: &TriMesh) -> MeshConditionReport {
    let local = |t: usize, e: usize| {
        let i = mesh
            .triangle_edges(t)
            .iter()
            .position(|&x| x == e)
            .expect("edge belongs to its triangle");
        TriangleGeometry::new(mesh.corners(t)).edge(i)
    };
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for (index, edge) in mesh.edges().iter().enumerate() {
        let own = local(edge.tau, index);
        match edge.tau_prime {
            Some(tp) => {
                let other = local(tp, index);
                interior.push(InteriorEdgeCondition {
                    edge: index,
                    defect: (own.prev_length - other.prev_length).abs()
                        + (own.next_length - other.next_length).abs(),
                    beta: own.beta,
                    beta_prime: other.beta,
                    gamma: own.gamma,
                    gamma_prime: other.gamma,
                });
            }
            None => boundary.push(BoundaryEdgeCondition {
                edge: index,
                defect: (own.next_length - own.prev_length).abs(),
                beta: own.beta,
                gamma: own.gamma,
            }),
        }
    }
    let stats = |it: &mut dyn Iterator<Item = f64>| {
        let (mut max, mut sum, mut n) = (0.0f64, 0.0, 0usize);
        for d in it {
            max = max.max(d);
            sum += d;
            n += 1;
        }
        (max, if n > 0 { sum / n as f64 } else { 0.0 })
    };
    let (max_p, mean_p) = stats(&mut interior.iter().map(|c| c.defect));
    let (max_i, mean_i) = stats(&mut boundary.iter().map(|c| c.defect));
    let max_beta_mismatch = interior
        .iter()
        .map(|c| (c.beta - c.beta_prime).abs())
        .fold(0.0, f64::max);
    let max_gamma_mismatch = interior
        .iter()
        .map(|c| (c.gamma - c.gamma_prime).abs())
        .fold(0.0, f64::max);
    MeshConditionReport {
        h: mesh.h(),
        interior,
        boundary,
        max_parallelogram_defect: max_p,
        mean_parallelogram_defect: mean_p,
        max_isosceles_defect: max_i,
        mean_isosceles_defect: mean_i,
        max_beta_mismatch,
        max_gamma_mismatch,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaEstimate {
    /// Every defect in the family is zero to roundoff; `α` is unbounded.
    Exact,
    /// Least-squares fit of `log(max parallelogram defect) = (1 + α) log h + c`.
    Fitted { alpha: f64, slope: f64 },
}

/// Estimates the mesh-condition exponent from a refinement family.
pub fn estimate_alpha(family: &[MeshConditionReport]) -> Result<AlphaEstimate> {
    if family.len() < 3 {
        return Err(invalid("alpha estimation needs at least three meshes"));
    }
    if family.iter().all(|r| r.max_defect() <= EXACT_DEFECT) {
        return Ok(AlphaEstimate::Exact);
    }
    if family.iter().any(|r| r.max_defect() <= EXACT_DEFECT) {
        return Err(invalid(
            "family mixes exact and non-exact meshes; the defect exponent is undefined",
        ));
    }
    let xs: Vec<f64> = family.iter().map(|r| r.h.ln()).collect();
    let ys: Vec<f64> = family.iter().map(|r| r.max_defect().ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok(AlphaEstimate::Fitted {
        alpha: slope - 1.0,
        slope,
    })
}

/// `c[0] + c[1] x + c[2] y + c[3] x² + c[4] xy + c[5] y²`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPoly(pub [f64; 6]);

/// `c[0] + c[1] x + c[2] y`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPoly(pub [f64; 3]);

impl QuadraticPoly {
    pub fn value(&self, p: Point) -> f64 {
        let c = &self.0;
        let [x, y] = p;
        c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
    }

    pub fn gradient(&self, p: Point) -> Point {
        let c = &self.0;
        let [x, y] = p;
        [c[1] + 2.0 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2.0 * c[5] * y]
    }

    /// Hessian `[[φ_xx, φ_xy], [φ_xy, φ_yy]]`.
    pub fn hessian(&self) -> [[f64; 2]; 2] {
        let c = &self.0;
        [[2.0 * c[3], c[4]], [c[4], 2.0 * c[5]]]
    }

    pub fn scale(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl LinearPoly {
    pub fn value(&self, p: Point) -> f64 {
        self.0[0] + self.0[1] * p[0] + self.0[2] * p[1]
    }

    pub fn gradient(&self) -> Point {
        [self.0[1], self.0[2]]
    }

    pub fn scale(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Residual of the element identity
///
/// `∫_τ ∇(φ_I - φ)·∇v = Σ_e β_e ∫_e ∂²φ/∂t_e² ∂v/∂t_e + γ_e ∫_e ∂²φ/∂t_e∂n_e ∂v/∂t_e`
///
/// for quadratic `φ` and linear `v`, with counterclockwise tangents and
/// outward normals. Both sides use quadrature exact for their integrands.
pub fn verify_fundamental_identity(
    triangle: &TriangleGeometry,
    phi: &QuadraticPoly,
    v: &LinearPoly,
) -> Result<f64> {
    let area = triangle.signed_area();
    let diam = triangle.diameter();
    if !(area > 1e-12 * diam * diam) {
        return Err(invalid(format!(
            "degenerate or clockwise triangle (signed area {area:e})"
        )));
    }
    let [a, b, c] = triangle.corners;
    // gradient of the linear interpolant from the three vertex values
    let grads = {
        let g = |p: Point, q: Point| [(p[1] - q[1]) / (2.0 * area), (q[0] - p[0]) / (2.0 * area)];
        [g(b, c), g(c, a), g(a, b)]
    };
    let values = [phi.value(a), phi.value(b), phi.value(c)];
    let grad_interp = [
        (0..3).map(|i| values[i] * grads[i][0]).sum::<f64>(),
        (0..3).map(|i| values[i] * grads[i][1]).sum::<f64>(),
    ];
    let grad_v = v.gradient();

    let rule = TriangleRule::of_degree(2);
    let lhs: f64 = area
        * rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(l, w)| {
                let x = [
                    l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
                    l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
                ];
                let g = phi.gradient(x);
                w * dot(sub(grad_interp, g), grad_v)
            })
            .sum::<f64>();

    let hess = phi.hessian();
    let second = |s: Point, t: Point| {
        s[0] * (hess[0][0] * t[0] + hess[0][1] * t[1]) + s[1] * (hess[1][0] * t[0] + hess[1][1] * t[1])
    };
    let edge_rule = EdgeRule::gauss(1)?;
    let mut rhs = 0.0;
    for i in 0..3 {
        let e = triangle.edge(i);
        let dv_dt = dot(grad_v, e.tangent);
        let tt = second(e.tangent, e.tangent);
        let tn = second(e.tangent, e.outward_normal);
        let integral: f64 = edge_rule
            .weights
            .iter()
            .map(|w| w * (e.beta * tt * dv_dt + e.gamma * tn * dv_dt))
            .sum();
        rhs += e.length * integral;
    }
    Ok((lhs - rhs).abs())
}
