//! Piecewise-linear discontinuous Galerkin discretization of the impedance
//! Helmholtz problem.
//!
//! With the vertex-value basis on every triangle, dof `3t + i` is the value
//! of `u_h|_t` at local vertex `i`. The system matrix is
//! `A = S - k² M + ik B` with
//!
//! * `S = Σ_K (∇u, ∇v)_K - Σ_e ⟨{∂u/∂n}, [v]⟩ + ⟨[u], {∂v/∂n}⟩ + Σ_e ρ₀/h_e^{1+μ} ⟨[u], [v]⟩`,
//! * `M` the L² mass matrix, `B` the L² mass on Γ,
//!
//! jump `[v] = v|_τ' - v|_τ`, average `{v} = (v|_τ' + v|_τ)/2`, normal from
//! `τ'` into `τ`. Conjugation falls on the test function; since the basis is
//! real, `S`, `M` and `B` are real symmetric and `A` is complex symmetric.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::exact::ExactSolution;
use crate::linsolve::{solve_sparse_complex, CsrMatrix, SolveReport};
use crate::mesh::{Edge, Point, TriMesh};
use crate::quadrature::{EdgeRule, OscillationAdaptiveRule};
use crate::C64;

pub const DEFAULT_EDGE_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgParams {
    pub k: f64,
    pub mu: f64,
    pub rho0: f64,
}

impl DgParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(invalid(format!("wave number must be positive, got {}", self.k)));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(invalid(format!("penalty exponent mu must be >= 0, got {}", self.mu)));
        }
        if !(self.rho0 > 0.0) || !self.rho0.is_finite() {
            return Err(invalid(format!("penalty weight rho0 must be > 0, got {}", self.rho0)));
        }
        Ok(())
    }

    /// `ρ₀ / h_e^{1+μ}`
    pub fn penalty(&self, h_e: f64) -> f64 {
        self.rho0 / h_e.powf(1.0 + self.mu)
    }
}

/// Discontinuous P1 field: three vertex values per triangle.
#[derive(Debug, Clone)]
pub struct DGFunction<'m> {
    mesh: &'m TriMesh,
    coeffs: Vec<C64>,
}

impl<'m> DGFunction<'m> {
    pub fn new(mesh: &'m TriMesh, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 3 * mesh.num_triangles() {
            return Err(invalid(format!(
                "DG coefficient vector of length {} for {} triangles",
                coeffs.len(),
                mesh.num_triangles()
            )));
        }
        Ok(DGFunction { mesh, coeffs })
    }

    pub fn zeros(mesh: &'m TriMesh) -> Self {
        DGFunction {
            mesh,
            coeffs: vec![C64::default(); 3 * mesh.num_triangles()],
        }
    }

    pub fn mesh(&self) -> &'m TriMesh {
        self.mesh
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// `u_h(z, τ)` for the three vertices of `t`.
    pub fn local(&self, t: usize) -> [C64; 3] {
        [self.coeffs[3 * t], self.coeffs[3 * t + 1], self.coeffs[3 * t + 2]]
    }

    /// `u_h|_τ(z)`, or `None` when `z` is not a vertex of `t`.
    pub fn node_value(&self, z: usize, t: usize) -> Option<C64> {
        self.mesh.local_index(t, z).map(|i| self.coeffs[3 * t + i])
    }

    pub fn value(&self, t: usize, bary: &[f64; 3]) -> C64 {
        let c = self.local(t);
        c[0] * bary[0] + c[1] * bary[1] + c[2] * bary[2]
    }

    pub fn gradient(&self, t: usize) -> [C64; 2] {
        local_gradient(self.mesh, t, &self.local(t))
    }

    /// `[u_h]` at parameter `s ∈ [0, 1]` along interior edge `e`
    /// (from `vertices[0]` to `vertices[1]`); zero on boundary edges.
    pub fn jump(&self, e: usize, s: f64) -> C64 {
        let edge = &self.mesh.edges()[e];
        let Some(tp) = edge.tau_prime else {
            return C64::default();
        };
        self.trace(tp, edge, s) - self.trace(edge.tau, edge, s)
    }

    fn trace(&self, t: usize, edge: &Edge, s: f64) -> C64 {
        let [a, b] = edge.vertices;
        let ia = self.mesh.local_index(t, a).expect("edge vertex in triangle");
        let ib = self.mesh.local_index(t, b).expect("edge vertex in triangle");
        self.coeffs[3 * t + ia] * (1.0 - s) + self.coeffs[3 * t + ib] * s
    }

    pub fn sub(&self, other: &DGFunction<'_>) -> Result<DGFunction<'m>> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(invalid("DG functions live on different meshes"));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(DGFunction { mesh: self.mesh, coeffs })
    }
}

/// Continuous P1 field: one value per vertex.
#[derive(Debug, Clone)]
pub struct CGFunction<'m> {
    mesh: &'m TriMesh,
    coeffs: Vec<C64>,
}

impl<'m> CGFunction<'m> {
    pub fn new(mesh: &'m TriMesh, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != mesh.num_vertices() {
            return Err(invalid(format!(
                "CG coefficient vector of length {} for {} vertices",
                coeffs.len(),
                mesh.num_vertices()
            )));
        }
        Ok(CGFunction { mesh, coeffs })
    }

    pub fn mesh(&self) -> &'m TriMesh {
        self.mesh
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn local(&self, t: usize) -> [C64; 3] {
        self.mesh.triangles()[t].map(|v| self.coeffs[v])
    }

    pub fn value(&self, t: usize, bary: &[f64; 3]) -> C64 {
        let c = self.local(t);
        c[0] * bary[0] + c[1] * bary[1] + c[2] * bary[2]
    }

    pub fn gradient(&self, t: usize) -> [C64; 2] {
        local_gradient(self.mesh, t, &self.local(t))
    }

    /// The same field in the discontinuous space (all jumps vanish).
    pub fn to_dg(&self) -> DGFunction<'m> {
        let coeffs = (0..self.mesh.num_triangles()).flat_map(|t| self.local(t)).collect();
        DGFunction { mesh: self.mesh, coeffs }
    }
}

fn local_gradient(mesh: &TriMesh, t: usize, c: &[C64; 3]) -> [C64; 2] {
    let g = mesh.basis_gradients(t);
    [
        c[0] * g[0][0] + c[1] * g[1][0] + c[2] * g[2][0],
        c[0] * g[0][1] + c[1] * g[1][1] + c[2] * g[2][1],
    ]
}

/// Assembled matrices of the scheme; `a = s - k² m + ik boundary`.
#[derive(Debug, Clone)]
pub struct ComplexSparseSystem {
    pub params: DgParams,
    /// Volume gradient and interior-edge consistency terms.
    pub consistency: CsrMatrix<f64>,
    /// Jump penalty `Σ_e ρ₀/h_e^{1+μ} ⟨[u], [v]⟩`.
    pub penalty: CsrMatrix<f64>,
    /// `consistency + penalty`
    pub s: CsrMatrix<f64>,
    pub m: CsrMatrix<f64>,
    pub boundary: CsrMatrix<f64>,
    pub a: CsrMatrix<C64>,
}

/// Dofs of the two sides of an interior edge and the traces of their basis
/// functions: slot 0..3 belong to `τ`, 3..6 to `τ'`.
struct EdgeCoupling {
    dofs: [usize; 6],
    // basis value at edge vertex 0 and 1 for each slot
    end_values: [[f64; 2]; 6],
    // signed contribution to the jump: -1 on τ, +1 on τ'
    sign: [f64; 6],
    // ∇φ·n_e
    normal_derivative: [f64; 6],
}

fn edge_coupling(mesh: &TriMesh, edge: &Edge, tp: usize) -> EdgeCoupling {
    let mut dofs = [0; 6];
    let mut end_values = [[0.0; 2]; 6];
    let mut sign = [0.0; 6];
    let mut normal_derivative = [0.0; 6];
    for (side, (t, sgn)) in [(edge.tau, -1.0), (tp, 1.0)].into_iter().enumerate() {
        let grads = mesh.basis_gradients(t);
        for i in 0..3 {
            let slot = 3 * side + i;
            let v = mesh.triangles()[t][i];
            dofs[slot] = 3 * t + i;
            end_values[slot] = [
                f64::from(u8::from(v == edge.vertices[0])),
                f64::from(u8::from(v == edge.vertices[1])),
            ];
            sign[slot] = sgn;
            normal_derivative[slot] = grads[i][0] * edge.normal[0] + grads[i][1] * edge.normal[1];
        }
    }
    EdgeCoupling {
        dofs,
        end_values,
        sign,
        normal_derivative,
    }
}

pub fn assemble_system(mesh: &TriMesh, params: DgParams) -> Result<ComplexSparseSystem> {
    assemble_system_with(mesh, params, DEFAULT_EDGE_POINTS)
}

pub fn assemble_system_with(mesh: &TriMesh, params: DgParams, edge_points: usize) -> Result<ComplexSparseSystem> {
    params.validate()?;
    let rule = EdgeRule::gauss(edge_points)?;
    if rule.degree() < 2 {
        return Err(invalid("edge rule must integrate quadratics exactly"));
    }
    let n = 3 * mesh.num_triangles();
    let mut cons = Vec::with_capacity(9 * mesh.num_triangles() + 36 * mesh.num_edges());
    let mut pen = Vec::with_capacity(36 * mesh.num_edges());
    let mut mass = Vec::with_capacity(9 * mesh.num_triangles());
    let mut bnd = Vec::new();

    for t in 0..mesh.num_triangles() {
        let g = mesh.basis_gradients(t);
        let area = mesh.area(t);
        for i in 0..3 {
            for j in 0..3 {
                let stiff = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                cons.push((3 * t + i, 3 * t + j, stiff));
                let m = if i == j { area / 6.0 } else { area / 12.0 };
                mass.push((3 * t + i, 3 * t + j, m));
            }
        }
    }

    for edge in mesh.edges() {
        let h = edge.length;
        match edge.tau_prime {
            Some(tp) => {
                let c = edge_coupling(mesh, edge, tp);
                // ∫_e [φ_a] and ∫_e [φ_a][φ_b]
                let mut jump_int = [0.0; 6];
                let mut jump_jump = [[0.0; 6]; 6];
                for (&s, &w) in rule.points.iter().zip(&rule.weights) {
                    let jv: [f64; 6] = std::array::from_fn(|a| {
                        c.sign[a] * (c.end_values[a][0] * (1.0 - s) + c.end_values[a][1] * s)
                    });
                    for a in 0..6 {
                        jump_int[a] += h * w * jv[a];
                        for b in 0..6 {
                            jump_jump[a][b] += h * w * (jv[a] * jv[b]);
                        }
                    }
                }
                let weight = params.penalty(h);
                for a in 0..6 {
                    for b in 0..6 {
                        // row a = test, column b = trial
                        let avg_a = 0.5 * c.normal_derivative[a];
                        let avg_b = 0.5 * c.normal_derivative[b];
                        let value = -(avg_b * jump_int[a]) - (jump_int[b] * avg_a);
                        cons.push((c.dofs[a], c.dofs[b], value));
                        pen.push((c.dofs[a], c.dofs[b], weight * jump_jump[a][b]));
                    }
                }
            }
            None => {
                let t = edge.tau;
                let local = edge
                    .vertices
                    .map(|v| mesh.local_index(t, v).expect("edge vertex in triangle"));
                for (&s, &w) in rule.points.iter().zip(&rule.weights) {
                    let phi = [1.0 - s, s];
                    for a in 0..2 {
                        for b in 0..2 {
                            bnd.push((3 * t + local[a], 3 * t + local[b], h * w * (phi[a] * phi[b])));
                        }
                    }
                }
            }
        }
    }

    let consistency = CsrMatrix::from_triplets(n, n, &cons)?;
    let penalty = CsrMatrix::from_triplets(n, n, &pen)?;
    let m = CsrMatrix::from_triplets(n, n, &mass)?;
    let boundary = CsrMatrix::from_triplets(n, n, &bnd)?;
    let one = C64::new(1.0, 0.0);
    let s = CsrMatrix::linear_combination(&[(one, &consistency), (one, &penalty)])?.map(|v| v.re);
    let k = params.k;
    let a = CsrMatrix::linear_combination(&[
        (one, &s),
        (C64::new(-k * k, 0.0), &m),
        (C64::new(0.0, k), &boundary),
    ])?;
    Ok(ComplexSparseSystem {
        params,
        consistency,
        penalty,
        s,
        m,
        boundary,
        a,
    })
}

/// Edge Gauss rule repeated on `2^level` equal pieces.
fn composite_edge_rule(rule: &EdgeRule, level: u32) -> Vec<(f64, f64)> {
    let pieces = 1usize << level;
    let width = 1.0 / pieces as f64;
    (0..pieces)
        .flat_map(|p| {
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(move |(&s, &w)| ((p as f64 + s) * width, w * width))
        })
        .collect()
}

/// `b_i = ∫_Ω f φ_i + ∫_Γ g φ_i`.
///
/// Volume integrals use the oscillation-adaptive triangle rule and boundary
/// integrals the edge rule refined by the same criterion, so oscillatory data
/// on coarse meshes is integrated accurately.
pub fn assemble_rhs(
    mesh: &TriMesh,
    k: f64,
    f: &dyn Fn(Point) -> Result<C64>,
    g: &dyn Fn(Point, Point) -> Result<C64>,
) -> Result<Vec<C64>> {
    let adaptive = OscillationAdaptiveRule::default();
    let edge_rule = EdgeRule::gauss(DEFAULT_EDGE_POINTS)?;
    let mut b = vec![C64::default(); 3 * mesh.num_triangles()];
    for t in 0..mesh.num_triangles() {
        let rule = adaptive.rule_for(k, mesh.diameter(t));
        let area = mesh.area(t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let fx = f(mesh.map_point(t, l))? * (area * w);
            for i in 0..3 {
                b[3 * t + i] += fx * l[i];
            }
        }
    }
    for edge in mesh.edges().iter().filter(|e| e.is_boundary()) {
        let t = edge.tau;
        let [p, q] = edge.vertices.map(|v| mesh.vertices()[v]);
        let local = edge
            .vertices
            .map(|v| mesh.local_index(t, v).expect("edge vertex in triangle"));
        let level = adaptive.level_for(k, edge.length);
        for (s, w) in composite_edge_rule(&edge_rule, level) {
            let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
            let gx = g(x, edge.normal)? * (edge.length * w);
            b[3 * t + local[0]] += gx * (1.0 - s);
            b[3 * t + local[1]] += gx * s;
        }
    }
    Ok(b)
}

/// Right-hand side generated by an exact solution.
pub fn assemble_rhs_exact(mesh: &TriMesh, solution: &dyn ExactSolution) -> Result<Vec<C64>> {
    assemble_rhs(
        mesh,
        solution.k(),
        &|p| Ok(solution.fields(p)?.f),
        &|p, n| Ok(solution.fields(p)?.g(n)),
    )
}

pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

/// Solves the scheme for `A u = b`; failures carry `k`, `N` and `μ`.
pub fn solve_system<'m>(
    mesh: &'m TriMesh,
    system: &ComplexSparseSystem,
    rhs: &[C64],
    tol: f64,
) -> Result<(DGFunction<'m>, SolveReport)> {
    let p = system.params;
    match solve_sparse_complex(&system.a, rhs, tol) {
        Ok((x, report)) => Ok((DGFunction::new(mesh, x)?, report)),
        Err(Error::SingularSystem { reason, history }) => Err(Error::HelmholtzSolve {
            k: p.k,
            n: mesh.family().map(|f| f.n),
            mu: p.mu,
            residual: history.last().copied().unwrap_or(f64::NAN),
            reason,
        }),
        Err(e) => Err(e),
    }
}

pub fn solve_helmholtz<'m>(
    mesh: &'m TriMesh,
    params: DgParams,
    solution: &dyn ExactSolution,
    tol: f64,
) -> Result<(DGFunction<'m>, SolveReport)> {
    if (solution.k() - params.k).abs() > 0.0 {
        return Err(invalid(format!(
            "data generated for k = {} but scheme assembled for k = {}",
            solution.k(),
            params.k
        )));
    }
    let system = assemble_system(mesh, params)?;
    let rhs = assemble_rhs_exact(mesh, solution)?;
    solve_system(mesh, &system, &rhs, tol)
}

/// Linear interpolant: vertex values of `field`.
pub fn interpolate_p1<'m>(mesh: &'m TriMesh, field: &dyn Fn(Point) -> Result<C64>) -> Result<CGFunction<'m>> {
    let coeffs = mesh.vertices().iter().map(|&p| field(p)).collect::<Result<Vec<_>>>()?;
    CGFunction::new(mesh, coeffs)
}

/// Coordinate listing `i j re im`, 0-based, sorted by `(i, j)`.
pub fn write_system<W: Write>(a: &CsrMatrix<C64>, mut out: W) -> Result<()> {
    for (i, j, v) in a.iter() {
        writeln!(out, "{i} {j} {:.17e} {:.17e}", v.re, v.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::GlobalLinear;
    use crate::mesh::{build_mesh, MeshKind, MeshParams};

    fn params() -> DgParams {
        DgParams { k: 3.0, mu: 0.0, rho0: 5.0 }
    }

    fn quad_form(m: &CsrMatrix<f64>, v: &[f64]) -> f64 {
        m.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn unit_jump_on_single_square() {
        let mesh = build_mesh(MeshKind::Regular, 1, &MeshParams::default()).unwrap();
        let edge = mesh.edges().iter().find(|e| !e.is_boundary()).unwrap();
        let tp = edge.tau_prime.unwrap();
        let mut v = vec![0.0; 6];
        for i in 0..3 {
            v[3 * tp + i] = 1.0;
        }
        let sys = assemble_system(&mesh, DgParams { k: 1.0, mu: 0.0, rho0: 5.0 }).unwrap();
        assert!((quad_form(&sys.s, &v) - 5.0).abs() < 1e-13);
        let sys = assemble_system(&mesh, DgParams { k: 1.0, mu: 1.0, rho0: 5.0 }).unwrap();
        assert!((quad_form(&sys.s, &v) - 5.0 / 2f64.sqrt()).abs() < 1e-13);
        assert!(quad_form(&sys.s, &[1.0; 6]).abs() < 1e-13);
    }

    #[test]
    fn split_is_consistent_and_symmetric() {
        for kind in [MeshKind::Regular, MeshKind::Perturbed] {
            let mesh = build_mesh(kind, 5, &MeshParams::default()).unwrap();
            let sys = assemble_system(&mesh, params()).unwrap();
            let scale = sys.a.max_abs();
            assert!(sys.a.max_asymmetry() <= 1e-14 * scale);
            assert_eq!(sys.s.max_asymmetry(), 0.0);
            assert_eq!(sys.m.max_asymmetry(), 0.0);
            assert_eq!(sys.boundary.max_asymmetry(), 0.0);
            let k = sys.params.k;
            for (i, j, v) in sys.a.iter() {
                let want = C64::new(sys.s.get(i, j) - k * k * sys.m.get(i, j), k * sys.boundary.get(i, j));
                assert!((v - want).norm() <= 1e-15 * scale);
            }
        }
    }

    #[test]
    fn mass_and_boundary_totals() {
        let mesh = build_mesh(MeshKind::Chevron, 4, &MeshParams::default()).unwrap();
        let sys = assemble_system(&mesh, params()).unwrap();
        let ones = vec![1.0; 3 * mesh.num_triangles()];
        assert!((quad_form(&sys.m, &ones) - 1.0).abs() < 1e-14);
        assert!((quad_form(&sys.boundary, &ones) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mesh = build_mesh(MeshKind::Regular, 2, &MeshParams::default()).unwrap();
        for p in [
            DgParams { k: 1.0, mu: -0.1, rho0: 5.0 },
            DgParams { k: 1.0, mu: 0.0, rho0: 0.0 },
            DgParams { k: 0.0, mu: 0.0, rho0: 5.0 },
        ] {
            assert!(assemble_system(&mesh, p).is_err());
        }
    }

    #[test]
    fn rhs_of_unit_source_on_one_triangle() {
        let mesh = build_mesh(MeshKind::Regular, 3, &MeshParams::default()).unwrap();
        let target = 7;
        let b = assemble_rhs(
            &mesh,
            1.0,
            &|p| {
                let inside = (0..mesh.num_triangles())
                    .find(|&t| mesh.barycentric(t, p).iter().all(|&l| l > 1e-12))
                    .unwrap();
                Ok(C64::from(if inside == target { 1.0 } else { 0.0 }))
            },
            &|_, _| Ok(C64::default()),
        )
        .unwrap();
        for (d, v) in b.iter().enumerate() {
            let want = if d / 3 == target { mesh.area(target) / 3.0 } else { 0.0 };
            assert!((v - C64::from(want)).norm() < 1e-15, "dof {d}");
        }
    }

    #[test]
    fn boundary_data_only_touches_boundary_elements() {
        let mesh = build_mesh(MeshKind::Regular, 4, &MeshParams::default()).unwrap();
        let b = assemble_rhs(&mesh, 2.0, &|_| Ok(C64::default()), &|p, _| Ok(C64::new(p[0], 1.0))).unwrap();
        let touches: Vec<bool> = (0..mesh.num_triangles())
            .map(|t| mesh.triangle_edges(t).iter().any(|&e| mesh.edges()[e].is_boundary()))
            .collect();
        for (d, v) in b.iter().enumerate() {
            if !touches[d / 3] {
                assert_eq!(*v, C64::default());
            }
        }
        assert!(b.iter().any(|v| v.norm() > 0.0));
    }

    #[test]
    fn linear_solutions_are_reproduced() {
        let lin = GlobalLinear {
            k: 1.0,
            coefficients: [C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(-1.0, 0.0)],
        };
        for kind in [MeshKind::Regular, MeshKind::Chevron, MeshKind::Perturbed] {
            let mesh = build_mesh(kind, 6, &MeshParams::default()).unwrap();
            let p = DgParams { k: 1.0, mu: 0.0, rho0: 5.0 };
            let (uh, report) = solve_helmholtz(&mesh, p, &lin, 1e-12).unwrap();
            assert!(report.relative_residual <= 1e-12);
            let ui = interpolate_p1(&mesh, &|x| lin.value(x)).unwrap().to_dg();
            let err = uh.coeffs().iter().zip(ui.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{kind}: {err:e}");
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let mesh = build_mesh(MeshKind::Regular, 3, &MeshParams::default()).unwrap();
        let sys = assemble_system(&mesh, params()).unwrap();
        let b = vec![C64::default(); 3 * mesh.num_triangles()];
        let (u, _) = solve_system(&mesh, &sys, &b, 1e-10).unwrap();
        assert!(u.coeffs().iter().all(|v| *v == C64::default()));
    }

    #[test]
    fn interpolant_is_continuous() {
        let mesh = build_mesh(MeshKind::Perturbed, 5, &MeshParams::default()).unwrap();
        let ui = interpolate_p1(&mesh, &|p| Ok(C64::new(p[0].sin(), p[1] * p[0]))).unwrap().to_dg();
        for e in 0..mesh.num_edges() {
            for s in [0.0, 0.3, 1.0] {
                assert_eq!(ui.jump(e, s), C64::default());
            }
        }
        let sys = assemble_system(&mesh, params()).unwrap();
        let re: Vec<f64> = ui.coeffs().iter().map(|v| v.re).collect();
        assert!(quad_form(&sys.penalty, &re).abs() < 1e-12);
    }

    #[test]
    fn dump_is_sorted_coordinate_text() {
        let mesh = build_mesh(MeshKind::Regular, 1, &MeshParams::default()).unwrap();
        let sys = assemble_system(&mesh, params()).unwrap();
        let mut out = Vec::new();
        write_system(&sys.a, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let keys: Vec<(usize, usize)> = text
            .lines()
            .map(|l| {
                let mut it = l.split_whitespace();
                (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
            })
            .collect();
        assert_eq!(keys.len(), sys.a.nnz());
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }
}
