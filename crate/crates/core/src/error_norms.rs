//! Error norms against an exact solution, and the elliptic projection.
//!
//! Every volume integral runs through the oscillation-adaptive triangle rule:
//! elements are subdivided until `k · diam / 2^level <= 1` before the
//! degree-6 rule is applied.

use crate::dg::{assemble_system, CGFunction, ComplexSparseSystem, DGFunction, DgParams, DEFAULT_EDGE_POINTS};
use crate::error::{invalid, Result};
use crate::exact::ExactSolution;
use crate::linsolve::{solve_sparse_complex, CsrMatrix, SolveReport};
use crate::mesh::{Point, TriMesh};
use crate::quadrature::{EdgeRule, OscillationAdaptiveRule};
use crate::recovery::RecoveredGradient;
use crate::C64;

/// Which form of `‖·‖_{1,h}` to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OneHNorm {
    /// `Σ_K ‖∇v‖²_{L²(K)} + J₀(v, v)`
    #[default]
    BrokenGradient,
    /// `Σ_K ‖v‖²_{L²(K)} + J₀(v, v)`, as the definition is typeset.
    Literal,
}

#[derive(Debug, Clone)]
pub struct NormOptions {
    pub quadrature: OscillationAdaptiveRule,
    pub one_h: OneHNorm,
    pub edge_points: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            quadrature: OscillationAdaptiveRule::default(),
            one_h: OneHNorm::default(),
            edge_points: DEFAULT_EDGE_POINTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorRecord {
    /// `|u - u_h|_{H¹(T_h)}`
    pub e1: f64,
    /// `‖∇u - G_h u_h‖₀`
    pub e2: f64,
    /// `‖∇u - RG u_h‖₀`, absent without a coarse partner.
    pub e3: Option<f64>,
    pub eta: Option<f64>,
    /// `‖u_h - u_I‖_{1,h}`
    pub err_uhui_1h: f64,
    /// `|||u_h - u_I|||_{1,h}`
    pub triple_uhui: f64,
    /// `‖u_h - u_I‖₀`
    pub l2_uhui: f64,
    /// `k ‖u - u_h‖₀`
    pub knorm_l2: f64,
    /// `J₀(u_h - u_I, u_h - u_I)`
    pub j0_jump: f64,
}

fn sq(v: [C64; 2]) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

fn diff(a: [C64; 2], b: [C64; 2]) -> [C64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// `J₀(v, v) = Σ_e ρ₀/h_e^{1+μ} ∫_e |[v]|²` over interior edges.
pub fn penalty_energy(v: &DGFunction<'_>, params: DgParams, edge_points: usize) -> Result<f64> {
    let rule = EdgeRule::gauss(edge_points)?;
    let mesh = v.mesh();
    let mut total = 0.0;
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.is_boundary() {
            continue;
        }
        let integral: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(&s, &w)| w * v.jump(e, s).norm_sqr())
            .sum();
        total += params.penalty(edge.length) * edge.length * integral;
    }
    Ok(total)
}

/// All error quantities of one solve.
///
/// `u_i` is the linear interpolant of the exact solution, `g` the recovered
/// gradient, `rg` its Richardson extrapolation and `eta` a precomputed
/// estimator value.
#[allow(clippy::too_many_arguments)]
pub fn compute_errors(
    u_h: &DGFunction<'_>,
    u_i: &CGFunction<'_>,
    g: &RecoveredGradient<'_>,
    rg: Option<&RecoveredGradient<'_>>,
    eta: Option<f64>,
    exact: &dyn ExactSolution,
    params: DgParams,
    options: &NormOptions,
) -> Result<ErrorRecord> {
    let mesh = u_h.mesh();
    let same = |m: &TriMesh| m.num_vertices() == mesh.num_vertices() && m.num_triangles() == mesh.num_triangles();
    if !same(u_i.mesh()) || !same(g.mesh()) || rg.is_some_and(|r| !same(r.mesh())) {
        return Err(invalid("error inputs live on different meshes"));
    }
    let k = exact.k();
    let (mut e1, mut e2, mut e3, mut l2, mut grad_w, mut l2_w) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        let rule = options.quadrature.rule_for(k, mesh.diameter(t));
        let grad_h = u_h.gradient(t);
        let grad_wt = diff(grad_h, u_i.gradient(t));
        let (mut a1, mut a2, mut a3, mut al2, mut aw) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let x = mesh.map_point(t, l);
            let f = exact.fields(x)?;
            a1 += w * sq(diff(f.grad, grad_h));
            a2 += w * sq(diff(f.grad, g.value(t, l)));
            if let Some(rg) = rg {
                a3 += w * sq(diff(f.grad, rg.value(t, l)));
            }
            let uh = u_h.value(t, l);
            al2 += w * (f.u - uh).norm_sqr();
            aw += w * (uh - u_i.value(t, l)).norm_sqr();
        }
        e1 += area * a1;
        e2 += area * a2;
        e3 += area * a3;
        l2 += area * al2;
        l2_w += area * aw;
        grad_w += area * sq(grad_wt);
    }
    let w = u_h.sub(&u_i.to_dg())?;
    let j0 = penalty_energy(&w, params, options.edge_points)?;
    let one_h_sq = match options.one_h {
        OneHNorm::BrokenGradient => grad_w + j0,
        OneHNorm::Literal => l2_w + j0,
    };
    Ok(ErrorRecord {
        e1: e1.sqrt(),
        e2: e2.sqrt(),
        e3: rg.map(|_| e3.sqrt()),
        eta,
        err_uhui_1h: one_h_sq.sqrt(),
        triple_uhui: (one_h_sq + k * k * l2_w).sqrt(),
        l2_uhui: l2_w.sqrt(),
        knorm_l2: k * l2.sqrt(),
        j0_jump: j0,
    })
}

/// `‖∇u - G‖₀` for a continuous vector field `G`.
pub fn gradient_error(g: &RecoveredGradient<'_>, exact: &dyn ExactSolution, options: &NormOptions) -> Result<f64> {
    let mesh = g.mesh();
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let rule = options.quadrature.rule_for(exact.k(), mesh.diameter(t));
        let mut local = 0.0;
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let f = exact.fields(mesh.map_point(t, l))?;
            local += w * sq(diff(f.grad, g.value(t, l)));
        }
        total += mesh.area(t) * local;
    }
    Ok(total.sqrt())
}

/// `|u|_{H¹(Ω)}` of the exact solution, the scale of relative errors.
pub fn exact_seminorm(mesh: &TriMesh, exact: &dyn ExactSolution, options: &NormOptions) -> Result<f64> {
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let rule = options.quadrature.rule_for(exact.k(), mesh.diameter(t));
        let mut local = 0.0;
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            local += w * sq(exact.fields(mesh.map_point(t, l))?.grad);
        }
        total += mesh.area(t) * local;
    }
    Ok(total.sqrt())
}

/// `‖u - v‖₀` for a DG field `v`.
pub fn l2_error(v: &DGFunction<'_>, exact: &dyn ExactSolution, options: &NormOptions) -> Result<f64> {
    let mesh = v.mesh();
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let rule = options.quadrature.rule_for(exact.k(), mesh.diameter(t));
        let mut local = 0.0;
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let f = exact.fields(mesh.map_point(t, l))?;
            local += w * (f.u - v.value(t, l)).norm_sqr();
        }
        total += mesh.area(t) * local;
    }
    Ok(total.sqrt())
}

/// Matrix `S + ik B` of the projection.
pub fn projection_matrix(system: &ComplexSparseSystem) -> Result<CsrMatrix<C64>> {
    CsrMatrix::linear_combination(&[
        (C64::new(1.0, 0.0), &system.s),
        (C64::new(0.0, system.params.k), &system.boundary),
    ])
}

/// Right-hand side `a_h(u, φ_i) + ik⟨u, φ_i⟩_Γ` for smooth `u`:
/// `Σ_K (∇u, ∇φ_i)_K - Σ_e ⟨∂u/∂n_e, [φ_i]⟩_e + ik ⟨u, φ_i⟩_Γ`.
pub fn projection_rhs(mesh: &TriMesh, exact: &dyn ExactSolution, options: &NormOptions) -> Result<Vec<C64>> {
    let k = exact.k();
    let mut b = vec![C64::default(); 3 * mesh.num_triangles()];
    for t in 0..mesh.num_triangles() {
        let grads = mesh.basis_gradients(t);
        let area = mesh.area(t);
        let rule = options.quadrature.rule_for(k, mesh.diameter(t));
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let f = exact.fields(mesh.map_point(t, l))?;
            for i in 0..3 {
                b[3 * t + i] += (f.grad[0] * grads[i][0] + f.grad[1] * grads[i][1]) * (area * w);
            }
        }
    }
    let base = EdgeRule::gauss(options.edge_points)?;
    for edge in mesh.edges() {
        let [p, q] = edge.vertices.map(|v| mesh.vertices()[v]);
        let pieces = 1usize << options.quadrature.level_for(k, edge.length);
        // (side triangle, sign of its contribution to [φ])
        let sides: Vec<(usize, f64)> = match edge.tau_prime {
            Some(tp) => vec![(edge.tau, -1.0), (tp, 1.0)],
            None => vec![(edge.tau, 1.0)],
        };
        for piece in 0..pieces {
            for (&s0, &w0) in base.points.iter().zip(&base.weights) {
                let s = (piece as f64 + s0) / pieces as f64;
                let w = w0 / pieces as f64 * edge.length;
                let x: Point = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
                let f = exact.fields(x)?;
                let phi = [1.0 - s, s];
                let value = match edge.tau_prime {
                    Some(_) => -(f.grad[0] * edge.normal[0] + f.grad[1] * edge.normal[1]),
                    None => C64::new(0.0, k) * f.u,
                };
                for &(t, sign) in &sides {
                    for (a, &v) in edge.vertices.iter().enumerate() {
                        let i = mesh.local_index(t, v).expect("edge vertex in triangle");
                        b[3 * t + i] += value * (sign * phi[a] * w);
                    }
                }
            }
        }
    }
    Ok(b)
}

/// `u_h⁺ ∈ V_h` with `a_h(u_h⁺, v) + ik⟨u_h⁺, v⟩_Γ = a_h(u, v) + ik⟨u, v⟩_Γ`.
pub fn elliptic_projection<'m>(
    mesh: &'m TriMesh,
    exact: &dyn ExactSolution,
    params: DgParams,
    tol: f64,
    options: &NormOptions,
) -> Result<(DGFunction<'m>, SolveReport)> {
    let system = assemble_system(mesh, params)?;
    let a = projection_matrix(&system)?;
    let b = projection_rhs(mesh, exact, options)?;
    let (x, report) = solve_sparse_complex(&a, &b, tol)?;
    Ok((DGFunction::new(mesh, x)?, report))
}
