//! Polynomial preserving gradient recovery for discontinuous P1 fields.
//!
//! The DG field is first averaged to a continuous one, `ũ_h(z) = Σ_j λ_j
//! u_h(z, τ_{z,j})`. At every node a quadratic is fitted in the least-squares
//! sense to `ũ_h` on a patch of surrounding nodes and its gradient at the
//! node becomes the recovered value. The fit depends only on the mesh, so it
//! is precomputed once as a weight row per node.

use std::fmt;
use std::str::FromStr;

use faer::Mat;

use crate::dg::{CGFunction, DGFunction};
use crate::error::{invalid, Error, Result};
use crate::mesh::{Point, TriMesh};
use crate::quadrature::TriangleRule;
use crate::C64;

/// Minimum number of sampling nodes for a quadratic fit.
pub const MIN_PATCH_NODES: usize = 6;
/// Extra element layers tried before giving up on a node.
pub const MAX_GROWTH: u32 = 3;
/// Largest accepted condition number of the scaled design matrix.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaPolicy {
    /// `λ_1 = 1` on the first triangle of the ordered patch.
    #[default]
    First,
    /// `λ_j = 1 / n_z`.
    Average,
}

impl LambdaPolicy {
    pub fn name(self) -> &'static str {
        match self {
            LambdaPolicy::First => "first",
            LambdaPolicy::Average => "average",
        }
    }

    /// Averaging weights for a patch of `n` triangles.
    pub fn weights(self, n: usize) -> Vec<f64> {
        match self {
            LambdaPolicy::First => {
                let mut w = vec![0.0; n];
                w[0] = 1.0;
                w
            }
            LambdaPolicy::Average => vec![1.0 / n as f64; n],
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(LambdaPolicy::First),
            "average" => Ok(LambdaPolicy::Average),
            other => Err(invalid(format!("unknown lambda policy `{other}` (first|average)"))),
        }
    }
}

impl fmt::Display for LambdaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `ũ_h(z) = Σ_j λ_j u_h(z, τ_{z,j})`.
pub fn dg_to_cg<'m>(u_h: &DGFunction<'m>, policy: LambdaPolicy) -> CGFunction<'m> {
    let mesh = u_h.mesh();
    let coeffs = (0..mesh.num_vertices())
        .map(|z| {
            let patch = mesh.patch(z);
            let mut acc = C64::default();
            for (&t, w) in patch.iter().zip(policy.weights(patch.len())) {
                if w != 0.0 {
                    acc += u_h.node_value(z, t).expect("patch triangle contains its node") * w;
                }
            }
            acc
        })
        .collect();
    CGFunction::new(mesh, coeffs).expect("one value per vertex")
}

/// Sampling patch of one node and its gradient weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryPatch {
    pub center: usize,
    /// Sampling nodes in ascending index order.
    pub nodes: Vec<usize>,
    /// Patch radius used to scale the local frame.
    pub scale: f64,
    /// Element layers added beyond the first ring.
    pub growth: u32,
    pub condition: f64,
    /// `G(z) = (Σ wx_j ũ(z_j), Σ wy_j ũ(z_j))`
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
}

/// Node-wise recovery weights for a fixed mesh.
#[derive(Debug, Clone)]
pub struct RecoveryOperator {
    patches: Vec<RecoveryPatch>,
}

fn fit_patch(mesh: &TriMesh, z: usize, nodes: &[usize]) -> Option<(f64, f64, Vec<f64>, Vec<f64>)> {
    if nodes.len() < MIN_PATCH_NODES {
        return None;
    }
    let c = mesh.vertices()[z];
    let scale = nodes
        .iter()
        .map(|&v| {
            let p = mesh.vertices()[v];
            (p[0] - c[0]).hypot(p[1] - c[1])
        })
        .fold(0.0, f64::max);
    let design = Mat::<f64>::from_fn(nodes.len(), 6, |r, col| {
        let p = mesh.vertices()[nodes[r]];
        let (x, y) = ((p[0] - c[0]) / scale, (p[1] - c[1]) / scale);
        [1.0, x, y, x * x, x * y, y * y][col]
    });
    let svd = design.thin_svd().ok()?;
    let s = svd.S().column_vector();
    let (smax, smin) = (0..6).fold((0.0f64, f64::INFINITY), |(a, b), i| (a.max(s[i]), b.min(s[i])));
    let condition = smax / smin;
    if !(condition < MAX_CONDITION) {
        return None;
    }
    // rows 1 and 2 of the pseudoinverse V Σ⁻¹ Uᵀ, divided by the frame scale
    let (u, v) = (svd.U(), svd.V());
    let row = |r: usize| -> Vec<f64> {
        (0..nodes.len())
            .map(|j| (0..6).map(|i| v[(r, i)] / s[i] * u[(j, i)]).sum::<f64>() / scale)
            .collect()
    };
    Some((scale, condition, row(1), row(2)))
}

impl RecoveryOperator {
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        let mut patches = Vec::with_capacity(mesh.num_vertices());
        for z in 0..mesh.num_vertices() {
            let mut elements: Vec<usize> = mesh.patch(z).to_vec();
            let mut growth = 0;
            loop {
                let mut nodes: Vec<usize> = elements.iter().flat_map(|&t| mesh.triangles()[t]).collect();
                nodes.sort_unstable();
                nodes.dedup();
                if let Some((scale, condition, wx, wy)) = fit_patch(mesh, z, &nodes) {
                    patches.push(RecoveryPatch {
                        center: z,
                        nodes,
                        scale,
                        growth,
                        condition,
                        wx,
                        wy,
                    });
                    break;
                }
                if growth == MAX_GROWTH {
                    return Err(Error::Recovery {
                        node: z,
                        reason: format!(
                            "no unisolvent sampling patch after {MAX_GROWTH} growth layers ({} nodes)",
                            nodes.len()
                        ),
                    });
                }
                elements = nodes.iter().flat_map(|&v| mesh.patch(v).iter().copied()).collect();
                elements.sort_unstable();
                elements.dedup();
                growth += 1;
            }
        }
        Ok(RecoveryOperator { patches })
    }

    pub fn patches(&self) -> &[RecoveryPatch] {
        &self.patches
    }

    /// Recovered gradient of a continuous field (the operator `G̃_h`).
    pub fn apply<'m>(&self, v: &CGFunction<'m>) -> Result<RecoveredGradient<'m>> {
        let mesh = v.mesh();
        if self.patches.len() != mesh.num_vertices() {
            return Err(invalid("recovery operator built for a different mesh"));
        }
        let c = v.coeffs();
        let (mut gx, mut gy) = (Vec::with_capacity(c.len()), Vec::with_capacity(c.len()));
        for p in &self.patches {
            let (mut x, mut y) = (C64::default(), C64::default());
            for ((&n, &wx), &wy) in p.nodes.iter().zip(&p.wx).zip(&p.wy) {
                x += c[n] * wx;
                y += c[n] * wy;
            }
            gx.push(x);
            gy.push(y);
        }
        Ok(RecoveredGradient {
            x: CGFunction::new(mesh, gx)?,
            y: CGFunction::new(mesh, gy)?,
        })
    }

    /// `G_h u_h := G̃_h ũ_h`.
    pub fn recover<'m>(&self, u_h: &DGFunction<'m>, policy: LambdaPolicy) -> Result<RecoveredGradient<'m>> {
        self.apply(&dg_to_cg(u_h, policy))
    }
}

/// Both components of a recovered gradient, continuous P1 on the mesh.
#[derive(Debug, Clone)]
pub struct RecoveredGradient<'m> {
    pub x: CGFunction<'m>,
    pub y: CGFunction<'m>,
}

impl<'m> RecoveredGradient<'m> {
    pub fn mesh(&self) -> &'m TriMesh {
        self.x.mesh()
    }

    pub fn at_vertex(&self, v: usize) -> [C64; 2] {
        [self.x.coeffs()[v], self.y.coeffs()[v]]
    }

    pub fn value(&self, t: usize, bary: &[f64; 3]) -> [C64; 2] {
        [self.x.value(t, bary), self.y.value(t, bary)]
    }
}

pub fn recover_gradient<'m>(u_h: &DGFunction<'m>, policy: LambdaPolicy) -> Result<RecoveredGradient<'m>> {
    RecoveryOperator::new(u_h.mesh())?.recover(u_h, policy)
}

/// Coarse triangle containing each fine vertex, for nested mesh pairs.
#[derive(Debug, Clone)]
pub struct NestedTransfer {
    locations: Vec<(usize, [f64; 3])>,
}

const NEST_TOL: f64 = 1e-10;

impl NestedTransfer {
    /// Verifies that every fine triangle lies inside one coarse triangle.
    pub fn new(coarse: &TriMesh, fine: &TriMesh) -> Result<Self> {
        let [lo, hi] = coarse.bounding_box();
        let cells = (coarse.num_triangles() as f64).sqrt().ceil().max(1.0) as usize;
        let (wx, wy) = ((hi[0] - lo[0]) / cells as f64, (hi[1] - lo[1]) / cells as f64);
        let cell_of = |p: Point| -> (usize, usize) {
            let i = ((p[0] - lo[0]) / wx).floor().clamp(0.0, (cells - 1) as f64) as usize;
            let j = ((p[1] - lo[1]) / wy).floor().clamp(0.0, (cells - 1) as f64) as usize;
            (i, j)
        };
        let mut buckets = vec![Vec::new(); cells * cells];
        for t in 0..coarse.num_triangles() {
            let c = coarse.corners(t);
            let min = [c.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min), c.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min)];
            let max = [c.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max), c.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max)];
            let (i0, j0) = cell_of(min);
            let (i1, j1) = cell_of(max);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * cells + i].push(t);
                }
            }
        }
        let mut owner: Vec<Option<usize>> = vec![None; fine.num_vertices()];
        for t in 0..fine.num_triangles() {
            let centroid = fine.centroid(t);
            let (i, j) = cell_of(centroid);
            let host = buckets[j * cells + i]
                .iter()
                .copied()
                .find(|&c| coarse.contains(c, centroid, NEST_TOL))
                .ok_or_else(|| Error::NotNested(format!("fine triangle {t} lies outside the coarse mesh")))?;
            for v in fine.triangles()[t] {
                if !coarse.contains(host, fine.vertices()[v], NEST_TOL) {
                    return Err(Error::NotNested(format!(
                        "fine triangle {t} straddles coarse triangle {host}"
                    )));
                }
                owner[v].get_or_insert(host);
            }
        }
        let locations = owner
            .into_iter()
            .enumerate()
            .map(|(v, host)| {
                let host = host.expect("every vertex belongs to a triangle");
                (host, coarse.barycentric(host, fine.vertices()[v]))
            })
            .collect();
        Ok(NestedTransfer { locations })
    }

    /// P1 interpolation of a coarse continuous field onto the fine vertices.
    pub fn prolong(&self, coarse: &CGFunction<'_>) -> Vec<C64> {
        self.locations.iter().map(|(t, l)| coarse.value(*t, l)).collect()
    }
}

/// `RG = (4 G_fine - I_h G_coarse) / 3` at the fine vertices.
pub fn richardson_extrapolate<'m>(
    coarse: &RecoveredGradient<'_>,
    fine: &RecoveredGradient<'m>,
) -> Result<RecoveredGradient<'m>> {
    let transfer = NestedTransfer::new(coarse.mesh(), fine.mesh())?;
    richardson_with(&transfer, coarse, fine)
}

pub fn richardson_with<'m>(
    transfer: &NestedTransfer,
    coarse: &RecoveredGradient<'_>,
    fine: &RecoveredGradient<'m>,
) -> Result<RecoveredGradient<'m>> {
    let mesh = fine.mesh();
    if transfer.locations.len() != mesh.num_vertices() {
        return Err(invalid("transfer built for a different fine mesh"));
    }
    let combine = |f: &CGFunction<'m>, c: &CGFunction<'_>| -> Result<CGFunction<'m>> {
        let ci = transfer.prolong(c);
        let v = f.coeffs().iter().zip(&ci).map(|(a, b)| (a * 4.0 - b) / 3.0).collect();
        CGFunction::new(mesh, v)
    };
    Ok(RecoveredGradient {
        x: combine(&fine.x, &coarse.x)?,
        y: combine(&fine.y, &coarse.y)?,
    })
}

/// `η_h = (Σ_τ ‖G - ∇u_h‖²_{L²(τ)})^{1/2}`.
pub fn error_estimator(u_h: &DGFunction<'_>, g: &RecoveredGradient<'_>) -> Result<f64> {
    let mesh = u_h.mesh();
    if g.mesh().num_vertices() != mesh.num_vertices() || g.mesh().num_triangles() != mesh.num_triangles() {
        return Err(invalid("estimator inputs live on different meshes"));
    }
    let rule = TriangleRule::of_degree(6);
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let grad = u_h.gradient(t);
        let mut local = 0.0;
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let gv = g.value(t, l);
            local += w * ((gv[0] - grad[0]).norm_sqr() + (gv[1] - grad[1]).norm_sqr());
        }
        total += mesh.area(t) * local;
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::interpolate_p1;
    use crate::mesh::{build_mesh, MeshKind, MeshParams};

    fn quadratic(p: Point) -> C64 {
        let [x, y] = p;
        C64::new(1.0 + 2.0 * x - y + 3.0 * x * x - 2.0 * x * y + 0.5 * y * y, x * y - y * y)
    }

    fn quadratic_grad(p: Point) -> [C64; 2] {
        let [x, y] = p;
        [C64::new(2.0 + 6.0 * x - 2.0 * y, y), C64::new(-1.0 - 2.0 * x + y, x - 2.0 * y)]
    }

    #[test]
    fn quadratics_are_recovered_exactly() {
        for kind in [MeshKind::Regular, MeshKind::Chevron, MeshKind::Perturbed] {
            for n in [2, 5, 16] {
                let mesh = build_mesh(kind, n, &MeshParams::default()).unwrap();
                let ui = interpolate_p1(&mesh, &|p| Ok(quadratic(p))).unwrap();
                for policy in [LambdaPolicy::First, LambdaPolicy::Average] {
                    let g = recover_gradient(&ui.to_dg(), policy).unwrap();
                    for v in 0..mesh.num_vertices() {
                        let want = quadratic_grad(mesh.vertices()[v]);
                        let got = g.at_vertex(v);
                        for d in 0..2 {
                            assert!(
                                (got[d] - want[d]).norm() <= 1e-10 * want[d].norm().max(1.0),
                                "{kind} n={n} v={v}: {got:?} vs {want:?}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn continuous_input_makes_policies_agree() {
        let mesh = build_mesh(MeshKind::Perturbed, 6, &MeshParams::default()).unwrap();
        let ui = interpolate_p1(&mesh, &|p| Ok(C64::new(p[0].sin(), p[1].cos()))).unwrap();
        let dg = ui.to_dg();
        assert_eq!(dg_to_cg(&dg, LambdaPolicy::First).coeffs(), ui.coeffs());
        let avg = dg_to_cg(&dg, LambdaPolicy::Average);
        for (a, b) in avg.coeffs().iter().zip(ui.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn single_square_policies() {
        let mesh = build_mesh(MeshKind::Regular, 1, &MeshParams::default()).unwrap();
        let edge = mesh.edges().iter().find(|e| !e.is_boundary()).unwrap();
        let tp = edge.tau_prime.unwrap();
        let mut c = vec![C64::default(); 6];
        for i in 0..3 {
            c[3 * tp + i] = C64::new(1.0, 0.0);
        }
        let u = DGFunction::new(&mesh, c).unwrap();
        for z in edge.vertices {
            let first = mesh.patch(z)[0];
            let want = if first == tp { 1.0 } else { 0.0 };
            assert_eq!(dg_to_cg(&u, LambdaPolicy::First).coeffs()[z], C64::new(want, 0.0));
            assert_eq!(dg_to_cg(&u, LambdaPolicy::Average).coeffs()[z], C64::new(0.5, 0.0));
        }
    }

    #[test]
    fn policy_weights_are_convex() {
        for n in 1..8 {
            for p in [LambdaPolicy::First, LambdaPolicy::Average] {
                let w = p.weights(n);
                assert!(w.iter().all(|&x| x >= 0.0));
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
        assert_eq!(LambdaPolicy::First.weights(4).iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn patches_meet_the_fit_requirements() {
        let mesh = build_mesh(MeshKind::Regular, 8, &MeshParams::default()).unwrap();
        let op = RecoveryOperator::new(&mesh).unwrap();
        for p in op.patches() {
            assert!(p.nodes.len() >= MIN_PATCH_NODES);
            assert!(p.condition < MAX_CONDITION);
            assert!(p.nodes.contains(&p.center));
            if !mesh.is_boundary_vertex(p.center) {
                assert_eq!(p.growth, 0);
                assert_eq!(p.nodes.len(), 7);
            }
        }
    }

    #[test]
    fn richardson_fixed_point_and_nesting() {
        let coarse = build_mesh(MeshKind::Regular, 4, &MeshParams::default()).unwrap();
        let fine = build_mesh(MeshKind::Regular, 8, &MeshParams::default()).unwrap();
        fn lin(m: &TriMesh) -> (CGFunction<'_>, CGFunction<'_>) {
            (
                interpolate_p1(m, &|p| Ok(C64::new(2.0 * p[0] - 1.0, p[1]))).unwrap(),
                interpolate_p1(m, &|p| Ok(C64::new(p[1], -3.0))).unwrap(),
            )
        }
        let (cx, cy) = lin(&coarse);
        let (fx, fy) = lin(&fine);
        let rg = richardson_extrapolate(
            &RecoveredGradient { x: cx, y: cy },
            &RecoveredGradient { x: fx.clone(), y: fy },
        )
        .unwrap();
        for (a, b) in rg.x.coeffs().iter().zip(fx.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
        let chevron = build_mesh(MeshKind::Chevron, 8, &MeshParams::default()).unwrap();
        assert!(matches!(NestedTransfer::new(&coarse, &chevron), Err(Error::NotNested(_))));
        assert!(NestedTransfer::new(&fine, &coarse).is_err());
    }

    #[test]
    fn estimator_vanishes_for_exact_gradient_and_is_homogeneous() {
        let mesh = build_mesh(MeshKind::Perturbed, 6, &MeshParams::default()).unwrap();
        let u = interpolate_p1(&mesh, &|p| Ok(C64::new(3.0 * p[0] - p[1], 1.0))).unwrap().to_dg();
        let g = RecoveredGradient {
            x: interpolate_p1(&mesh, &|_| Ok(C64::new(3.0, 0.0))).unwrap(),
            y: interpolate_p1(&mesh, &|_| Ok(C64::new(-1.0, 0.0))).unwrap(),
        };
        assert!(error_estimator(&u, &g).unwrap() < 1e-13);

        let w = interpolate_p1(&mesh, &|p| Ok(C64::new(p[0] * p[1], p[0]))).unwrap().to_dg();
        let gw = recover_gradient(&w, LambdaPolicy::First).unwrap();
        let c = C64::new(0.3, -2.0);
        let scale = |v: &[C64]| v.iter().map(|a| a * c).collect::<Vec<_>>();
        let cw = DGFunction::new(&mesh, scale(w.coeffs())).unwrap();
        let cg = RecoveredGradient {
            x: CGFunction::new(&mesh, scale(gw.x.coeffs())).unwrap(),
            y: CGFunction::new(&mesh, scale(gw.y.coeffs())).unwrap(),
        };
        let (e1, e2) = (error_estimator(&w, &gw).unwrap(), error_estimator(&cw, &cg).unwrap());
        assert!((e2 - c.norm() * e1).abs() <= 1e-13 * e2);
    }
}
