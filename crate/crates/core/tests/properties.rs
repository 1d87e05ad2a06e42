use dgppr::dg::{
    assemble_rhs, assemble_system, interpolate_p1, solve_system, CGFunction, DGFunction, DgParams,
    DEFAULT_SOLVER_TOL,
};
use dgppr::error_norms::{compute_errors, penalty_energy, NormOptions};
use dgppr::exact::{ExactFields, ExactSolution, HelmholtzBessel};
use dgppr::mesh::{build_mesh, MeshKind, MeshParams, Point, TriMesh};
use dgppr::recovery::{LambdaPolicy, RecoveryOperator};
use dgppr::C64;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = MeshKind> {
    prop_oneof![Just(MeshKind::Regular), Just(MeshKind::Chevron), Just(MeshKind::Perturbed)]
}

fn mesh(kind: MeshKind, n: usize, seed: u64) -> TriMesh {
    build_mesh(kind, n, &MeshParams { seed, ..MeshParams::default() }).unwrap()
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b)), len)
}

fn quadratic() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-2.0..2.0f64)
}

fn quad_value(c: &[f64; 6], p: Point) -> f64 {
    let [x, y] = p;
    c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
}

fn quad_gradient(c: &[f64; 6], p: Point) -> Point {
    let [x, y] = p;
    [c[1] + 2.0 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2.0 * c[5] * y]
}

/// `v^T S v` for a real coefficient vector.
fn quadratic_form(s: &dgppr::linsolve::CsrMatrix<f64>, v: &[f64]) -> f64 {
    s.iter().map(|(i, j, x)| v[i] * x * v[j]).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn stiffness_is_nonnegative_for_real_vectors(
        kind in kind(),
        n in 1usize..5,
        seed in 0u64..8,
        mu in prop_oneof![Just(0.0), Just(0.5), Just(1.0), Just(2.0)],
        raw in prop::collection::vec(-1.0..1.0f64, 3 * 2 * 16),
    ) {
        let m = mesh(kind, n, seed);
        let sys = assemble_system(&m, DgParams { k: 10.0, mu, rho0: 5.0 }).unwrap();
        let v = &raw[..3 * m.num_triangles()];
        let q = quadratic_form(&sys.s, v);
        prop_assert!(q >= -1e-12 * sys.s.max_abs(), "v*Sv = {q:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swapping_edge_sides_flips_jumps_and_keeps_the_matrix(
        kind in kind(),
        n in 1usize..6,
        pick in prop::collection::vec(any::<bool>(), 200),
        coeffs in complex_vec(3 * 2 * 36),
    ) {
        let m = mesh(kind, n, 3);
        let interior: Vec<usize> = (0..m.num_edges()).filter(|&e| !m.edges()[e].is_boundary()).collect();
        let chosen: Vec<usize> = interior.iter().zip(&pick).filter(|(_, &p)| p).map(|(&e, _)| e).collect();
        let swapped = m.with_swapped_sides(&chosen).unwrap();
        let params = DgParams { k: 7.0, mu: 1.0, rho0: 5.0 };
        let a = assemble_system(&m, params).unwrap();
        let b = assemble_system(&swapped, params).unwrap();
        let scale = a.s.max_abs();
        for (i, j, x) in a.s.iter() {
            prop_assert!((x - b.s.get(i, j)).abs() <= 1e-14 * scale);
        }
        prop_assert_eq!(a.s.nnz(), b.s.nnz());

        let ndof = 3 * m.num_triangles();
        let u = DGFunction::new(&m, coeffs[..ndof].to_vec()).unwrap();
        let w = DGFunction::new(&swapped, coeffs[..ndof].to_vec()).unwrap();
        for &e in &chosen {
            for s in [0.0, 0.3, 1.0] {
                prop_assert!((u.jump(e, s) + w.jump(e, s)).norm() <= 1e-15 * (1.0 + u.jump(e, s).norm()));
            }
            let (ea, eb) = (&m.edges()[e], &swapped.edges()[e]);
            prop_assert_eq!(eb.normal, [-ea.normal[0], -ea.normal[1]]);
        }
    }

    #[test]
    fn penalty_scaling_only_touches_the_jump_block(kind in kind(), n in 1usize..6, mu in 0.0..2.0f64) {
        let m = mesh(kind, n, 1);
        let a5 = assemble_system(&m, DgParams { k: 10.0, mu, rho0: 5.0 }).unwrap();
        let a10 = assemble_system(&m, DgParams { k: 10.0, mu, rho0: 10.0 }).unwrap();
        // the penalty blocks scale exactly
        for (i, j, p) in a5.penalty.iter() {
            prop_assert_eq!(a10.penalty.get(i, j), 2.0 * p);
        }
        let scale = a5.a.max_abs();
        for (i, j, x) in a10.a.iter() {
            let diff = x - a5.a.get(i, j);
            let p = a5.penalty.get(i, j);
            if p == 0.0 {
                prop_assert_eq!(diff, C64::default(), "entry ({}, {}) off the penalty support", i, j);
            } else {
                prop_assert!((diff - p).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn solution_is_linear_in_the_data(
        kind in kind(),
        n in 2usize..6,
        c in prop::array::uniform4(-1.0..1.0f64),
    ) {
        let m = mesh(kind, n, 5);
        let k = 4.0;
        let sys = assemble_system(&m, DgParams { k, mu: 0.0, rho0: 5.0 }).unwrap();
        let f1 = move |p: Point| Ok(C64::new(c[0] * p[0], c[1]));
        let g1 = move |p: Point, nrm: Point| Ok(C64::new(nrm[0], c[2] * p[1]));
        let f2 = move |p: Point| Ok(C64::new((c[3] * p[1]).sin(), p[0] * p[1]));
        let g2 = move |p: Point, _n: Point| Ok(C64::new(0.0, c[0] + p[0]));
        let solve = |f: &dyn Fn(Point) -> dgppr::Result<C64>, g: &dyn Fn(Point, Point) -> dgppr::Result<C64>| {
            let b = assemble_rhs(&m, k, f, g).unwrap();
            solve_system(&m, &sys, &b, 1e-12).unwrap().0.into_coeffs()
        };
        let x1 = solve(&f1, &g1);
        let x2 = solve(&f2, &g2);
        let x12 = solve(&|p| Ok(f1(p)? + f2(p)?), &|p, nrm| Ok(g1(p, nrm)? + g2(p, nrm)?));
        let norm = x12.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..x12.len() {
            prop_assert!((x12[i] - x1[i] - x2[i]).norm() <= 1e-9 * norm.max(1.0));
        }
    }

    #[test]
    fn recovery_is_linear(
        kind in kind(),
        n in 2usize..6,
        u in complex_vec(3 * 2 * 36),
        w in complex_vec(3 * 2 * 36),
        a in (-2.0..2.0f64, -2.0..2.0f64),
        b in (-2.0..2.0f64, -2.0..2.0f64),
        average in any::<bool>(),
    ) {
        let m = mesh(kind, n, 2);
        let policy = if average { LambdaPolicy::Average } else { LambdaPolicy::First };
        let ndof = 3 * m.num_triangles();
        let (a, b) = (C64::new(a.0, a.1), C64::new(b.0, b.1));
        let uu = DGFunction::new(&m, u[..ndof].to_vec()).unwrap();
        let ww = DGFunction::new(&m, w[..ndof].to_vec()).unwrap();
        let combo = DGFunction::new(&m, (0..ndof).map(|i| a * u[i] + b * w[i]).collect()).unwrap();
        let op = RecoveryOperator::new(&m).unwrap();
        let (gu, gw, gc) = (op.recover(&uu, policy).unwrap(), op.recover(&ww, policy).unwrap(), op.recover(&combo, policy).unwrap());
        for z in 0..m.num_vertices() {
            let (x, y, c) = (gu.at_vertex(z), gw.at_vertex(z), gc.at_vertex(z));
            for d in 0..2 {
                let expect = a * x[d] + b * y[d];
                prop_assert!((c[d] - expect).norm() <= 1e-11 * (1.0 + expect.norm()) / m.h());
            }
        }
    }

    #[test]
    fn continuous_input_recovers_identically_under_both_views(kind in kind(), n in 2usize..6, v in complex_vec(49)) {
        let m = mesh(kind, n, 4);
        let cg = CGFunction::new(&m, v[..m.num_vertices()].to_vec()).unwrap();
        let op = RecoveryOperator::new(&m).unwrap();
        let direct = op.apply(&cg).unwrap();
        for policy in [LambdaPolicy::First, LambdaPolicy::Average] {
            let via_dg = op.recover(&cg.to_dg(), policy).unwrap();
            for z in 0..m.num_vertices() {
                let (p, q) = (direct.at_vertex(z), via_dg.at_vertex(z));
                prop_assert!((p[0] - q[0]).norm() <= 1e-13 * (1.0 + p[0].norm()));
                prop_assert!((p[1] - q[1]).norm() <= 1e-13 * (1.0 + p[1].norm()));
            }
        }
    }

    #[test]
    fn quadratics_are_recovered_at_every_node(kind in kind(), n in 2usize..9, seed in 0u64..16, c in quadratic()) {
        let m = mesh(kind, n, seed);
        let v = interpolate_p1(&m, &|p| Ok(C64::new(quad_value(&c, p), 0.0))).unwrap();
        let g = RecoveryOperator::new(&m).unwrap().apply(&v).unwrap();
        let scale = c.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        for (z, &p) in m.vertices().iter().enumerate() {
            let exact = quad_gradient(&c, p);
            let got = g.at_vertex(z);
            for d in 0..2 {
                prop_assert!((got[d].re - exact[d]).abs() <= 1e-10 * scale.max(1e-300) && got[d].im == 0.0);
            }
        }
    }
}

/// `‖G v‖₀` against `|v|_{H¹ broken}` plus the scaled jumps `(Σ_e h_e⁻¹‖[v]‖²_e)^{1/2}`.
#[test]
fn recovered_gradient_is_bounded_by_broken_norm_and_jumps() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for kind in [MeshKind::Regular, MeshKind::Chevron, MeshKind::Perturbed] {
        for n in [2usize, 4, 8, 16] {
            let m = mesh(kind, n, 9);
            let op = RecoveryOperator::new(&m).unwrap();
            let unit = DgParams { k: 1.0, mu: 0.0, rho0: 1.0 };
            for _ in 0..100 {
                let v: Vec<C64> = (0..3 * m.num_triangles())
                    .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                let v = DGFunction::new(&m, v).unwrap();
                for policy in [LambdaPolicy::First, LambdaPolicy::Average] {
                    let g = op.recover(&v, policy).unwrap();
                    let rule = dgppr::quadrature::TriangleRule::of_degree(2);
                    let (mut gg, mut broken) = (0.0, 0.0);
                    for t in 0..m.num_triangles() {
                        let gv = v.gradient(t);
                        broken += m.area(t) * (gv[0].norm_sqr() + gv[1].norm_sqr());
                        for (l, w) in rule.points.iter().zip(&rule.weights) {
                            let x = g.value(t, l);
                            gg += m.area(t) * w * (x[0].norm_sqr() + x[1].norm_sqr());
                        }
                    }
                    let jumps = penalty_energy(&v, unit, 4).unwrap();
                    worst = worst.max(gg.sqrt() / (broken.sqrt() + jumps.sqrt()));
                }
            }
        }
    }
    assert!(worst <= 10.0, "measured constant {worst}");
}

/// Exact solution multiplied by a unit complex factor, optionally conjugated.
struct Transformed<'a> {
    inner: &'a HelmholtzBessel,
    phase: C64,
    conjugate: bool,
}

impl ExactSolution for Transformed<'_> {
    fn k(&self) -> f64 {
        self.inner.k()
    }

    fn fields(&self, p: Point) -> dgppr::Result<ExactFields> {
        let f = self.inner.fields(p)?;
        let t = |z: C64| if self.conjugate { (z * self.phase).conj() } else { z * self.phase };
        Ok(ExactFields::new(t(f.u), [t(f.grad[0]), t(f.grad[1])], t(f.f), self.inner.k()))
    }
}

#[test]
fn error_values_ignore_global_phase_and_conjugation() {
    let m = mesh(MeshKind::Perturbed, 8, 0);
    let exact = HelmholtzBessel::new(10.0).unwrap();
    let params = DgParams { k: 10.0, mu: 0.0, rho0: 5.0 };
    let opts = NormOptions::default();
    let (uh, _) = dgppr::dg::solve_helmholtz(&m, params, &exact, DEFAULT_SOLVER_TOL).unwrap();
    let op = RecoveryOperator::new(&m).unwrap();
    let base = {
        let ui = interpolate_p1(&m, &|p| exact.value(p)).unwrap();
        let g = op.recover(&uh, LambdaPolicy::First).unwrap();
        compute_errors(&uh, &ui, &g, None, None, &exact, params, &opts).unwrap()
    };
    for (theta, conjugate) in [(0.7, false), (2.0, false), (0.0, true), (-1.1, true)] {
        let phase = C64::from_polar(1.0, theta);
        let tr = Transformed { inner: &exact, phase, conjugate };
        let t = |z: &C64| if conjugate { (z * phase).conj() } else { z * phase };
        let vh = DGFunction::new(&m, uh.coeffs().iter().map(t).collect()).unwrap();
        let ui = interpolate_p1(&m, &|p| tr.value(p)).unwrap();
        let g = op.recover(&vh, LambdaPolicy::First).unwrap();
        let rec = compute_errors(&vh, &ui, &g, None, None, &tr, params, &opts).unwrap();
        for (a, b) in [
            (base.e1, rec.e1),
            (base.e2, rec.e2),
            (base.err_uhui_1h, rec.err_uhui_1h),
            (base.triple_uhui, rec.triple_uhui),
            (base.knorm_l2, rec.knorm_l2),
            (base.j0_jump, rec.j0_jump),
        ] {
            assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
        }
    }
    // conjugated matrix and load give the conjugated discrete solution
    let b: Vec<C64> = dgppr::dg::assemble_rhs_exact(&m, &exact).unwrap().iter().map(|z| z.conj()).collect();
    let a_conj = assemble_system(&m, params).unwrap().a.map(|z: C64| z.conj());
    let (x, _) = dgppr::linsolve::solve_sparse_complex(&a_conj, &b, 1e-12).unwrap();
    for (p, q) in x.iter().zip(uh.coeffs()) {
        assert!((p - q.conj()).norm() <= 1e-8 * (1.0 + q.norm()));
    }
}
