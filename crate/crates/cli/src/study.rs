use std::io::Write;
use std::path::Path;
use std::time::Instant;

use dgppr::dg::{interpolate_p1, solve_helmholtz, CGFunction, DgParams};
use dgppr::error_norms::{compute_errors, exact_seminorm};
use dgppr::exact::{ExactSolution, HelmholtzBessel};
use dgppr::mesh::{build_mesh, TriMesh};
use dgppr::recovery::{error_estimator, richardson_extrapolate, RecoveredGradient, RecoveryOperator};
use dgppr::C64;

use crate::config::{EstimatorKind, Study};
use crate::table::{compute_rates, StudyRecord};
use crate::CliError;

/// Recovered gradient of the previous N, kept as the coarse Richardson partner.
struct Coarse {
    mesh: TriMesh,
    gx: Vec<C64>,
    gy: Vec<C64>,
}

struct CellOutcome {
    record: StudyRecord,
    coarse: Option<Coarse>,
}

fn blank_record(study: &Study, k: f64, mu: f64, n: usize) -> StudyRecord {
    StudyRecord {
        mesh: study.kind.name().into(),
        k,
        mu,
        rho0: study.config.rho0,
        lambda_policy: study.policy.name().into(),
        estimator: study.estimator.name().into(),
        n,
        ..Default::default()
    }
}

/// Status text is a single CSV cell on a single line.
fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn run_cell(study: &Study, k: f64, mu: f64, n: usize, coarse: Option<&Coarse>) -> Result<CellOutcome, CliError> {
    let cfg = &study.config;
    let mut record = blank_record(study, k, mu, n);
    let mesh = build_mesh(study.kind, n, &study.mesh_params)?;
    let params = DgParams { k, mu, rho0: cfg.rho0 };
    let exact = HelmholtzBessel::new(k)?;
    record.h = Some(mesh.h());
    record.ndof = Some(3 * mesh.num_triangles());

    let (u_h, _report) = solve_helmholtz(&mesh, params, &exact, cfg.tol)?;
    let u_i = interpolate_p1(&mesh, &|p| exact.value(p))?;
    let g = RecoveryOperator::new(&mesh)?.recover(&u_h, study.policy)?;

    let mut notes = Vec::new();
    let rg = match coarse {
        Some(c) => {
            let cg = RecoveredGradient {
                x: CGFunction::new(&c.mesh, c.gx.clone())?,
                y: CGFunction::new(&c.mesh, c.gy.clone())?,
            };
            match richardson_extrapolate(&cg, &g) {
                Ok(rg) => Some(rg),
                Err(dgppr::Error::NotNested(why)) => {
                    notes.push(format!("no extrapolation: {why}"));
                    None
                }
                Err(e) => return Err(e.into()),
            }
        }
        None => None,
    };
    let eta = match study.estimator {
        EstimatorKind::Richardson => rg.as_ref().map(|r| error_estimator(&u_h, r)).transpose()?,
        EstimatorKind::Ppr => Some(error_estimator(&u_h, &g)?),
    };
    let errors = compute_errors(&u_h, &u_i, &g, rg.as_ref(), eta, &exact, params, &study.norms)?;
    let scale = if cfg.absolute {
        1.0
    } else {
        exact_seminorm(&mesh, &exact, &study.norms)?
    };
    record.e1 = Some(errors.e1 / scale);
    record.e2 = Some(errors.e2 / scale);
    record.e3 = errors.e3.map(|e| e / scale);
    record.eta = errors.eta.map(|e| e / scale);
    record.err_uhui_1h = Some(errors.err_uhui_1h);
    record.knorm_l2 = Some(errors.knorm_l2);
    record.j0_jump = Some(errors.j0_jump);
    record.status = if notes.is_empty() {
        "ok".into()
    } else {
        format!("ok; {}", notes.join("; "))
    };

    if let Some(dir) = &cfg.export_gradient {
        export_gradient(&g, &dir.join(format!("gradient_{}_k{k}_mu{mu}_N{n}.txt", study.kind.name())))?;
    }
    let coarse = Some(Coarse {
        gx: g.x.coeffs().to_vec(),
        gy: g.y.coeffs().to_vec(),
        mesh: mesh.clone(),
    });
    Ok(CellOutcome { record, coarse })
}

/// `x y Re(Gx) Im(Gx) Re(Gy) Im(Gy)` per vertex.
pub fn export_gradient(g: &RecoveredGradient<'_>, path: &Path) -> Result<(), CliError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (v, p) in g.mesh().vertices().iter().enumerate() {
        let [gx, gy] = g.at_vertex(v);
        writeln!(out, "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}", p[0], p[1], gx.re, gx.im, gy.re, gy.im)?;
    }
    out.flush()?;
    Ok(())
}

/// Runs every (k, mu, N) cell in order. A failing cell gets its reason in
/// `status` and the sweep goes on; rates are filled at the end.
pub fn run_study(study: &Study) -> Result<Vec<StudyRecord>, CliError> {
    let cfg = &study.config;
    if let Some(dir) = &cfg.export_gradient {
        std::fs::create_dir_all(dir)?;
    }
    let mut records = Vec::new();
    for &k in &cfg.k {
        for &mu in &cfg.mu {
            let mut coarse: Option<Coarse> = None;
            for &n in &cfg.n {
                if n > crate::config::DEFAULT_MAX_N {
                    eprintln!("warning: N = {n} needs several GB of memory for the factorization");
                }
                let start = Instant::now();
                let (mut record, next) = match run_cell(study, k, mu, n, coarse.as_ref()) {
                    Ok(c) => (c.record, c.coarse),
                    Err(e) => {
                        let mut r = blank_record(study, k, mu, n);
                        r.status = format!("failed: {}", one_line(&e.to_string()));
                        (r, None)
                    }
                };
                record.wall_time = start.elapsed().as_secs_f64();
                eprintln!(
                    "{} k={k} mu={mu} N={n}: {} ({:.1} s)",
                    record.mesh, record.status, record.wall_time
                );
                coarse = next;
                records.push(record);
            }
        }
    }
    compute_rates(&mut records)?;
    Ok(records)
}

pub fn any_failed(records: &[StudyRecord]) -> bool {
    records.iter().any(|r| r.status.starts_with("failed"))
}
