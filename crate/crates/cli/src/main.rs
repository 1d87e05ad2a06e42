use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dgppr::dg::{assemble_system, write_system, DgParams};
use dgppr::mesh::{build_mesh, estimate_alpha, measure_mesh_condition, write_mesh, AlphaEstimate, MeshKind, MeshParams};
use dgppr_cli::{read_csv, run_study, summary_table, write_csv, StudyConfig};

#[derive(Parser)]
#[command(name = "dgppr", version, about = "Linear DG Helmholtz solver with gradient recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence sweep and write the CSV table.
    Study(StudyArgs),
    /// Write a generated mesh in the plain-text mesh format.
    DumpMesh {
        #[command(flatten)]
        mesh: MeshArgs,
        /// Output file (standard output if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the assembled system matrix as sorted `i j re im` lines.
    DumpSystem {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, default_value_t = 10.0)]
        k: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 5.0)]
        rho0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure the mesh condition over a family and fit its exponent.
    MeshAudit {
        #[arg(long, default_value = "regular")]
        mesh: String,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
    },
    /// Recompute the rate columns of an existing CSV.
    Rates {
        #[arg(long)]
        csv: PathBuf,
        /// Output file; defaults to rewriting the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long, default_value = "regular")]
    mesh: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    q: f64,
}

impl MeshArgs {
    fn build(&self) -> Result<dgppr::mesh::TriMesh> {
        let kind: MeshKind = self.mesh.parse()?;
        let params = MeshParams {
            seed: self.seed,
            delta: self.delta,
            exponent: self.q,
            ..MeshParams::default()
        };
        Ok(build_mesh(kind, self.n, &params)?)
    }
}

/// Flags override the JSON config file key by key.
#[derive(Args)]
struct StudyArgs {
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    rho0: Option<f64>,
    /// regular, chevron or perturbed
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// first or average
    #[arg(long)]
    lambda: Option<String>,
    /// richardson or ppr
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Perturbation exponent.
    #[arg(long)]
    q: Option<f64>,
    /// Minimum angle (degrees) accepted for perturbed meshes.
    #[arg(long)]
    min_angle: Option<f64>,
    #[arg(long)]
    quad_max_level: Option<u32>,
    #[arg(long)]
    quad_target: Option<f64>,
    /// Report ‖·‖_{1,h} with the L2 volume term instead of the gradient.
    #[arg(long)]
    norm_literal: bool,
    /// Do not divide E1, E2, E3 and eta by |u|_1.
    #[arg(long)]
    absolute: bool,
    /// Allow N above 256.
    #[arg(long)]
    allow_large: bool,
    /// Directory for per-vertex recovered gradients.
    #[arg(long)]
    export_gradient: Option<PathBuf>,
}

impl StudyArgs {
    fn into_config(self) -> Result<StudyConfig> {
        let mut c = match &self.config {
            Some(p) => StudyConfig::from_json_file(p).with_context(|| format!("reading {}", p.display()))?,
            None => StudyConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(k, mu, rho0, mesh, n, lambda, estimator, tol, seed, delta, q, min_angle, quad_max_level, quad_target);
        if self.out.is_some() {
            c.out = self.out;
        }
        if self.export_gradient.is_some() {
            c.export_gradient = self.export_gradient;
        }
        c.norm_literal |= self.norm_literal;
        c.absolute |= self.absolute;
        c.allow_large |= self.allow_large;
        Ok(c)
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Study(args) => {
            let config = args.into_config()?;
            let study = config.validate()?;
            let Some(out) = config.out.clone() else {
                bail!("no output path: pass --out or set `out` in the config file");
            };
            let records = run_study(&study)?;
            write_csv(&records, &out)?;
            print!("{}", summary_table(&records));
            Ok(!dgppr_cli::any_failed(&records))
        }
        Command::DumpMesh { mesh, out } => {
            let m = mesh.build()?;
            let mut w = output(&out)?;
            write_mesh(&m, &mut w)?;
            w.flush()?;
            Ok(true)
        }
        Command::DumpSystem { mesh, k, mu, rho0, out } => {
            let m = mesh.build()?;
            let system = assemble_system(&m, DgParams { k, mu, rho0 })?;
            let mut w = output(&out)?;
            write_system(&system.a, &mut w)?;
            w.flush()?;
            Ok(true)
        }
        Command::MeshAudit { mesh, n, seed, delta, q } => {
            let kind: MeshKind = mesh.parse()?;
            let params = MeshParams { seed, delta, exponent: q, ..MeshParams::default() };
            let mut reports = Vec::new();
            println!("N  h  max_parallelogram  mean_parallelogram  max_isosceles  min_angle  lonely_nodes");
            for &size in &n {
                let m = build_mesh(kind, size, &params)?;
                let r = measure_mesh_condition(&m);
                println!(
                    "{size}  {:.6e}  {:.6e}  {:.6e}  {:.6e}  {:.3}  {:?}",
                    r.h,
                    r.max_parallelogram_defect,
                    r.mean_parallelogram_defect,
                    r.max_isosceles_defect,
                    m.min_angle_deg(),
                    m.nodes_without_interior_edge()
                );
                reports.push(r);
            }
            match estimate_alpha(&reports) {
                Ok(AlphaEstimate::Exact) => println!("alpha: exact (all defects zero)"),
                Ok(AlphaEstimate::Fitted { alpha, slope }) => println!("alpha: {alpha:.4} (log-log slope {slope:.4})"),
                Err(e) => println!("alpha: not estimated ({e})"),
            }
            Ok(true)
        }
        Command::Rates { csv, out } => {
            let mut records = read_csv(&csv)?;
            dgppr_cli::compute_rates(&mut records)?;
            write_csv(&records, out.as_ref().unwrap_or(&csv))?;
            print!("{}", summary_table(&records));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some cells failed; see the status column");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
