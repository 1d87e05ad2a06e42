use std::path::{Path, PathBuf};

use dgppr::error_norms::{NormOptions, OneHNorm};
use dgppr::mesh::{MeshKind, MeshParams};
use dgppr::quadrature::OscillationAdaptiveRule;
use dgppr::recovery::LambdaPolicy;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Largest N run without `allow_large`.
pub const DEFAULT_MAX_N: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    /// Estimator built on the Richardson-extrapolated gradient.
    Richardson,
    /// Estimator built on the recovered gradient of the current mesh.
    Ppr,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Richardson => "richardson",
            EstimatorKind::Ppr => "ppr",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "richardson" => Ok(EstimatorKind::Richardson),
            "ppr" => Ok(EstimatorKind::Ppr),
            other => Err(CliError::Config(format!("unknown estimator `{other}`"))),
        }
    }
}

/// One convergence sweep over `k × mu × n`.
///
/// The JSON form uses the same keys; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub k: Vec<f64>,
    pub mu: Vec<f64>,
    pub rho0: f64,
    pub mesh: String,
    pub n: Vec<usize>,
    pub lambda: String,
    pub estimator: String,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub delta: f64,
    /// Perturbation exponent q.
    pub q: f64,
    pub min_angle: f64,
    pub quad_max_level: u32,
    pub quad_target: f64,
    pub norm_literal: bool,
    /// Report E1, E2, E3 and eta without dividing by |u|_1.
    pub absolute: bool,
    pub allow_large: bool,
    /// Directory for per-cell recovered-gradient dumps.
    pub export_gradient: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        let mesh = MeshParams::default();
        let quad = OscillationAdaptiveRule::default();
        StudyConfig {
            k: vec![10.0],
            mu: vec![0.0],
            rho0: 5.0,
            mesh: "regular".into(),
            n: vec![4, 8, 16, 32, 64, 128, 256],
            lambda: "first".into(),
            estimator: "richardson".into(),
            tol: dgppr::dg::DEFAULT_SOLVER_TOL,
            out: None,
            seed: mesh.seed,
            delta: mesh.delta,
            q: mesh.exponent,
            min_angle: mesh.min_angle_floor_deg,
            quad_max_level: quad.max_level(),
            quad_target: quad.target,
            norm_literal: false,
            absolute: false,
            allow_large: false,
            export_gradient: None,
        }
    }
}

/// Checked, typed form of a [`StudyConfig`].
#[derive(Debug, Clone)]
pub struct Study {
    pub config: StudyConfig,
    pub kind: MeshKind,
    pub mesh_params: MeshParams,
    pub policy: LambdaPolicy,
    pub estimator: EstimatorKind,
    pub norms: NormOptions,
}

impl StudyConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<Study, CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.k.is_empty() || self.mu.is_empty() || self.n.is_empty() {
            return bad("k, mu and n lists must be non-empty".into());
        }
        if let Some(k) = self.k.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return bad(format!("k must be positive, got {k}"));
        }
        if let Some(mu) = self.mu.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return bad(format!("mu must be nonnegative, got {mu}"));
        }
        if self.n[0] == 0 {
            return bad("N must be at least 1".into());
        }
        for w in self.n.windows(2) {
            if w[1] <= w[0] {
                return bad(format!("N list must be strictly increasing ({} then {})", w[0], w[1]));
            }
            if w[1] != 2 * w[0] {
                return bad(format!("N list must double between entries ({} then {})", w[0], w[1]));
            }
        }
        let largest = *self.n.last().unwrap();
        if largest > DEFAULT_MAX_N && !self.allow_large {
            return bad(format!(
                "N = {largest} exceeds the default cap {DEFAULT_MAX_N}; pass --allow-large to run it"
            ));
        }
        if !(self.tol > 1e-14 && self.tol < 1e-4) {
            return bad(format!("solver tolerance {} outside (1e-14, 1e-4)", self.tol));
        }
        if !(self.quad_target > 0.0) || self.quad_max_level > 10 {
            return bad("quadrature target must be positive and max level at most 10".into());
        }
        let kind: MeshKind = self.mesh.parse()?;
        let policy: LambdaPolicy = self.lambda.parse()?;
        let estimator: EstimatorKind = self.estimator.parse()?;
        let mesh_params = MeshParams {
            seed: self.seed,
            delta: self.delta,
            exponent: self.q,
            min_angle_floor_deg: self.min_angle,
        };
        let base = dgppr::quadrature::TriangleRule::of_degree(6);
        let norms = NormOptions {
            quadrature: OscillationAdaptiveRule::new(&base, self.quad_target, self.quad_max_level),
            one_h: if self.norm_literal {
                OneHNorm::Literal
            } else {
                OneHNorm::BrokenGradient
            },
            ..NormOptions::default()
        };
        Ok(Study {
            config: self.clone(),
            kind,
            mesh_params,
            policy,
            estimator,
            norms,
        })
    }
}
