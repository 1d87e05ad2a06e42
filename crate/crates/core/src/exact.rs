//! Reference solutions of the Helmholtz impedance problem
//! `-Δu - k²u = f` in Ω, `∂u/∂n + iku = g` on Γ.

mod bessel;

pub use bessel::{bessel_j, MAX_ARGUMENT as BESSEL_MAX_ARGUMENT};

use crate::error::{invalid, Result};
use crate::mesh::Point;
use crate::C64;

/// Closest admissible distance from the polar origin.
pub const MIN_RADIUS: f64 = 0.1;

/// Pointwise data of an exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFields {
    pub u: C64,
    pub grad: [C64; 2],
    pub f: C64,
    k: f64,
}

impl ExactFields {
    /// Fields of a user-supplied solution at wave number `k`.
    pub fn new(u: C64, grad: [C64; 2], f: C64, k: f64) -> Self {
        ExactFields { u, grad, f, k }
    }

    /// Impedance data `∇u·n + iku` for the unit normal `n`.
    pub fn g(&self, n: Point) -> C64 {
        self.grad[0] * n[0] + self.grad[1] * n[1] + C64::new(0.0, self.k) * self.u
    }
}

pub trait ExactSolution: Sync {
    fn k(&self) -> f64;
    fn fields(&self, p: Point) -> Result<ExactFields>;

    fn value(&self, p: Point) -> Result<C64> {
        Ok(self.fields(p)?.u)
    }
}

/// Wave number with the cached coefficient
/// `C = (cos k + i sin k) / (k (J_0(k) + i J_1(k)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    k: f64,
    coefficient: C64,
}

impl WaveParams {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(invalid(format!("wave number must be positive, got {k}")));
        }
        let denom = C64::new(bessel_j(0, k)?, bessel_j(1, k)?) * k;
        let coefficient = C64::new(k.cos(), k.sin()) / denom;
        Ok(WaveParams { k, coefficient })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn coefficient(&self) -> C64 {
        self.coefficient
    }
}

/// `u = cos(kr)/r - C J_0(kr)`, `r` measured from `(0, 0)`.
pub fn exact_fields(p: Point, params: &WaveParams) -> Result<ExactFields> {
    let k = params.k;
    let r = p[0].hypot(p[1]);
    if !(r >= MIN_RADIUS) {
        return Err(invalid(format!(
            "point ({}, {}) is within {MIN_RADIUS} of the singularity at the origin",
            p[0], p[1]
        )));
    }
    let kr = k * r;
    let (s, c) = kr.sin_cos();
    let j0 = bessel_j(0, kr)?;
    let j1 = bessel_j(1, kr)?;
    let coef = params.coefficient;
    let u = C64::from(c / r) - coef * j0;
    // d/dr J_0(kr) = -k J_1(kr)
    let du_dr = C64::from(-k * s / r - c / (r * r)) + coef * (k * j1);
    let grad = [du_dr * (p[0] / r), du_dr * (p[1] / r)];
    // the J_0 part solves the homogeneous equation
    let f = C64::from(-k * s / (r * r) - c / (r * r * r));
    Ok(ExactFields { u, grad, f, k })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmholtzBessel {
    pub params: WaveParams,
}

impl HelmholtzBessel {
    pub fn new(k: f64) -> Result<Self> {
        Ok(HelmholtzBessel {
            params: WaveParams::new(k)?,
        })
    }
}

impl ExactSolution for HelmholtzBessel {
    fn k(&self) -> f64 {
        self.params.k
    }

    fn fields(&self, p: Point) -> Result<ExactFields> {
        exact_fields(p, &self.params)
    }
}

/// `u = a + b x + c y`, reproduced exactly by any consistent P1 scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalLinear {
    pub k: f64,
    pub coefficients: [C64; 3],
}

impl ExactSolution for GlobalLinear {
    fn k(&self) -> f64 {
        self.k
    }

    fn fields(&self, p: Point) -> Result<ExactFields> {
        let [a, b, c] = self.coefficients;
        let u = a + b * p[0] + c * p[1];
        Ok(ExactFields {
            u,
            grad: [b, c],
            f: -u * (self.k * self.k),
            k: self.k,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| [rng.random_range(0.5..1.5), rng.random_range(0.5..1.5)])
            .collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let step = 1e-6;
        for k in [10.0, 50.0] {
            let params = WaveParams::new(k).unwrap();
            for p in random_points(100, 7) {
                let fld = exact_fields(p, &params).unwrap();
                let u = |q: Point| exact_fields(q, &params).unwrap().u;
                let fd = [
                    (u([p[0] + step, p[1]]) - u([p[0] - step, p[1]])) / (2.0 * step),
                    (u([p[0], p[1] + step]) - u([p[0], p[1] - step])) / (2.0 * step),
                ];
                let scale = fld.grad[0].norm().max(fld.grad[1].norm()).max(1.0);
                for d in 0..2 {
                    assert!(
                        (fd[d] - fld.grad[d]).norm() <= 1e-8 * scale * k,
                        "k={k} p={p:?} d={d}: {} vs {}",
                        fd[d],
                        fld.grad[d]
                    );
                }
            }
        }
    }

    #[test]
    fn source_matches_finite_difference_laplacian() {
        let step = 1e-5;
        for k in [std::f64::consts::PI, 10.0, 30.0] {
            let params = WaveParams::new(k).unwrap();
            for p in random_points(50, 11) {
                let u = |q: Point| exact_fields(q, &params).unwrap().u;
                let lap = (u([p[0] + step, p[1]])
                    + u([p[0] - step, p[1]])
                    + u([p[0], p[1] + step])
                    + u([p[0], p[1] - step])
                    - u(p) * 4.0)
                    / (step * step);
                let fld = exact_fields(p, &params).unwrap();
                let residual = (-lap - fld.u * (k * k) - fld.f).norm();
                assert!(
                    residual <= 1e-5 * (1.0 + k * k) * fld.u.norm().max(1.0),
                    "k={k} p={p:?} residual {residual:e}"
                );
            }
        }
    }

    #[test]
    fn radial_source_at_unit_radius() {
        let k = std::f64::consts::PI;
        let params = WaveParams::new(k).unwrap();
        let f = exact_fields([1.0, 0.0], &params).unwrap().f;
        assert!((f.re - 1.0).abs() < 1e-14 && f.im == 0.0);
    }

    #[test]
    fn symmetric_under_axis_swap_and_deterministic() {
        let params = WaveParams::new(23.0).unwrap();
        for p in random_points(50, 3) {
            let a = exact_fields(p, &params).unwrap();
            let b = exact_fields([p[1], p[0]], &params).unwrap();
            assert_eq!(a.u, b.u);
            assert_eq!(a, exact_fields(p, &params).unwrap());
        }
    }

    #[test]
    fn impedance_data_uses_the_given_normal() {
        let params = WaveParams::new(10.0).unwrap();
        let fld = exact_fields([1.5, 0.8], &params).unwrap();
        let g = fld.g([1.0, 0.0]);
        assert_eq!(g, fld.grad[0] + C64::new(0.0, 10.0) * fld.u);
    }

    #[test]
    fn guards() {
        let params = WaveParams::new(10.0).unwrap();
        assert!(exact_fields([0.05, 0.0], &params).is_err());
        assert!(WaveParams::new(0.0).is_err());
        assert!(WaveParams::new(-1.0).is_err());
        assert!(WaveParams::new(400.0).is_err());
    }

    #[test]
    fn linear_solution_has_consistent_data() {
        let lin = GlobalLinear {
            k: 3.0,
            coefficients: [C64::new(1.0, -1.0), C64::new(0.5, 0.0), C64::new(0.0, 2.0)],
        };
        let fld = lin.fields([0.7, 1.2]).unwrap();
        assert_eq!(fld.f, -fld.u * 9.0);
        assert_eq!(fld.grad, [C64::new(0.5, 0.0), C64::new(0.0, 2.0)]);
    }
}
