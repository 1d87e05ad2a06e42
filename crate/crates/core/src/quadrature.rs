//! Quadrature on triangles and edges.
//!
//! Triangle rules are stored in barycentric coordinates with weights that sum
//! to one, so `∫_τ f ≈ |τ| Σ w_q f(x_q)`. Edge rules live on `[0, 1]` with
//! weights summing to one, so `∫_e f ≈ h_e Σ w_q f(x_q)`.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// A rule integrating every polynomial of total degree `degree` exactly.
    ///
    /// Degrees up to 6 use symmetric rules (1, 3 and 12 points); higher
    /// degrees fall back to a collapsed Gauss-Legendre product rule.
    pub fn of_degree(degree: usize) -> Self {
        match degree {
            0 | 1 => Self::centroid(),
            2 => Self::edge_midpoints(),
            3..=6 => Self::dunavant6(),
            _ => Self::collapsed_gauss(degree),
        }
    }

    fn centroid() -> Self {
        let t = 1.0 / 3.0;
        TriangleRule {
            points: vec![[t, t, t]],
            weights: vec![1.0],
            degree: 1,
        }
    }

    fn edge_midpoints() -> Self {
        TriangleRule {
            points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// 12-point degree-6 rule (Dunavant).
    fn dunavant6() -> Self {
        const A1: f64 = 0.063_089_014_491_502_228_340_331_602_870_819;
        const W1: f64 = 0.050_844_906_370_206_816_920_936_809_106_869;
        const A2: f64 = 0.249_286_745_170_910_421_291_638_553_107_02;
        const W2: f64 = 0.116_786_275_726_379_366_025_289_611_385_58;
        const B1: f64 = 0.053_145_049_844_816_947_353_249_671_631_398;
        const B2: f64 = 0.310_352_451_033_784_405_416_607_733_956_55;
        const W3: f64 = 0.082_851_075_618_373_575_193_553_456_420_442;

        let mut points = Vec::with_capacity(12);
        let mut weights = Vec::with_capacity(12);
        for (a, w) in [(A1, W1), (A2, W2)] {
            let c = 1.0 - 2.0 * a;
            points.extend([[c, a, a], [a, c, a], [a, a, c]]);
            weights.extend([w; 3]);
        }
        let c = 1.0 - B1 - B2;
        points.extend([
            [B1, B2, c],
            [B2, B1, c],
            [B1, c, B2],
            [B2, c, B1],
            [c, B1, B2],
            [c, B2, B1],
        ]);
        weights.extend([W3; 6]);
        TriangleRule {
            points,
            weights,
            degree: 6,
        }
    }

    /// Conical product rule: Gauss-Legendre on the unit square pulled back
    /// through the collapsing map `(s, t) -> (s (1 - t), t)`.
    pub fn collapsed_gauss(degree: usize) -> Self {
        let n = (degree + 3) / 2;
        let (x, w) = gauss_legendre_unit(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&t, &wt) in x.iter().zip(&w) {
            for (&s, &ws) in x.iter().zip(&w) {
                let l1 = s * (1.0 - t);
                let l2 = t;
                points.push([1.0 - l1 - l2, l1, l2]);
                // Jacobian (1 - t); reference area 1/2 normalised to 1.
                weights.push(2.0 * ws * wt * (1.0 - t));
            }
        }
        TriangleRule {
            points,
            weights,
            degree,
        }
    }

    /// Uniform refinement into `4^level` congruent sub-triangles with this
    /// rule applied on each.
    pub fn subdivided(&self, level: u32) -> Self {
        if level == 0 {
            return self.clone();
        }
        let m = 1usize << level;
        let inv = 1.0 / m as f64;
        let scale = inv * inv;
        let mut points = Vec::with_capacity(self.points.len() * m * m);
        let mut weights = Vec::with_capacity(self.points.len() * m * m);
        // lattice point (i, j) has barycentrics (1 - (i + j)/m, i/m, j/m)
        let lattice = |i: usize, j: usize| {
            let (a, b) = (i as f64 * inv, j as f64 * inv);
            [1.0 - a - b, a, b]
        };
        let mut push = |v: [[f64; 3]; 3]| {
            for (p, &w) in self.points.iter().zip(&self.weights) {
                let mut q = [0.0; 3];
                for (qc, c) in q.iter_mut().zip(0..3) {
                    *qc = p[0] * v[0][c] + p[1] * v[1][c] + p[2] * v[2][c];
                }
                points.push(q);
                weights.push(w * scale);
            }
        };
        for j in 0..m {
            for i in 0..m - j {
                push([lattice(i, j), lattice(i + 1, j), lattice(i, j + 1)]);
                if i + j + 1 < m {
                    push([lattice(i + 1, j), lattice(i + 1, j + 1), lattice(i, j + 1)]);
                }
            }
        }
        TriangleRule {
            points,
            weights,
            degree: self.degree,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EdgeRule {
    pub fn gauss(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("edge rule needs at least one point"));
        }
        let (points, weights) = gauss_legendre_unit(n);
        Ok(EdgeRule { points, weights })
    }

    /// Polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        2 * self.points.len() - 1
    }
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]` (weights sum to 1).
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Per-element subdivision policy for oscillatory integrands: refine until
/// `k * diam / 2^level <= target`, capped at `max_level`.
#[derive(Debug, Clone)]
pub struct OscillationAdaptiveRule {
    pub target: f64,
    levels: Vec<TriangleRule>,
}

impl OscillationAdaptiveRule {
    pub fn new(base: &TriangleRule, target: f64, max_level: u32) -> Self {
        let levels = (0..=max_level).map(|l| base.subdivided(l)).collect();
        OscillationAdaptiveRule { target, levels }
    }

    pub fn max_level(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn level_for(&self, k: f64, diam: f64) -> u32 {
        let mut level = 0;
        let mut size = k * diam;
        while size > self.target && level < self.max_level() {
            size *= 0.5;
            level += 1;
        }
        level
    }

    pub fn rule_for(&self, k: f64, diam: f64) -> &TriangleRule {
        &self.levels[self.level_for(k, diam) as usize]
    }
}

impl Default for OscillationAdaptiveRule {
    fn default() -> Self {
        Self::new(&TriangleRule::of_degree(6), 1.0, 6)
    }
}
