//! Bessel functions `J_0` and `J_1` on `[0, 300]`.
//!
//! Below [`SERIES_LIMIT`] the power series is summed in double-double
//! arithmetic: the alternating terms reach ~1e9 at x = 25, so plain `f64`
//! summation would lose most of the significant digits. Above it the Hankel
//! asymptotic expansion converges to full precision within a few dozen terms.

use crate::error::{invalid, Result};

pub const MAX_ARGUMENT: f64 = 300.0;
pub const SERIES_LIMIT: f64 = 25.0;

/// `J_order(x)` for `order` in {0, 1} and `0 <= x <= 300`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if order > 1 {
        return Err(invalid(format!("Bessel order {order} not supported (0 or 1)")));
    }
    if !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(invalid(format!(
            "Bessel argument {x} outside the validated range [0, {MAX_ARGUMENT}]"
        )));
    }
    Ok(if x <= SERIES_LIMIT {
        series(order, x)
    } else {
        asymptotic(order, x)
    })
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let r = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(r.hi, r.lo + t.lo)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        // remainder self - q1 * d, exact through fma
        let p = q1 * d;
        let e = q1.mul_add(d, -p);
        let r = two_sum(self.hi, -p);
        let q2 = (r.hi + (r.lo - e + self.lo)) / d;
        quick_two_sum(q1, q2)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

fn series(order: u32, x: f64) -> f64 {
    let half = x * 0.5;
    let q = Dd::from(half).mul(Dd::from(half)).neg();
    let mut term = if order == 0 { Dd::from(1.0) } else { Dd::from(half) };
    let mut sum = term;
    for m in 1..200u32 {
        term = term.mul(q).div_f64(f64::from(m) * f64::from(m + order));
        sum = sum.add(term);
        if term.hi.abs() <= 1e-34 * sum.hi.abs().max(1e-300) || term.hi == 0.0 {
            break;
        }
    }
    sum.hi + sum.lo
}

fn asymptotic(order: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(order * order);
    // a_k = prod_{j=1..k} (mu - (2j-1)^2) / (k! 8^k); P gets even k, Q odd k
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60u32 {
        let odd = f64::from(2 * k - 1);
        a *= (mu - odd * odd) / (f64::from(k) * 8.0 * x);
        if a.abs() >= last || a == 0.0 {
            break;
        }
        last = a.abs();
        let signed = if (k / 2) % 2 == 0 { a } else { -a };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
        if a.abs() < 1e-18 {
            break;
        }
    }
    let (s, c) = x.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // chi = x - (2 order + 1) pi / 4, expanded to avoid reducing a shifted argument
    let (cos_chi, sin_chi) = match order {
        0 => ((c + s) * r, (s - c) * r),
        _ => ((s - c) * r, -(s + c) * r),
    };
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}
