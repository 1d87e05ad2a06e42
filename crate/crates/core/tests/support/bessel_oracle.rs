//! Fixed-point big-integer power series for `J_0` and `J_1`.
//!
//! Shares nothing with the library implementation: the argument is taken
//! apart into its exact binary mantissa and exponent, and every term of
//! `Σ (-1)^m (x/2)^(2m+n) / (m! (m+n)!)` is carried with `SCALE_BITS`
//! fractional bits, so cancellation at x = 300 (terms near 1e128) is harmless.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

const SCALE_BITS: u64 = 700;

fn to_fixed(x: f64) -> BigInt {
    assert!(x.is_finite() && x >= 0.0);
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let (mantissa, e) = if exp == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
    };
    let shift = e + SCALE_BITS as i64;
    assert!(shift >= 0, "argument too small for the oracle scale");
    BigInt::from(mantissa) << shift as usize
}

fn from_fixed(v: &BigInt) -> f64 {
    const KEEP: u64 = 120;
    let coarse = v >> (SCALE_BITS - KEEP) as usize;
    coarse.to_f64().unwrap() / 2f64.powi(KEEP as i32)
}

/// `J_order(x)` correctly rounded to well below `f64` resolution.
pub fn bessel_j_oracle(order: u32, x: f64) -> f64 {
    assert!(order <= 1);
    let half = to_fixed(x) >> 1usize;
    let q = (&half * &half) >> SCALE_BITS as usize;
    let mut term = if order == 0 {
        BigInt::from(1) << SCALE_BITS as usize
    } else {
        half
    };
    let mut sum = term.clone();
    let mut m: u64 = 1;
    while !term.is_zero() {
        term = -((&term * &q) >> SCALE_BITS as usize) / BigInt::from(m * (m + order as u64));
        sum += &term;
        m += 1;
    }
    from_fixed(&sum)
}

/// Amplitude envelope used to decide whether a sample sits near a zero.
pub fn envelope(x: f64) -> f64 {
    (2.0 / (std::f64::consts::PI * x.max(1.0))).sqrt()
}
