//! Small exact-arithmetic helpers for integer polynomials (ascending
//! coefficients), binomial coefficients, and Weil-type coefficient bounds.

use num::{BigInt, One, Signed, Zero};

use crate::error::{Error, Result};

pub type IntPoly = Vec<BigInt>;

pub fn poly_one() -> IntPoly {
    vec![BigInt::one()]
}

pub fn poly_mul(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// Upper bound for |j-th coefficient| of Π_{m=1..D} (1 − e_m t) when every
/// |e_m| = q^{w/2}: binom(D, j) · q^{jw/2}, rounded up when jw is odd.
pub fn weil_coefficient_bound(degree: usize, j: usize, q: u64, weight: u32) -> BigInt {
    let e = j as u64 * weight as u64;
    let qb = BigInt::from(q);
    let power = if e.is_multiple_of(2) {
        qb.pow((e / 2) as u32)
    } else {
        // ceil(q^{e/2}) = isqrt(q^e) + 1 unless q^e is a perfect square
        let full = qb.pow(e as u32);
        let root = full.sqrt();
        if &root * &root == full {
            root
        } else {
            root + 1
        }
    };
    binomial(degree as u64, j as u64) * power
}

/// Verify the functional equation of a weight-w numerator of degree D:
/// P_D² = q^{wD} and P_j·P_D = P_{D−j}·q^{wj} for all j. The first failing
/// index is reported.
pub fn check_functional_equation(poly: &[BigInt], q: u64, weight: u32) -> Result<()> {
    let d = poly.len() - 1;
    let qb = BigInt::from(q);
    let lead = &poly[d];
    let expo = weight as u64 * d as u64;
    if !expo.is_multiple_of(2) {
        // odd total weight: compare squares throughout
        if lead * lead != qb.pow(expo as u32) {
            return Err(Error::FunctionalEquation { degree: d, index: d });
        }
    } else if (lead * lead) != qb.pow(expo as u32) {
        return Err(Error::FunctionalEquation { degree: d, index: d });
    }
    for j in 0..=d {
        let lhs = &poly[j] * lead;
        let rhs = &poly[d - j] * qb.pow(weight * j as u32);
        if lhs != rhs && lhs != -&rhs {
            return Err(Error::FunctionalEquation { degree: d, index: j });
        }
    }
    // the sign must be coherent: P_j·P_D − σ·q^{wj}·P_{D−j} = 0 for one σ
    for sigma in [1i64, -1] {
        let s = BigInt::from(sigma);
        if (0..=d).all(|j| &poly[j] * lead == &s * &poly[d - j] * qb.pow(weight * j as u32)) {
            return Ok(());
        }
    }
    Err(Error::FunctionalEquation { degree: d, index: 0 })
}

/// Render an integer polynomial in the variable `var`, e.g. "1 + t − 7t³".
pub fn poly_to_string(poly: &[BigInt], var: &str) -> String {
    if poly.iter().all(|c| c.is_zero()) {
        return "0".into();
    }
    let mut out = String::new();
    for (j, c) in poly.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let sign = c.is_negative();
        if out.is_empty() {
            if sign {
                out.push('-');
            }
        } else {
            out.push_str(if sign { " - " } else { " + " });
        }
        let show_mag = !mag.is_one() || j == 0;
        if show_mag {
            out.push_str(&mag.to_string());
        }
        if j >= 1 {
            if show_mag {
                out.push('*');
            }
            out.push_str(var);
            if j >= 2 {
                out.push_str(&format!("^{j}"));
            }
        }
    }
    out
}
