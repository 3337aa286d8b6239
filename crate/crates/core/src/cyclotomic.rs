//! Exact arithmetic with sums of d-th roots of unity.
//!
//! Values like Jacobi sums are accumulated in the group ring
//! Z[x]/(x^d − 1): a vector of d integer coefficients with cyclic-shift
//! multiplication. Identities in Z[ζ_d] (for instance |J|² = q^{n−1}) are
//! checked by reducing modulo the d-th cyclotomic polynomial Φ_d, which is
//! computed exactly by the recursion Φ_d = (x^d − 1) / Π_{e|d, e<d} Φ_e.

use num::{BigInt, One, Zero};

/// An element Σ c_i·ζ^i of the group ring Z[ζ] with ζ^d = 1, stored as the
/// coefficient vector (c_0, ..., c_{d−1}).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycloElement {
    coeffs: Vec<BigInt>,
    order: u64,
}

impl CycloElement {
    pub fn zero(order: u64) -> CycloElement {
        assert!(order > 0);
        CycloElement {
            coeffs: vec![BigInt::zero(); order as usize],
            order,
        }
    }

    pub fn from_integer(order: u64, n: BigInt) -> CycloElement {
        let mut e = CycloElement::zero(order);
        e.coeffs[0] = n;
        e
    }

    pub fn from_coeffs(coeffs: Vec<BigInt>) -> CycloElement {
        assert!(!coeffs.is_empty());
        let order = coeffs.len() as u64;
        CycloElement { coeffs, order }
    }

    /// ζ^k as a ring element.
    pub fn root_power(order: u64, k: u64) -> CycloElement {
        let mut e = CycloElement::zero(order);
        e.coeffs[(k % order) as usize] = BigInt::one();
        e
    }

    pub fn order(&self) -> u64 {
        self.order
    }
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Add n to the coefficient of ζ^k.
    pub fn add_root_multiple(&mut self, k: u64, n: BigInt) {
        let i = (k % self.order) as usize;
        self.coeffs[i] += n;
    }

    pub fn add(&self, other: &CycloElement) -> CycloElement {
        assert_eq!(self.order, other.order);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        CycloElement {
            coeffs,
            order: self.order,
        }
    }

    /// Cyclic convolution: (Σ a_iζ^i)(Σ b_jζ^j) with ζ^d = 1.
    pub fn mul(&self, other: &CycloElement) -> CycloElement {
        assert_eq!(self.order, other.order);
        let d = self.order as usize;
        let mut coeffs = vec![BigInt::zero(); d];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                coeffs[(i + j) % d] += a * b;
            }
        }
        CycloElement {
            coeffs,
            order: self.order,
        }
    }

    /// Complex conjugation ζ ↦ ζ^{−1}: index reversal.
    pub fn conjugate(&self) -> CycloElement {
        let d = self.order as usize;
        let mut coeffs = vec![BigInt::zero(); d];
        coeffs[0] = self.coeffs[0].clone();
        for i in 1..d {
            coeffs[d - i] = self.coeffs[i].clone();
        }
        CycloElement {
            coeffs,
            order: self.order,
        }
    }

    /// Canonical representative in Z[ζ_d] = Z[x]/Φ_d(x): the remainder of
    /// the coefficient polynomial modulo Φ_d, degree < φ(d), ascending.
    pub fn canonical(&self) -> Vec<BigInt> {
        let phi = cyclotomic_polynomial(self.order);
        let mut rem = self.coeffs.clone();
        poly_rem_exactish(&mut rem, &phi);
        rem
    }

    /// True when the element equals the rational integer n in Z[ζ_d].
    pub fn equals_integer(&self, n: &BigInt) -> bool {
        let c = self.canonical();
        if c.is_empty() {
            return n.is_zero();
        }
        c[0] == *n && c[1..].iter().all(|x| x.is_zero())
    }
}

/// Remainder of `a` modulo the monic polynomial `m` (ascending coefficients),
/// in place; `a` is truncated to deg(m) − 1 coefficients.
fn poly_rem_exactish(a: &mut Vec<BigInt>, m: &[BigInt]) {
    let dm = m.len() - 1;
    debug_assert!(m[dm].is_one());
    while a.len() > dm {
        let lead = a.pop().unwrap();
        if lead.is_zero() {
            continue;
        }
        let shift = a.len() - dm;
        for (i, mi) in m.iter().take(dm).enumerate() {
            let delta = &lead * mi;
            a[shift + i] -= delta;
        }
    }
    while a.last().is_some_and(|x| x.is_zero()) {
        a.pop();
    }
}

/// Exact quotient of polynomials with integer coefficients (ascending),
/// panicking if the division is not exact; used only inside the cyclotomic
/// recursion where exactness is guaranteed.
fn poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut rem: Vec<BigInt> = num.to_vec();
    let dd = den.len() - 1;
    let mut quot = vec![BigInt::zero(); rem.len() - dd];
    while rem.len() > dd {
        let lead = rem.last().unwrap().clone();
        let pos = rem.len() - 1 - dd;
        let coef = &lead / &den[dd];
        debug_assert_eq!(&coef * &den[dd], lead);
        quot[pos] = coef.clone();
        for (i, di) in den.iter().enumerate() {
            let delta = &coef * di;
            rem[pos + i] -= delta;
        }
        while rem.last().is_some_and(|x| x.is_zero()) {
            rem.pop();
        }
        if rem.is_empty() {
            break;
        }
    }
    assert!(rem.is_empty(), "inexact polynomial division");
    quot
}

/// The d-th cyclotomic polynomial, ascending integer coefficients.
pub fn cyclotomic_polynomial(d: u64) -> Vec<BigInt> {
    assert!(d > 0);
    // x^d − 1
    let mut num = vec![BigInt::zero(); d as usize + 1];
    num[0] = BigInt::from(-1);
    num[d as usize] = BigInt::one();
    if d == 1 {
        return num;
    }
    let mut den = vec![BigInt::one()];
    for e in 1..d {
        if d.is_multiple_of(e) {
            den = poly_mul(&den, &cyclotomic_polynomial(e));
        }
    }
    poly_div_exact(&num, &den)
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
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

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn cyclotomic_polynomials_small_orders() {
        assert_eq!(cyclotomic_polynomial(1), ints(&[-1, 1]));
        assert_eq!(cyclotomic_polynomial(2), ints(&[1, 1]));
        assert_eq!(cyclotomic_polynomial(3), ints(&[1, 1, 1]));
        assert_eq!(cyclotomic_polynomial(4), ints(&[1, 0, 1]));
        assert_eq!(cyclotomic_polynomial(5), ints(&[1, 1, 1, 1, 1]));
        assert_eq!(cyclotomic_polynomial(6), ints(&[1, -1, 1]));
        assert_eq!(cyclotomic_polynomial(12), ints(&[1, 0, -1, 0, 1]));
    }

    #[test]
    fn ring_multiplication_wraps_cyclically() {
        let a = CycloElement::from_coeffs(ints(&[1, 1, 0, 0, 0])); // 1 + ζ
        let b = CycloElement::from_coeffs(ints(&[0, 0, 0, 0, 1])); // ζ⁴
        let p = a.mul(&b);
        assert_eq!(p.coeffs(), ints(&[1, 0, 0, 0, 1]).as_slice()); // ζ⁴ + ζ⁵ = 1 + ζ⁴
    }

    #[test]
    fn conjugation_reverses_indices() {
        let a = CycloElement::from_coeffs(ints(&[7, 1, 2, 3]));
        assert_eq!(a.conjugate().coeffs(), ints(&[7, 3, 2, 1]).as_slice());
        let prod = a.mul(&a.conjugate());
        assert_eq!(prod, prod.conjugate()); // |a|² is real
    }

    #[test]
    fn canonical_reduction_mod_phi() {
        // ζ₃²  ↦  −1 − ζ₃
        let a = CycloElement::root_power(3, 2);
        assert_eq!(a.canonical(), ints(&[-1, -1]));
        // 1 + ζ + ζ² + ζ³ + ζ⁴ = 0 in Z[ζ₅]
        let mut s = CycloElement::zero(5);
        for k in 0..5 {
            s.add_root_multiple(k, BigInt::one());
        }
        assert!(s.equals_integer(&BigInt::zero()));
        // (1 + ζ₄)(1 − ζ₄) = 1 − ζ₄² = 2 since ζ₄² = −1
        let u = CycloElement::from_coeffs(ints(&[1, 1, 0, 0]));
        let v = CycloElement::from_coeffs(ints(&[1, -1, 0, 0]));
        assert!(u.mul(&v).equals_integer(&BigInt::from(2)));
    }
}
